#include "tvogp/regret_lab.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tvogp {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Eigen::MatrixXd make_lattice(int arms_per_dim, int dims) {
    if (dims < 1 || dims > 2) throw std::invalid_argument("sample_tv_objective: dims must be 1 or 2");
    const int n = dims == 1 ? arms_per_dim : arms_per_dim * arms_per_dim;
    if (n > 256) throw std::invalid_argument("sample_tv_objective: more than 256 arms");
    Eigen::MatrixXd arms(n, dims);
    auto coord = [&](int i) {
        return arms_per_dim == 1 ? 0.5
                                 : static_cast<double>(i) / static_cast<double>(arms_per_dim - 1);
    };
    if (dims == 1) {
        for (int i = 0; i < n; ++i) arms(i, 0) = coord(i);
    } else {
        for (int i = 0; i < arms_per_dim; ++i) {
            for (int j = 0; j < arms_per_dim; ++j) {
                arms(i * arms_per_dim + j, 0) = coord(i);
                arms(i * arms_per_dim + j, 1) = coord(j);
            }
        }
    }
    return arms;
}

}  // namespace

SyntheticTVObjective sample_tv_objective(int arms_per_dim, int dims, double omega,
                                         double lengthscale, double noise_variance, int rounds,
                                         std::uint64_t seed) {
    SyntheticTVObjective obj;
    obj.arms = make_lattice(arms_per_dim, dims);
    obj.hyp.lengthscale = lengthscale;
    obj.hyp.omega = omega;
    obj.hyp.noise_variance = noise_variance;
    obj.hyp.permutation_invariant = false;  // grid arms are scalar coordinates, not schedules
    obj.hyp.validate();

    const int n_arms = static_cast<int>(obj.arms.rows());
    const Eigen::Index total = static_cast<Eigen::Index>(n_arms) * rounds;
    if (total > 8192) throw std::invalid_argument("sample_tv_objective: joint dimension above 8192");

    // The joint Gram over (arm, round) pairs is K_time kron K_space, and
    // the time factor (1-omega)^{|dt|/2} is AR(1) with step correlation
    // rho = sqrt(1-omega). Sampling the recursion f_t = rho f_{t-1} +
    // sqrt(1-rho^2) L z_t reproduces that covariance exactly with a
    // single spatial factorization.
    std::vector<ArmPoint> points;
    points.reserve(static_cast<std::size_t>(n_arms));
    for (int a = 0; a < n_arms; ++a) {
        ArmPoint p;
        p.beta = obj.arms.row(a).transpose();
        p.round = 1;
        points.push_back(std::move(p));
    }
    Eigen::MatrixXd K = gram_matrix(points, obj.hyp);
    K.diagonal().array() += 1e-10;
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    double jitter = 1e-9;
    while (llt.info() != Eigen::Success && jitter <= 1e-4) {
        Eigen::MatrixXd Kj = K;
        Kj.diagonal().array() += jitter;
        llt.compute(Kj);
        jitter *= 10.0;
    }
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("sample_tv_objective: spatial Gram factorization failed");
    }
    const Eigen::MatrixXd L = llt.matrixL();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto draw = [&] {
        Eigen::VectorXd z(n_arms);
        for (int a = 0; a < n_arms; ++a) z(a) = gauss(rng);
        return Eigen::VectorXd(L * z);
    };

    const double rho = std::sqrt(1.0 - omega);
    const double innovation = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    obj.values.resize(rounds, n_arms);
    Eigen::VectorXd f = draw();
    obj.values.row(0) = f.transpose();
    for (int t = 1; t < rounds; ++t) {
        f = rho * f + innovation * draw();
        obj.values.row(t) = f.transpose();
    }
    return obj;
}

std::vector<double> cumulative_regret(const std::vector<int>& chosen,
                                      const SyntheticTVObjective& objective) {
    std::vector<double> out;
    out.reserve(chosen.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < chosen.size(); ++t) {
        if (chosen[t] < 0 || chosen[t] >= objective.num_arms()) {
            throw std::invalid_argument("cumulative_regret: arm index off the grid");
        }
        const Eigen::Index row = static_cast<Eigen::Index>(t);
        acc += objective.values.row(row).maxCoeff() - objective.values(row, chosen[t]);
        out.push_back(acc);
    }
    return out;
}

double information_gain(const Eigen::MatrixXd& K, double noise_variance) {
    if (K.rows() != K.cols()) throw std::invalid_argument("information_gain: K must be square");
    if (!(noise_variance > 0.0)) throw std::invalid_argument("information_gain: bad noise variance");
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(K.rows(), K.cols()) + K / noise_variance;
    const Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("information_gain: factorization failed (K not PSD?)");
    }
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < M.rows(); ++i) log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
    return 0.5 * log_det;
}

BoundReport bound_report(const std::vector<ArmPoint>& pulls, const KernelHyperparams& hyp,
                         const AcquisitionConfig& cfg) {
    if (pulls.empty()) throw std::invalid_argument("bound_report: no pulls");
    const int R = static_cast<int>(pulls.size());
    BoundReport report;
    report.greedy_gamma_beta = R > 64;

    report.gamma = information_gain(gram_matrix(pulls, hyp), hyp.noise_variance);

    KernelHyperparams spatial_only = hyp;
    spatial_only.omega = 0.0;  // time factor == 1: spatial kernel alone

    report.rhs_n52.resize(static_cast<std::size_t>(R));
    report.rhs_n3.resize(static_cast<std::size_t>(R));
    report.gamma_beta.resize(static_cast<std::size_t>(R));
    report.min_rhs = std::numeric_limits<double>::infinity();
    for (int block = 1; block <= R; ++block) {
        double max_block_gain = 0.0;
        for (int start = 0; start < R; start += block) {
            const int len = std::min(block, R - start);
            std::vector<ArmPoint> chunk(pulls.begin() + start, pulls.begin() + start + len);
            max_block_gain =
                std::max(max_block_gain,
                         information_gain(gram_matrix(chunk, spatial_only), hyp.noise_variance));
        }
        const double n = static_cast<double>(block);
        const double blocks_factor = 1.0 + static_cast<double>(R) / n;
        const double rhs52 =
            blocks_factor * (max_block_gain + std::pow(n, 2.5) * hyp.omega / hyp.noise_variance);
        const double rhs3 =
            blocks_factor * (max_block_gain + n * n * n * hyp.omega / hyp.noise_variance);
        report.gamma_beta[static_cast<std::size_t>(block - 1)] = max_block_gain;
        report.rhs_n52[static_cast<std::size_t>(block - 1)] = rhs52;
        report.rhs_n3[static_cast<std::size_t>(block - 1)] = rhs3;
        if (rhs52 < report.min_rhs) {
            report.min_rhs = rhs52;
            report.minimizing_block = block;
        }
    }
    report.violated = report.gamma > report.min_rhs + 1e-9;
    report.c1 = 8.0 / std::log1p(hyp.noise_variance);
    AcquisitionConfig kcfg = cfg;
    kcfg.d = static_cast<int>(pulls.front().beta.size());
    report.kappa = kappa(R, kcfg);
    report.regret_bound =
        std::sqrt(report.gamma * report.c1 * report.kappa * static_cast<double>(R)) + 2.0;
    return report;
}

std::string BoundReport::to_json() const {
    nlohmann::json j;
    j["gamma"] = gamma;
    j["min_rhs"] = min_rhs;
    j["minimizing_block"] = minimizing_block;
    j["rhs_n52"] = rhs_n52;
    j["rhs_n3"] = rhs_n3;
    j["gamma_beta"] = gamma_beta;
    j["c1"] = c1;
    j["kappa"] = kappa;
    j["regret_bound"] = regret_bound;
    j["violated"] = violated;
    j["greedy_gamma_beta"] = greedy_gamma_beta;
    return j.dump();
}

PolicyRun run_policy(const SyntheticTVObjective& objective, PolicyKind kind,
                     const AcquisitionConfig& cfg, std::uint64_t noise_seed,
                     std::uint64_t policy_seed) {
    const int R = objective.rounds();
    const int n_arms = objective.num_arms();

    std::mt19937_64 noise_rng(noise_seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(objective.hyp.noise_variance));
    Eigen::VectorXd noise(R);
    for (int t = 0; t < R; ++t) noise(t) = gauss(noise_rng);

    std::mt19937_64 policy_rng(policy_seed);
    std::uniform_int_distribution<int> uniform_arm(0, n_arms - 1);

    PolicyRun run;
    GPState gp(objective.hyp);
    AcquisitionConfig kcfg = cfg;
    kcfg.d = static_cast<int>(objective.arms.cols());

    int fixed_arm = 0;
    if (kind == PolicyKind::FixedBestInitial) {
        objective.values.row(0).maxCoeff(&fixed_arm);
    }

    for (int t = 1; t <= R; ++t) {
        int arm = 0;
        switch (kind) {
            case PolicyKind::Random:
                arm = uniform_arm(policy_rng);
                break;
            case PolicyKind::FixedBestInitial:
                arm = fixed_arm;
                break;
            case PolicyKind::GpUcb: {
                if (gp.size() == 0) {
                    arm = uniform_arm(policy_rng);
                    break;
                }
                const double kappa_val = kappa(t, kcfg);
                double best = -std::numeric_limits<double>::infinity();
                for (int a = 0; a < n_arms; ++a) {
                    ArmPoint q;
                    q.beta = objective.arms.row(a).transpose();
                    q.round = t;
                    const PosteriorStats p = gp.posterior(q);
                    const double ucb = p.mean + std::sqrt(kappa_val) * std::sqrt(p.variance);
                    if (ucb > best) {
                        best = ucb;
                        arm = a;
                    }
                }
                break;
            }
        }
        const double y = objective.values(t - 1, arm) + noise(t - 1);
        if (kind == PolicyKind::GpUcb) {
            ArmPoint x;
            x.beta = objective.arms.row(arm).transpose();
            x.round = t;
            gp.add_observation(std::move(x), y);
        }
        run.chosen.push_back(arm);
        run.rewards.push_back(y);
    }
    run.cum_regret = cumulative_regret(run.chosen, objective);
    return run;
}

namespace {
const char* policy_name(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::GpUcb: return "gp-ucb";
        case PolicyKind::Random: return "random";
        case PolicyKind::FixedBestInitial: return "fixed-best-initial";
    }
    return "?";
}
}  // namespace

PolicyComparison compare_policies(int arms_per_dim, int dims, double omega, double lengthscale,
                                  double noise_variance, int rounds,
                                  const std::vector<PolicyKind>& policies,
                                  const std::vector<std::uint64_t>& seeds,
                                  const AcquisitionConfig& cfg) {
    PolicyComparison cmp;
    cmp.cum_regret.resize(policies.size());
    cmp.mean_cum_regret.assign(policies.size(),
                               std::vector<double>(static_cast<std::size_t>(rounds), 0.0));
    for (PolicyKind k : policies) cmp.policy_names.emplace_back(policy_name(k));

    for (std::uint64_t seed : seeds) {
        const SyntheticTVObjective objective = sample_tv_objective(
            arms_per_dim, dims, omega, lengthscale, noise_variance, rounds, mix_seed(seed, 1));
        const std::uint64_t noise_seed = mix_seed(seed, 2);
        for (std::size_t p = 0; p < policies.size(); ++p) {
            const PolicyRun run =
                run_policy(objective, policies[p], cfg, noise_seed, mix_seed(seed, 3 + p));
            for (int t = 0; t < rounds; ++t) {
                cmp.mean_cum_regret[p][static_cast<std::size_t>(t)] +=
                    run.cum_regret[static_cast<std::size_t>(t)] /
                    static_cast<double>(seeds.size());
            }
            cmp.cum_regret[p].push_back(run.cum_regret);
        }
    }
    return cmp;
}

std::string PolicyComparison::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "seed,policy,round,instantaneous_regret,cumulative_regret\n";
    for (std::size_t p = 0; p < policy_names.size(); ++p) {
        for (std::size_t s = 0; s < cum_regret[p].size(); ++s) {
            double prev = 0.0;
            for (std::size_t t = 0; t < cum_regret[p][s].size(); ++t) {
                const double cum = cum_regret[p][s][t];
                out << s << "," << policy_names[p] << "," << (t + 1) << "," << (cum - prev) << ","
                    << cum << "\n";
                prev = cum;
            }
        }
    }
    return out.str();
}

}  // namespace tvogp
