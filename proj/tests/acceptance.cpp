// Acceptance gate: one pass/fail line per criterion; exit code is the
// number of failed criteria.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tvogp/acquisition.hpp"
#include "tvogp/artifacts.hpp"
#include "tvogp/bandit.hpp"
#include "tvogp/gp.hpp"
#include "tvogp/models.hpp"
#include "tvogp/regret_lab.hpp"
#include "tvogp/tvo.hpp"

using namespace tvogp;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

bool report(int number, const std::string& name, Outcome (*fn)()) {
    const auto start = Clock::now();
    Outcome out;
    try {
        out = fn();
    } catch (const std::exception& e) {
        out.pass = false;
        out.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count() /
        1000.0;
    std::printf("[%s] criterion %2d: %s (%.1fs)%s%s\n", out.pass ? "PASS" : "FAIL", number,
                name.c_str(), secs, out.detail.empty() ? "" : " -- ", out.detail.c_str());
    std::fflush(stdout);
    return out.pass;
}

Eigen::VectorXd vec_from(std::mt19937_64& rng, int n, double lo, double hi) {
    std::uniform_real_distribution<double> unif(lo, hi);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = unif(rng);
    return v;
}

std::vector<LogWeightBatch> sandwich_fixtures() {
    std::vector<LogWeightBatch> batches;
    for (int i = 0; i < 50; ++i) {
        const int K = 2 + i % 7;
        const int D = 4 + i % 5;
        const BernoulliLatentModel m = random_model(K, D, 9000 + i, 0.8);
        batches.push_back(enumerate_latents(m, generate_dataset(m, 2, 9100 + i)));
    }
    return batches;
}

// 1. lower <= evidence <= upper for every schedule family, slack 1e-10
Outcome sandwich_suite() {
    Outcome out;
    std::mt19937_64 rng(1);
    double worst = 0.0;
    int checks = 0;
    for (const LogWeightBatch& b : sandwich_fixtures()) {
        const double ev = exact_log_evidence(b).mean();
        for (std::size_t d : {std::size_t{1}, std::size_t{2}, std::size_t{5}, std::size_t{10}}) {
            std::vector<std::vector<double>> partitions;
            partitions.push_back(linear_schedule(d).evaluation_partition());
            partitions.push_back(log_schedule(std::max<std::size_t>(d, 2), 0.025)
                                     .evaluation_partition());
            partitions.push_back(moments_schedule(b, d).evaluation_partition());
            for (int r = 0; r < 5; ++r) {
                partitions.push_back(random_schedule(d, rng()).evaluation_partition());
            }
            for (const auto& part : partitions) {
                const double lower = tvo_lower(b, part);
                const double upper = tvo_upper(b, part);
                worst = std::max({worst, lower - ev, ev - upper});
                ++checks;
            }
        }
    }
    out.pass = worst <= 1e-10;
    std::ostringstream ss;
    ss << checks << " sandwiches, max slack violation " << worst;
    out.detail = ss.str();
    return out;
}

// 2. tvo_lower on [0,1] equals the exact ELBO to 1e-12
Outcome elbo_identity() {
    Outcome out;
    double worst = 0.0;
    for (const LogWeightBatch& b : sandwich_fixtures()) {
        const double lower = tvo_lower(b, {0.0, 1.0});
        const double elbo = exact_path_expectation(b, 0.0).mean();
        worst = std::max(worst, std::abs(lower - elbo));
    }
    out.pass = worst <= 1e-12;
    std::ostringstream ss;
    ss << "max |tvo_lower([0,1]) - ELBO| = " << worst;
    out.detail = ss.str();
    return out;
}

// 3. uniform left sums improve monotonically under dyadic refinement
Outcome refinement_monotonicity() {
    Outcome out;
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        const BernoulliLatentModel m = random_model(6, 8, 9500 + i, 0.9);
        const LogWeightBatch b = enumerate_latents(m, generate_dataset(m, 2, 9600 + i));
        double prev = tvo_lower(b, linear_schedule(1).evaluation_partition());
        for (std::size_t d = 2; d <= 512; d *= 2) {
            const double cur = tvo_lower(b, linear_schedule(d).evaluation_partition());
            worst = std::max(worst, prev - cur);
            prev = cur;
        }
    }
    out.pass = worst <= 1e-12;
    std::ostringstream ss;
    ss << "max refinement decrease " << worst;
    out.detail = ss.str();
    return out;
}

struct DenseOracle {
    Eigen::MatrixXd Kinv;
    double log_det = 0.0;
    Eigen::VectorXd y;

    DenseOracle(const GPState& state) {
        const auto& pts = state.inputs();
        const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
        Eigen::MatrixXd K = gram_matrix(pts, state.hyperparams());
        K.diagonal().array() += state.hyperparams().noise_variance;
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
        Kinv = lu.inverse();
        log_det = std::log(std::abs(lu.determinant()));
        y = state.targets();
        (void)n;
    }

    PosteriorStats posterior(const GPState& state, const ArmPoint& q) const {
        const Eigen::VectorXd ks = kernel_vector(state.inputs(), q, state.hyperparams());
        PosteriorStats p;
        p.mean = ks.dot(Kinv * y);
        p.variance = 1.0 - ks.dot(Kinv * ks);
        return p;
    }

    double lml(const GPState& state) const {
        const Eigen::Index n = y.size();
        return -0.5 * y.dot(Kinv * y) - 0.5 * log_det -
               0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
    }
};

GPState random_state(std::mt19937_64& rng, int n, int dim, bool perm_invariant) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    KernelHyperparams hyp;
    hyp.lengthscale = 0.15 + 0.65 * unif(rng);
    hyp.omega = 0.01 + 0.3 * unif(rng);
    hyp.noise_variance = 0.01 + 0.5 * unif(rng);
    hyp.permutation_invariant = perm_invariant;
    GPState state(hyp);
    for (int i = 0; i < n; ++i) {
        ArmPoint p;
        p.beta = vec_from(rng, dim, 0.05, 0.95);
        p.round = i + 1;
        state.add_observation(std::move(p), gauss(rng));
    }
    return state;
}

// 4. posterior / log marginal vs dense solves, gradients vs central FD
Outcome gp_correctness() {
    Outcome out;
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double worst = 0.0;
    auto rel = [](double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); };
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(unif(rng) * 48);
        GPState state = random_state(rng, n, 1 + trial % 3, trial % 2 == 0);
        const DenseOracle oracle(state);
        for (int q = 0; q < 3; ++q) {
            ArmPoint query;
            query.beta = vec_from(rng, 1 + trial % 3, 0.05, 0.95);
            query.round = n + 1 + q;
            const PosteriorStats got = state.posterior(query);
            const PosteriorStats want = oracle.posterior(state, query);
            worst = std::max({worst, rel(got.mean, want.mean), rel(got.variance, want.variance)});
        }
        worst = std::max(worst, rel(state.log_marginal_likelihood(), oracle.lml(state)));
    }
    if (worst > 1e-8) {
        out.pass = false;
        std::ostringstream ss;
        ss << "dense-oracle mismatch " << worst;
        out.detail = ss.str();
        return out;
    }

    double worst_grad = 0.0;
    const double h = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
        GPState state = random_state(rng, 6 + trial % 10, 1 + trial % 2, trial % 2 == 0);
        const Eigen::Vector3d grad = state.grad_hyperparams();
        const KernelHyperparams base = state.hyperparams();
        for (int p = 0; p < 3; ++p) {
            auto lml_at = [&](double delta) {
                KernelHyperparams hyp = base;
                double* field = p == 0 ? &hyp.lengthscale : p == 1 ? &hyp.omega
                                                                   : &hyp.noise_variance;
                *field += delta;
                GPState probe = state;
                probe.set_hyperparams(hyp);
                return probe.log_marginal_likelihood();
            };
            const double fd = (lml_at(h) - lml_at(-h)) / (2.0 * h);
            worst_grad = std::max(worst_grad,
                                  std::abs(grad(p) - fd) / std::max(1.0, std::abs(fd)));
        }
    }
    out.pass = worst_grad <= 1e-4;
    std::ostringstream ss;
    ss << "oracle mismatch " << worst << ", FD gradient mismatch " << worst_grad;
    out.detail = ss.str();
    return out;
}

// 5. exact UCB equality and 1e-12 posterior agreement under permutations
Outcome permutation_invariance() {
    Outcome out;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double worst_post = 0.0;
    bool ucb_exact = true;
    for (int trial = 0; trial < 100; ++trial) {
        const int dim = 2 + trial % 4;
        GPState state = random_state(rng, 4 + trial % 8, dim, true);
        Schedule s;
        for (int i = 0; i < dim; ++i) s.interior.push_back(0.05 + 0.9 * unif(rng));
        Schedule p = s;
        std::shuffle(p.interior.begin(), p.interior.end(), rng);
        const double round = state.size() + 1.0;
        if (ucb_value(state, s, round, 2.0) != ucb_value(state, p, round, 2.0)) ucb_exact = false;

        ArmPoint qa, qb;
        qa.beta = Eigen::Map<const Eigen::VectorXd>(s.interior.data(), dim);
        qb.beta = Eigen::Map<const Eigen::VectorXd>(p.interior.data(), dim);
        qa.round = qb.round = round;
        const PosteriorStats pa = state.posterior(qa);
        const PosteriorStats pb = state.posterior(qb);
        worst_post = std::max({worst_post, std::abs(pa.mean - pb.mean),
                               std::abs(pa.variance - pb.variance)});
    }
    out.pass = ucb_exact && worst_post <= 1e-12;
    std::ostringstream ss;
    ss << "ucb exact: " << (ucb_exact ? "yes" : "no") << ", max posterior gap " << worst_post;
    out.detail = ss.str();
    return out;
}

// 6. realized information gain never exceeds the blockwise bound
Outcome information_gain_bound() {
    Outcome out;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double omegas[] = {0.0, 0.01, 0.1, 0.5};
    int violations = 0;
    bool tightening = true;
    for (int trial = 0; trial < 50; ++trial) {
        KernelHyperparams hyp;
        hyp.lengthscale = 0.1 + 0.5 * unif(rng);
        hyp.omega = omegas[trial % 4];
        hyp.noise_variance = 0.02 + 0.3 * unif(rng);
        hyp.permutation_invariant = false;
        const int R = 4 + trial % 29;  // T/w <= 32
        std::vector<ArmPoint> pulls;
        for (int t = 1; t <= R; ++t) {
            ArmPoint p;
            p.beta = Eigen::VectorXd::Constant(1, unif(rng));
            p.round = t;
            pulls.push_back(std::move(p));
        }
        const BoundReport rep = bound_report(pulls, hyp, AcquisitionConfig{});
        if (rep.violated) ++violations;
        for (std::size_t i = 0; i < rep.rhs_n52.size(); ++i) {
            if (rep.rhs_n52[i] > rep.rhs_n3[i] + 1e-12) tightening = false;
        }
    }
    out.pass = violations == 0 && tightening;
    std::ostringstream ss;
    ss << violations << " violations over 50 configs, N^{5/2} <= N^3 everywhere: "
       << (tightening ? "yes" : "no");
    out.detail = ss.str();
    return out;
}

// 7. GP-UCB vs random selection on shared-noise synthetic objectives
Outcome regret_comparison() {
    Outcome out;
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 1; s <= 20; ++s) seeds.push_back(s);
    AcquisitionConfig acq;
    acq.T = 100;
    acq.w = 1;
    const PolicyComparison cmp = compare_policies(
        64, 1, 0.01, 0.2, 0.05, 100, {PolicyKind::GpUcb, PolicyKind::Random}, seeds, acq);
    const double gp = cmp.mean_cum_regret[0].back();
    const double rnd = cmp.mean_cum_regret[1].back();
    out.pass = gp <= 0.8 * rnd;
    std::ostringstream ss;
    ss << "mean final regret: gp-ucb " << gp << " vs random " << rnd << " (ratio "
       << gp / rnd << ")";
    out.detail = ss.str();
    return out;
}

// 8. with omega=0 the per-round regret rate drops by >= 2x from t=10 to t=100
Outcome sublinearity() {
    Outcome out;
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 1; s <= 20; ++s) seeds.push_back(s);
    AcquisitionConfig acq;
    acq.T = 100;
    acq.w = 1;
    const PolicyComparison cmp =
        compare_policies(64, 1, 0.0, 0.2, 0.05, 100, {PolicyKind::GpUcb}, seeds, acq);
    const double rate10 = cmp.mean_cum_regret[0][9] / 10.0;
    const double rate100 = cmp.mean_cum_regret[0][99] / 100.0;
    out.pass = rate100 <= 0.5 * rate10;
    std::ostringstream ss;
    ss << "mean R_t/t: " << rate10 << " at t=10, " << rate100 << " at t=100";
    out.detail = ss.str();
    return out;
}

// 9. end-to-end: bandit median final evidence within 0.05 nats of the
//    linear baseline (or better), telescoping exact on every run
Outcome end_to_end_training() {
    Outcome out;
    const Dataset data =
        dataset_from_json(read_file(std::string(TVOGP_SOURCE_DIR) + "/data/bernoulli_k8_d12_n64.json"));
    const BernoulliLatentModel init = random_model(8, 12, 999, 0.3);
    BanditConfig cfg;
    cfg.T = 600;
    cfg.d = 5;

    double worst_telescope = 0.0;
    auto telescope = [&](const BanditTrace& t) {
        double acc = 0.0;
        for (const auto& r : t.rounds) acc += r.raw_reward;
        worst_telescope = std::max(
            worst_telescope, std::abs(acc - (t.final_log_evidence - t.initial_log_evidence)));
    };

    std::vector<double> bandit_final, linear_final;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const BanditTrace b = run_bandit(init, data, cfg, seed);
        telescope(b);
        bandit_final.push_back(b.final_exact_log_evidence);
        BaselineConfig base;
        base.kind = BaselineKind::Linear;
        const BanditTrace l = run_baseline(init, data, cfg, base, seed);
        telescope(l);
        linear_final.push_back(l.final_exact_log_evidence);
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    const double mb = median(bandit_final), ml = median(linear_final);
    out.pass = mb >= ml - 0.05 && worst_telescope <= 1e-9;
    std::ostringstream ss;
    ss << "median final log p(x): bandit " << mb << ", linear " << ml
       << "; max telescoping error " << worst_telescope;
    out.detail = ss.str();
    return out;
}

// 10. SNIS at S=1e5 within 3 chunked Monte-Carlo standard errors
Outcome snis_consistency() {
    Outcome out;
    int failures = 0;
    double worst_sigma = 0.0;
    for (int pair = 0; pair < 20; ++pair) {
        const BernoulliLatentModel m = random_model(2 + pair % 3, 4 + pair % 3, 9800 + pair);
        const Dataset data = generate_dataset(m, 1, 9900 + pair);
        const double beta = static_cast<double>(pair) / 19.0;
        const double truth = exact_path_expectation(enumerate_latents(m, data), beta)(0);

        const int S = 100000, chunks = 50, chunk_size = S / chunks;
        const LogWeightBatch sampled = sample_latents(m, data, S, 10000 + pair);
        const double est = snis_expectation(sampled, beta)(0);
        double mean = 0.0, m2 = 0.0;
        for (int c = 0; c < chunks; ++c) {
            LogWeightBatch chunk;
            chunk.log_w = sampled.log_w.block(0, c * chunk_size, 1, chunk_size);
            const double v = snis_expectation(chunk, beta)(0);
            const double delta = v - mean;
            mean += delta / (c + 1);
            m2 += delta * (v - mean);
        }
        const double se = std::sqrt(m2 / (chunks - 1) / chunks);
        const double sigmas = std::abs(est - truth) / se;
        worst_sigma = std::max(worst_sigma, sigmas);
        if (sigmas > 3.0) ++failures;
    }
    out.pass = failures == 0;
    std::ostringstream ss;
    ss << "20 pairs, worst deviation " << worst_sigma << " standard errors";
    out.detail = ss.str();
    return out;
}

// 11. frozen kappa values and monotonicity in the round count
Outcome kappa_evaluator() {
    Outcome out;
    AcquisitionConfig cfg;
    cfg.d = 1;
    cfg.delta = 0.1;
    cfg.a = cfg.b = 1.0;
    double worst = std::abs(kappa(100, cfg) - 47.21247403296722);
    cfg.d = 5;
    worst = std::max(worst, std::abs(kappa(100, cfg) - 147.861844763651));
    cfg.d = 2;
    cfg.delta = 0.05;
    cfg.a = 2.0;
    cfg.b = 0.5;
    worst = std::max(worst, std::abs(kappa(8, cfg) - 38.76981628280292));

    AcquisitionConfig plain;
    plain.d = 3;
    bool monotone = true;
    double prev = kappa(2, plain);
    for (int r = 3; r <= 1000; ++r) {
        const double k = kappa(r, plain);
        if (k < prev) monotone = false;
        prev = k;
    }
    out.pass = worst <= 1e-10 && monotone;
    std::ostringstream ss;
    ss << "max deviation from frozen values " << worst << ", monotone in rounds: "
       << (monotone ? "yes" : "no");
    out.detail = ss.str();
    return out;
}

}  // namespace

int main() {
    int failures = 0;
    failures += !report(1, "sandwich suite", sandwich_suite);
    failures += !report(2, "ELBO identity", elbo_identity);
    failures += !report(3, "refinement monotonicity", refinement_monotonicity);
    failures += !report(4, "GP correctness", gp_correctness);
    failures += !report(5, "permutation invariance", permutation_invariance);
    failures += !report(6, "information-gain bound", information_gain_bound);
    failures += !report(7, "regret comparison", regret_comparison);
    failures += !report(8, "sublinearity", sublinearity);
    failures += !report(9, "end-to-end training", end_to_end_training);
    failures += !report(10, "SNIS consistency", snis_consistency);
    failures += !report(11, "kappa evaluator", kappa_evaluator);
    std::printf("%d/11 criteria passed\n", 11 - failures);
    return failures;
}
