#include "tvogp/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace tvogp {

namespace {
constexpr double kPiSq = 9.869604401089358;
}

double kappa(int round, const AcquisitionConfig& cfg) {
    if (cfg.kappa_override) return *cfg.kappa_override;
    if (round < 1) throw std::invalid_argument("kappa: round must be >= 1");
    const double r = static_cast<double>(round);
    const double d = static_cast<double>(cfg.d);
    const double arg = kPiSq * r * r / (2.0 * cfg.delta);
    const double inner = std::log(d * cfg.a * arg);
    if (inner <= 0.0) {
        throw std::domain_error(
            "kappa: log(d*a*pi^2*r^2/(2*delta)) <= 0; increase the horizon or override kappa");
    }
    return 2.0 * std::log(arg) + 2.0 * d * std::log(d * cfg.b * r * r * std::sqrt(inner));
}

double ucb_value(const GPState& state, const Schedule& beta, double round, double kappa_val) {
    if (kappa_val < 0.0) throw std::invalid_argument("ucb_value: kappa must be nonnegative");
    ArmPoint q;
    q.beta = Eigen::Map<const Eigen::VectorXd>(beta.interior.data(),
                                               static_cast<Eigen::Index>(beta.interior.size()));
    q.round = round;
    const PosteriorStats p = state.posterior(q);
    return p.mean + std::sqrt(kappa_val) * std::sqrt(p.variance);
}

namespace {

struct UcbEval {
    double value;
    Eigen::VectorXd grad;
};

// Factorization and precomputed training-input quantities shared by all
// UCB evaluations of one maximization.
struct AscentContext {
    std::vector<Eigen::VectorXd> betas;  // sorted when the invariant flag is on
    Eigen::VectorXd time_factors;        // k_T(round, t_i)
    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::VectorXd alpha;
    double lengthscale2 = 1.0;
    double sqrt_kappa = 0.0;

    AscentContext(const GPState& state, double round, double kappa_val) {
        const auto& hyp = state.hyperparams();
        lengthscale2 = hyp.lengthscale * hyp.lengthscale;
        sqrt_kappa = std::sqrt(kappa_val);
        const auto& X = state.inputs();
        const Eigen::Index n = static_cast<Eigen::Index>(X.size());
        if (n == 0) return;
        betas.reserve(X.size());
        time_factors.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& xi = X[static_cast<std::size_t>(i)];
            betas.push_back(hyp.permutation_invariant ? sorted_copy(xi.beta) : xi.beta);
            time_factors(i) = time_kernel(round, xi.round, hyp.omega);
        }
        Eigen::MatrixXd A = gram_matrix(X, hyp);
        A.diagonal().array() += hyp.noise_variance;
        llt.compute(A);
        double jitter = 1e-10;
        while (llt.info() != Eigen::Success && jitter <= 1e-4) {
            Eigen::MatrixXd Aj = A;
            Aj.diagonal().array() += jitter;
            llt.compute(Aj);
            jitter *= 10.0;
        }
        if (llt.info() != Eigen::Success) {
            throw std::runtime_error("maximize_acquisition: Gram factorization failed");
        }
        alpha = llt.solve(state.targets());
    }

    // The sorting projection is piecewise a permutation, so on sorted
    // iterates the chain rule reduces to the plain kernel gradient.
    UcbEval eval(const Eigen::VectorXd& q_sorted) const {
        UcbEval out;
        out.grad = Eigen::VectorXd::Zero(q_sorted.size());
        if (betas.empty()) {
            out.value = sqrt_kappa;  // prior: mean 0, variance 1
            return out;
        }
        const Eigen::Index n = time_factors.size();
        Eigen::VectorXd k_star(n);
        Eigen::MatrixXd dk(q_sorted.size(), n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd diff = q_sorted - betas[static_cast<std::size_t>(i)];
            k_star(i) = std::exp(-diff.squaredNorm() / (2.0 * lengthscale2)) * time_factors(i);
            dk.col(i) = -k_star(i) / lengthscale2 * diff;
        }
        const Eigen::VectorXd c = llt.solve(k_star);
        const double mean = k_star.dot(alpha);
        double var = 1.0 - k_star.dot(c);
        if (var < 0.0) var = 0.0;
        const double sigma = std::sqrt(var);
        out.value = mean + sqrt_kappa * sigma;
        out.grad = dk * alpha;
        if (sigma > 1e-12) out.grad += sqrt_kappa / (2.0 * sigma) * (-2.0 * (dk * c));
        return out;
    }
};

Eigen::VectorXd project(Eigen::VectorXd v, double lo, double hi) {
    std::sort(v.data(), v.data() + v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = std::clamp(v(i), lo, hi);
    return v;
}

}  // namespace

Schedule maximize_acquisition(const GPState& state, double round, double kappa_val,
                              std::size_t d, double lo, double hi, std::uint64_t seed,
                              const Schedule* warm_start, int n_starts, int max_iters) {
    if (d == 0) throw std::invalid_argument("maximize_acquisition: d must be >= 1");
    const AscentContext ctx(state, round, kappa_val);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(lo, hi);

    std::vector<Eigen::VectorXd> starts;
    if (warm_start && warm_start->dim() == d) {
        Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(
            warm_start->interior.data(), static_cast<Eigen::Index>(d));
        starts.push_back(project(w, lo, hi));
    }
    while (static_cast<int>(starts.size()) < n_starts) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(d));
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = unif(rng);
        starts.push_back(project(v, lo, hi));
    }

    Eigen::VectorXd best = starts.front();
    double best_val = ctx.eval(best).value;
    for (const Eigen::VectorXd& start : starts) {
        Eigen::VectorXd z = start;
        UcbEval e = ctx.eval(z);
        if (e.value > best_val) {
            best_val = e.value;
            best = z;
        }
        double step = 0.1;
        for (int iter = 0; iter < max_iters; ++iter) {
            if (e.grad.norm() < 1e-10) break;
            bool improved = false;
            for (int ls = 0; ls < 12; ++ls) {
                const Eigen::VectorXd z_new = project(z + step * e.grad, lo, hi);
                const UcbEval e_new = ctx.eval(z_new);
                if (e_new.value > e.value + 1e-14) {
                    z = z_new;
                    e = e_new;
                    step *= 2.0;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!improved) break;
            if (e.value > best_val) {
                best_val = e.value;
                best = z;
            }
        }
    }

    Schedule result;
    result.lo = lo;
    result.hi = hi;
    result.interior.assign(best.data(), best.data() + best.size());
    return result;
}

}  // namespace tvogp
