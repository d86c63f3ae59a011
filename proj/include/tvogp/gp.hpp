#ifndef TVOGP_GP_HPP
#define TVOGP_GP_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tvogp/kernel.hpp"

namespace tvogp {

struct PosteriorStats {
    double mean = 0.0;
    double variance = 1.0;
};

struct HyperBounds {
    double lengthscale_min = 0.05, lengthscale_max = 2.0;
    double omega_min = 1e-4, omega_max = 0.5;
    double noise_min = 1e-6, noise_max = 1.0;
};

// Exact GP over [beta, t] inputs with the product kernel. Observation
// history plus a cached Cholesky of K + sigma_f^2 I; the cache is
// invalidated by any mutation.
class GPState {
public:
    GPState() = default;
    explicit GPState(KernelHyperparams hyp) : hyp_(hyp) { hyp_.validate(); }

    void add_observation(ArmPoint x, double y);
    void set_hyperparams(const KernelHyperparams& hyp);
    const KernelHyperparams& hyperparams() const { return hyp_; }
    std::size_t size() const { return inputs_.size(); }
    const std::vector<ArmPoint>& inputs() const { return inputs_; }
    Eigen::VectorXd targets() const;

    PosteriorStats posterior(const ArmPoint& query) const;
    double log_marginal_likelihood() const;

    // Gradient of log_marginal_likelihood w.r.t.
    // (lengthscale, omega, noise_variance).
    Eigen::Vector3d grad_hyperparams() const;

    // MAP / type-II ML fit with a flat prior: multi-start BFGS in
    // log coordinates. Keeps the previous hyperparameters when the
    // optimization fails or does not improve.
    void fit_map(const HyperBounds& bounds = {}, std::uint64_t seed = 0);

    std::string to_json() const;
    static GPState from_json(const std::string& text);

private:
    struct Factor {
        Eigen::LLT<Eigen::MatrixXd> llt;
        double jitter = 0.0;
    };
    const Factor& factor() const;

    std::vector<ArmPoint> inputs_;
    std::vector<double> y_;
    KernelHyperparams hyp_;
    mutable std::optional<Factor> cache_;
};

}  // namespace tvogp

#endif
