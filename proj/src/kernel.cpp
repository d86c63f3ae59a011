#include "tvogp/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tvogp {

void KernelHyperparams::validate() const {
    if (!(lengthscale > 0.0)) throw std::invalid_argument("kernel: lengthscale must be positive");
    if (!(omega >= 0.0 && omega <= 1.0)) throw std::invalid_argument("kernel: omega must lie in [0,1]");
    if (!(noise_variance > 0.0)) throw std::invalid_argument("kernel: noise variance must be positive");
}

Eigen::VectorXd sorted_copy(const Eigen::VectorXd& v) {
    Eigen::VectorXd out = v;
    std::sort(out.data(), out.data() + out.size());
    return out;
}

double spatial_kernel(const Eigen::VectorXd& beta_a, const Eigen::VectorXd& beta_b,
                      double lengthscale, bool permutation_invariant) {
    if (beta_a.size() != beta_b.size()) {
        throw std::invalid_argument("spatial_kernel: dimension mismatch");
    }
    double sq_dist;
    if (permutation_invariant) {
        sq_dist = (sorted_copy(beta_a) - sorted_copy(beta_b)).squaredNorm();
    } else {
        sq_dist = (beta_a - beta_b).squaredNorm();
    }
    return std::exp(-sq_dist / (2.0 * lengthscale * lengthscale));
}

double time_kernel(double t_a, double t_b, double omega) {
    if (!(omega >= 0.0 && omega <= 1.0)) {
        throw std::invalid_argument("time_kernel: omega must lie in [0,1]");
    }
    const double v = std::abs(t_a - t_b) / 2.0;
    if (v == 0.0) return 1.0;
    return std::pow(1.0 - omega, v);
}

double product_kernel(const ArmPoint& a, const ArmPoint& b, const KernelHyperparams& hyp) {
    return spatial_kernel(a.beta, b.beta, hyp.lengthscale, hyp.permutation_invariant) *
           time_kernel(a.round, b.round, hyp.omega);
}

Eigen::MatrixXd gram_matrix(const std::vector<ArmPoint>& points, const KernelHyperparams& hyp) {
    const Eigen::Index n = static_cast<Eigen::Index>(points.size());
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double kij = product_kernel(points[static_cast<std::size_t>(i)],
                                              points[static_cast<std::size_t>(j)], hyp);
            K(i, j) = kij;
            K(j, i) = kij;
        }
    }
    return K;
}

Eigen::VectorXd kernel_vector(const std::vector<ArmPoint>& points, const ArmPoint& query,
                              const KernelHyperparams& hyp) {
    Eigen::VectorXd k(static_cast<Eigen::Index>(points.size()));
    for (Eigen::Index i = 0; i < k.size(); ++i) {
        k(i) = product_kernel(points[static_cast<std::size_t>(i)], query, hyp);
    }
    return k;
}

}  // namespace tvogp
