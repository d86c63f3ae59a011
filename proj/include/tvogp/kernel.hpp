#ifndef TVOGP_KERNEL_HPP
#define TVOGP_KERNEL_HPP

#include <Eigen/Dense>
#include <vector>

namespace tvogp {

struct KernelHyperparams {
    double lengthscale = 0.3;      // sigma_beta
    double omega = 0.01;           // forgetting factor, in [0,1]
    double noise_variance = 0.01;  // sigma_f^2
    bool permutation_invariant = true;

    void validate() const;
};

// A spatio-temporal input: schedule knots plus the bandit round index.
struct ArmPoint {
    Eigen::VectorXd beta;
    double round = 0.0;
};

// exp(-||b - b'||^2 / (2 sigma^2)); inputs are sorted first when the
// invariant flag is set.
double spatial_kernel(const Eigen::VectorXd& beta_a, const Eigen::VectorXd& beta_b,
                      double lengthscale, bool permutation_invariant = false);

// (1 - omega)^(|t - t'| / 2)
double time_kernel(double t_a, double t_b, double omega);

double product_kernel(const ArmPoint& a, const ArmPoint& b, const KernelHyperparams& hyp);

Eigen::MatrixXd gram_matrix(const std::vector<ArmPoint>& points, const KernelHyperparams& hyp);

// Cross-covariances k(query, points_i).
Eigen::VectorXd kernel_vector(const std::vector<ArmPoint>& points, const ArmPoint& query,
                              const KernelHyperparams& hyp);

Eigen::VectorXd sorted_copy(const Eigen::VectorXd& v);

}  // namespace tvogp

#endif
