#ifndef TVOGP_TVO_HPP
#define TVOGP_TVO_HPP

#include <Eigen/Dense>
#include <vector>

#include "tvogp/schedule.hpp"

namespace tvogp {

enum class Provenance { Sampled, Enumerated };

// Per-datum log importance weights log p(x,z) - log q(z|x), one row per
// datum. Enumerated batches cover the whole latent space and carry the
// exact log q mass of every state; sampled batches hold i.i.d. draws
// from q.
struct LogWeightBatch {
    Eigen::MatrixXd log_w;
    Eigen::MatrixXd log_q;  // enumerated only, same shape as log_w
    Provenance provenance = Provenance::Sampled;

    Eigen::Index num_data() const { return log_w.rows(); }
    Eigen::Index num_samples() const { return log_w.cols(); }
    void validate() const;
};

double log_sum_exp(const Eigen::VectorXd& v);

// SNIS estimate of E_{pi_beta}[log w] per datum: softmax(beta*log_w)
// against log_w, with max-subtraction.
Eigen::VectorXd snis_expectation(const LogWeightBatch& batch, double beta);

// Exact E_{pi_beta}[log w] per datum by enumeration:
// pi_beta proportional to q * w^beta.
Eigen::VectorXd exact_path_expectation(const LogWeightBatch& batch, double beta);

// log Z_1 = log p(x) per datum, exact.
Eigen::VectorXd exact_log_evidence(const LogWeightBatch& batch);

// Left-Riemann TVO lower bound, averaged over data. The partition is
// the evaluation form [0, ..., 1].
double tvo_lower(const LogWeightBatch& batch, const std::vector<double>& partition);

// Right-Riemann upper bound.
double tvo_upper(const LogWeightBatch& batch, const std::vector<double>& partition);

// Knots placed so the exact integrand is uniformly spaced along the
// y-axis; falls back to linear_schedule when the integrand is flat.
Schedule moments_schedule(const LogWeightBatch& batch, std::size_t d);

}  // namespace tvogp

#endif
