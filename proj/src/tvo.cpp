#include "tvogp/tvo.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tvogp {

namespace {

void check_partition(const std::vector<double>& partition) {
    if (partition.size() < 2 || partition.front() != 0.0 || partition.back() != 1.0) {
        throw std::invalid_argument("tvo: partition must run from 0 to 1");
    }
    for (std::size_t j = 1; j < partition.size(); ++j) {
        if (!(partition[j] > partition[j - 1])) {
            throw std::invalid_argument("tvo: partition must be strictly increasing");
        }
    }
}

// softmax(weights) . values with max-subtraction
double weighted_mean(const Eigen::VectorXd& log_weights, const Eigen::VectorXd& values) {
    const double m = log_weights.maxCoeff();
    if (!std::isfinite(m)) {
        throw std::runtime_error("tvo: all importance weights are zero (degenerate proposal)");
    }
    const Eigen::ArrayXd p = (log_weights.array() - m).exp();
    return (p * values.array()).sum() / p.sum();
}

}  // namespace

void LogWeightBatch::validate() const {
    if (!log_w.allFinite()) throw std::invalid_argument("LogWeightBatch: non-finite log weights");
    if (provenance == Provenance::Enumerated) {
        if (log_q.rows() != log_w.rows() || log_q.cols() != log_w.cols()) {
            throw std::invalid_argument("LogWeightBatch: enumerated batch needs log_q masses");
        }
        for (Eigen::Index i = 0; i < log_q.rows(); ++i) {
            const double total = std::exp(log_sum_exp(log_q.row(i)));
            if (std::abs(total - 1.0) > 1e-12) {
                throw std::invalid_argument("LogWeightBatch: q masses must sum to 1");
            }
        }
    }
}

double log_sum_exp(const Eigen::VectorXd& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return -std::numeric_limits<double>::infinity();
    return m + std::log((v.array() - m).exp().sum());
}

Eigen::VectorXd snis_expectation(const LogWeightBatch& batch, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("snis: beta outside [0,1]");
    Eigen::VectorXd out(batch.num_data());
    for (Eigen::Index i = 0; i < batch.num_data(); ++i) {
        const Eigen::VectorXd lw = batch.log_w.row(i);
        out(i) = weighted_mean(beta * lw, lw);
    }
    return out;
}

Eigen::VectorXd exact_path_expectation(const LogWeightBatch& batch, double beta) {
    if (batch.provenance != Provenance::Enumerated) {
        throw std::invalid_argument("exact_path_expectation: needs an enumerated batch");
    }
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("path: beta outside [0,1]");
    Eigen::VectorXd out(batch.num_data());
    for (Eigen::Index i = 0; i < batch.num_data(); ++i) {
        const Eigen::VectorXd lw = batch.log_w.row(i);
        const Eigen::VectorXd lq = batch.log_q.row(i);
        out(i) = weighted_mean(lq + beta * lw, lw);
    }
    return out;
}

Eigen::VectorXd exact_log_evidence(const LogWeightBatch& batch) {
    if (batch.provenance != Provenance::Enumerated) {
        throw std::invalid_argument("exact_log_evidence: needs an enumerated batch");
    }
    Eigen::VectorXd out(batch.num_data());
    for (Eigen::Index i = 0; i < batch.num_data(); ++i) {
        out(i) = log_sum_exp(batch.log_q.row(i) + batch.log_w.row(i));
    }
    return out;
}

namespace {

Eigen::VectorXd path_expectation(const LogWeightBatch& batch, double beta) {
    return batch.provenance == Provenance::Enumerated ? exact_path_expectation(batch, beta)
                                                      : snis_expectation(batch, beta);
}

double riemann_sum(const LogWeightBatch& batch, const std::vector<double>& partition, bool left) {
    check_partition(partition);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(batch.num_data());
    for (std::size_t j = 0; j + 1 < partition.size(); ++j) {
        const double width = partition[j + 1] - partition[j];
        const double knot = left ? partition[j] : partition[j + 1];
        acc += width * path_expectation(batch, knot);
    }
    return acc.mean();
}

}  // namespace

double tvo_lower(const LogWeightBatch& batch, const std::vector<double>& partition) {
    return riemann_sum(batch, partition, true);
}

double tvo_upper(const LogWeightBatch& batch, const std::vector<double>& partition) {
    return riemann_sum(batch, partition, false);
}

Schedule moments_schedule(const LogWeightBatch& batch, std::size_t d) {
    if (d == 0) throw std::invalid_argument("moments_schedule: d must be >= 1");
    auto integrand = [&](double beta) { return exact_path_expectation(batch, beta).mean(); };
    const double y0 = integrand(0.0);
    const double y1 = integrand(1.0);
    if (y1 - y0 < 1e-10) return linear_schedule(d);

    Schedule s;
    s.lo = 0.0;
    s.hi = 1.0;
    for (std::size_t j = 1; j < d; ++j) {
        const double target = y0 + (static_cast<double>(j) / static_cast<double>(d)) * (y1 - y0);
        double lo = 0.0, hi = 1.0;
        double mid = 0.5;
        for (int iter = 0; iter < 200; ++iter) {
            mid = 0.5 * (lo + hi);
            const double y = integrand(mid);
            if (std::abs(y - target) <= 1e-8) break;
            if (y < target) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        s.interior.push_back(mid);
    }
    return s;
}

}  // namespace tvogp
