#include "tvogp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace tvogp {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double omega_factor_derivative(double v, double omega) {
    // d/d omega of (1 - omega)^v = -v (1 - omega)^(v - 1)
    if (v == 0.0) return 0.0;
    const double base = 1.0 - omega;
    if (base <= 0.0) {
        if (v < 1.0) throw std::domain_error("grad_hyperparams: omega=1 with |dt|<2 is unbounded");
        if (v == 1.0) return -1.0;
        return 0.0;
    }
    return -v * std::pow(base, v - 1.0);
}

}  // namespace

void GPState::add_observation(ArmPoint x, double y) {
    if (!inputs_.empty() && inputs_.front().beta.size() != x.beta.size()) {
        throw std::invalid_argument("GPState: inconsistent arm dimension");
    }
    inputs_.push_back(std::move(x));
    y_.push_back(y);
    cache_.reset();
}

void GPState::set_hyperparams(const KernelHyperparams& hyp) {
    hyp.validate();
    hyp_ = hyp;
    cache_.reset();
}

Eigen::VectorXd GPState::targets() const {
    return Eigen::Map<const Eigen::VectorXd>(y_.data(), static_cast<Eigen::Index>(y_.size()));
}

const GPState::Factor& GPState::factor() const {
    if (cache_) return *cache_;
    Eigen::MatrixXd A = gram_matrix(inputs_, hyp_);
    A.diagonal().array() += hyp_.noise_variance;
    double jitter = hyp_.noise_variance < 1e-8 ? 1e-8 : 0.0;
    if (jitter > 0.0) A.diagonal().array() += jitter;
    Factor f;
    f.llt.compute(A);
    double extra = 1e-10;
    while (f.llt.info() != Eigen::Success && extra <= 1e-4) {
        Eigen::MatrixXd Aj = A;
        Aj.diagonal().array() += extra;
        f.llt.compute(Aj);
        jitter += extra;
        extra *= 10.0;
    }
    if (f.llt.info() != Eigen::Success) {
        throw std::runtime_error("GPState: Cholesky failed after jitter escalation (n=" +
                                 std::to_string(inputs_.size()) + ")");
    }
    f.jitter = jitter;
    cache_ = std::move(f);
    return *cache_;
}

PosteriorStats GPState::posterior(const ArmPoint& query) const {
    PosteriorStats out;
    const double k_self = product_kernel(query, query, hyp_);  // 1 by construction
    if (inputs_.empty()) {
        out.mean = 0.0;
        out.variance = k_self;
        return out;
    }
    const Factor& f = factor();
    const Eigen::VectorXd k_star = kernel_vector(inputs_, query, hyp_);
    const Eigen::VectorXd alpha = f.llt.solve(targets());
    out.mean = k_star.dot(alpha);
    double var = k_self - k_star.dot(f.llt.solve(k_star));
    if (var < 0.0) {
        if (var < -1e-10) {
            throw std::runtime_error("GPState: posterior variance below tolerance: " +
                                     std::to_string(var));
        }
        var = 0.0;
    }
    out.variance = var;
    return out;
}

double GPState::log_marginal_likelihood() const {
    if (inputs_.empty()) throw std::invalid_argument("log_marginal_likelihood: empty history");
    const Factor& f = factor();
    const Eigen::VectorXd y = targets();
    const Eigen::VectorXd alpha = f.llt.solve(y);
    const double n = static_cast<double>(inputs_.size());
    double log_det = 0.0;
    const auto& L = f.llt.matrixLLT();
    for (Eigen::Index i = 0; i < L.rows(); ++i) log_det += 2.0 * std::log(L(i, i));
    return -0.5 * y.dot(alpha) - 0.5 * log_det - 0.5 * n * std::log(kTwoPi);
}

Eigen::Vector3d GPState::grad_hyperparams() const {
    if (inputs_.empty()) throw std::invalid_argument("grad_hyperparams: empty history");
    const Eigen::Index n = static_cast<Eigen::Index>(inputs_.size());
    const Factor& f = factor();
    const Eigen::VectorXd y = targets();
    const Eigen::VectorXd alpha = f.llt.solve(y);
    const Eigen::MatrixXd A_inv = f.llt.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd M = alpha * alpha.transpose() - A_inv;

    Eigen::MatrixXd dK_len(n, n), dK_omega(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        dK_len(i, i) = 0.0;
        dK_omega(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const auto& a = inputs_[static_cast<std::size_t>(i)];
            const auto& b = inputs_[static_cast<std::size_t>(j)];
            double sq_dist;
            if (hyp_.permutation_invariant) {
                sq_dist = (sorted_copy(a.beta) - sorted_copy(b.beta)).squaredNorm();
            } else {
                sq_dist = (a.beta - b.beta).squaredNorm();
            }
            const double s = std::exp(-sq_dist / (2.0 * hyp_.lengthscale * hyp_.lengthscale));
            const double v = std::abs(a.round - b.round) / 2.0;
            const double kt = v == 0.0 ? 1.0 : std::pow(1.0 - hyp_.omega, v);
            const double dl = s * kt * sq_dist / std::pow(hyp_.lengthscale, 3);
            const double dw = s * omega_factor_derivative(v, hyp_.omega);
            dK_len(i, j) = dl;
            dK_len(j, i) = dl;
            dK_omega(i, j) = dw;
            dK_omega(j, i) = dw;
        }
    }
    Eigen::Vector3d g;
    g(0) = 0.5 * M.cwiseProduct(dK_len).sum();
    g(1) = 0.5 * M.cwiseProduct(dK_omega).sum();
    g(2) = 0.5 * M.trace();
    return g;
}

namespace {

using Vec3 = Eigen::Vector3d;

Vec3 to_log(const KernelHyperparams& h) {
    return Vec3(std::log(h.lengthscale), std::log(h.omega), std::log(h.noise_variance));
}

KernelHyperparams from_log(const Vec3& z, const KernelHyperparams& proto) {
    KernelHyperparams h = proto;
    h.lengthscale = std::exp(z(0));
    h.omega = std::exp(z(1));
    h.noise_variance = std::exp(z(2));
    return h;
}

Vec3 clamp_log(Vec3 z, const HyperBounds& b) {
    z(0) = std::clamp(z(0), std::log(b.lengthscale_min), std::log(b.lengthscale_max));
    z(1) = std::clamp(z(1), std::log(b.omega_min), std::log(b.omega_max));
    z(2) = std::clamp(z(2), std::log(b.noise_min), std::log(b.noise_max));
    return z;
}

}  // namespace

void GPState::fit_map(const HyperBounds& bounds, std::uint64_t seed) {
    if (inputs_.size() < 2) return;
    const KernelHyperparams previous = hyp_;

    auto objective = [&](const Vec3& z, Vec3* grad) -> double {
        GPState probe = *this;
        probe.set_hyperparams(from_log(z, previous));
        const double val = probe.log_marginal_likelihood();
        if (grad) {
            const Vec3 g = probe.grad_hyperparams();
            // chain rule for the log transform
            (*grad)(0) = g(0) * probe.hyp_.lengthscale;
            (*grad)(1) = g(1) * probe.hyp_.omega;
            (*grad)(2) = g(2) * probe.hyp_.noise_variance;
        }
        return val;
    };

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto random_start = [&]() {
        Vec3 z;
        z(0) = std::log(bounds.lengthscale_min) +
               unif(rng) * (std::log(bounds.lengthscale_max) - std::log(bounds.lengthscale_min));
        z(1) = std::log(bounds.omega_min) +
               unif(rng) * (std::log(bounds.omega_max) - std::log(bounds.omega_min));
        z(2) = std::log(bounds.noise_min) +
               unif(rng) * (std::log(bounds.noise_max) - std::log(bounds.noise_min));
        return z;
    };

    Vec3 best_z = clamp_log(to_log(previous), bounds);
    double best_val;
    try {
        best_val = objective(best_z, nullptr);
    } catch (const std::exception&) {
        return;  // keep previous values when even the warm start is sick
    }

    std::vector<Vec3> starts = {best_z, random_start(), random_start()};
    for (const Vec3& start : starts) {
        try {
            Vec3 z = clamp_log(start, bounds);
            Vec3 grad;
            double val = objective(z, &grad);
            Eigen::Matrix3d H = Eigen::Matrix3d::Identity();  // inverse Hessian estimate
            for (int iter = 0; iter < 100; ++iter) {
                if (grad.norm() < 1e-8) break;
                Vec3 dir = H * grad;
                if (dir.dot(grad) <= 0.0) {
                    dir = grad;
                    H.setIdentity();
                }
                double step = 1.0;
                Vec3 z_new;
                Vec3 grad_new;
                double val_new = val;
                bool improved = false;
                for (int ls = 0; ls < 20; ++ls) {
                    z_new = clamp_log(z + step * dir, bounds);
                    val_new = objective(z_new, &grad_new);
                    if (val_new > val + 1e-12) {
                        improved = true;
                        break;
                    }
                    step *= 0.5;
                }
                if (!improved) break;
                const Vec3 s = z_new - z;
                const Vec3 dg = grad_new - grad;  // note: ascent, curvature pair is (s, -dg)
                const double sy = -s.dot(dg);
                if (sy > 1e-12) {
                    const Vec3 ys = -dg;
                    const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
                    const Eigen::Matrix3d V = I - (ys * s.transpose()) / sy;
                    H = V.transpose() * H * V + (s * s.transpose()) / sy;
                } else {
                    H.setIdentity();
                }
                z = z_new;
                val = val_new;
                grad = grad_new;
            }
            if (val > best_val) {
                best_val = val;
                best_z = z;
            }
        } catch (const std::exception&) {
            // numeric trouble on this start: keep the best so far
        }
    }
    set_hyperparams(from_log(best_z, previous));
}

std::string GPState::to_json() const {
    nlohmann::json j;
    j["y"] = y_;
    j["X"] = nlohmann::json::array();
    for (const auto& p : inputs_) {
        nlohmann::json row;
        row["beta"] = std::vector<double>(p.beta.data(), p.beta.data() + p.beta.size());
        row["t"] = p.round;
        j["X"].push_back(row);
    }
    j["hyp"] = {{"lengthscale", hyp_.lengthscale},
                {"omega", hyp_.omega},
                {"noise_variance", hyp_.noise_variance},
                {"permutation_invariant", hyp_.permutation_invariant}};
    return j.dump();
}

GPState GPState::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    KernelHyperparams hyp;
    hyp.lengthscale = j.at("hyp").at("lengthscale").get<double>();
    hyp.omega = j.at("hyp").at("omega").get<double>();
    hyp.noise_variance = j.at("hyp").at("noise_variance").get<double>();
    hyp.permutation_invariant = j.at("hyp").at("permutation_invariant").get<bool>();
    GPState state(hyp);
    const auto ys = j.at("y").get<std::vector<double>>();
    const auto& X = j.at("X");
    if (X.size() != ys.size()) throw std::invalid_argument("GPState::from_json: |X| != |y|");
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const auto b = X[i].at("beta").get<std::vector<double>>();
        ArmPoint p;
        p.beta = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
        p.round = X[i].at("t").get<double>();
        state.add_observation(std::move(p), ys[i]);
    }
    return state;
}

}  // namespace tvogp
