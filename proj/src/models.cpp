#include "tvogp/models.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace tvogp {

namespace {

double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Rows are all 2^K binary latent states.
Eigen::MatrixXd state_table(Eigen::Index K) {
    const Eigen::Index n = Eigen::Index(1) << K;
    Eigen::MatrixXd Z(n, K);
    for (Eigen::Index s = 0; s < n; ++s) {
        for (Eigen::Index k = 0; k < K; ++k) Z(s, k) = (s >> k) & 1 ? 1.0 : 0.0;
    }
    return Z;
}

// sum_k [ z_k * logit_k - softplus(logit_k) ] for every state row.
Eigen::VectorXd bernoulli_log_mass(const Eigen::MatrixXd& Z, const Eigen::VectorXd& logits) {
    double norm = 0.0;
    for (Eigen::Index k = 0; k < logits.size(); ++k) norm += softplus(logits(k));
    return (Z * logits).array() - norm;
}

}  // namespace

void BernoulliLatentModel::validate() const {
    if (latent_bits() < 1 || latent_bits() > 12) {
        throw std::invalid_argument("BernoulliLatentModel: latent bit count outside [1,12]");
    }
    if (obs_bits() > 16) {
        throw std::invalid_argument("BernoulliLatentModel: observation bit count above 16");
    }
    if (decoder_weights.rows() != latent_bits() || decoder_weights.cols() != obs_bits() ||
        encoder_weights.rows() != obs_bits() || encoder_weights.cols() != latent_bits() ||
        encoder_bias.size() != latent_bits()) {
        throw std::invalid_argument("BernoulliLatentModel: inconsistent shapes");
    }
    if (!prior_logits.allFinite() || !decoder_weights.allFinite() || !decoder_bias.allFinite() ||
        !encoder_weights.allFinite() || !encoder_bias.allFinite()) {
        throw std::invalid_argument("BernoulliLatentModel: non-finite parameters");
    }
}

Eigen::Index BernoulliLatentModel::num_params() const {
    return prior_logits.size() + decoder_weights.size() + decoder_bias.size() +
           encoder_weights.size() + encoder_bias.size();
}

Eigen::VectorXd BernoulliLatentModel::flatten() const {
    Eigen::VectorXd out(num_params());
    Eigen::Index at = 0;
    auto put = [&](const double* p, Eigen::Index n) {
        out.segment(at, n) = Eigen::Map<const Eigen::VectorXd>(p, n);
        at += n;
    };
    put(prior_logits.data(), prior_logits.size());
    put(decoder_weights.data(), decoder_weights.size());
    put(decoder_bias.data(), decoder_bias.size());
    put(encoder_weights.data(), encoder_weights.size());
    put(encoder_bias.data(), encoder_bias.size());
    return out;
}

void BernoulliLatentModel::unflatten(const Eigen::VectorXd& params) {
    if (params.size() != num_params()) {
        throw std::invalid_argument("BernoulliLatentModel: wrong parameter count");
    }
    Eigen::Index at = 0;
    auto take = [&](double* p, Eigen::Index n) {
        Eigen::Map<Eigen::VectorXd>(p, n) = params.segment(at, n);
        at += n;
    };
    take(prior_logits.data(), prior_logits.size());
    take(decoder_weights.data(), decoder_weights.size());
    take(decoder_bias.data(), decoder_bias.size());
    take(encoder_weights.data(), encoder_weights.size());
    take(encoder_bias.data(), encoder_bias.size());
}

BernoulliLatentModel random_model(int K, int D, std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, scale);
    BernoulliLatentModel m;
    m.prior_logits = Eigen::VectorXd::NullaryExpr(K, [&](Eigen::Index) { return gauss(rng); });
    m.decoder_weights =
        Eigen::MatrixXd::NullaryExpr(K, D, [&](Eigen::Index, Eigen::Index) { return gauss(rng); });
    m.decoder_bias = Eigen::VectorXd::NullaryExpr(D, [&](Eigen::Index) { return gauss(rng); });
    m.encoder_weights =
        Eigen::MatrixXd::NullaryExpr(D, K, [&](Eigen::Index, Eigen::Index) { return gauss(rng); });
    m.encoder_bias = Eigen::VectorXd::NullaryExpr(K, [&](Eigen::Index) { return gauss(rng); });
    m.validate();
    return m;
}

Dataset generate_dataset(const BernoulliLatentModel& truth, int N, std::uint64_t seed) {
    truth.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Dataset data;
    data.reserve(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
        Eigen::VectorXd z(truth.latent_bits());
        for (Eigen::Index k = 0; k < z.size(); ++k) {
            z(k) = unif(rng) < sigmoid(truth.prior_logits(k)) ? 1.0 : 0.0;
        }
        const Eigen::VectorXd logits = truth.decoder_weights.transpose() * z + truth.decoder_bias;
        Eigen::VectorXd x(truth.obs_bits());
        for (Eigen::Index d = 0; d < x.size(); ++d) {
            x(d) = unif(rng) < sigmoid(logits(d)) ? 1.0 : 0.0;
        }
        data.push_back(std::move(x));
    }
    return data;
}

LogWeightBatch enumerate_latents(const BernoulliLatentModel& model, const Dataset& data) {
    model.validate();
    const Eigen::Index K = model.latent_bits();
    const Eigen::Index n_states = Eigen::Index(1) << K;
    const Eigen::MatrixXd Z = state_table(K);
    const Eigen::VectorXd log_prior = bernoulli_log_mass(Z, model.prior_logits);

    // decoder logits and their softplus row-sums are datum-independent
    const Eigen::MatrixXd dec_logits =
        (Z * model.decoder_weights).rowwise() + model.decoder_bias.transpose();
    Eigen::VectorXd dec_norm(n_states);
    for (Eigen::Index s = 0; s < n_states; ++s) {
        double acc = 0.0;
        for (Eigen::Index d = 0; d < dec_logits.cols(); ++d) acc += softplus(dec_logits(s, d));
        dec_norm(s) = acc;
    }

    LogWeightBatch batch;
    batch.provenance = Provenance::Enumerated;
    batch.log_w.resize(static_cast<Eigen::Index>(data.size()), n_states);
    batch.log_q.resize(static_cast<Eigen::Index>(data.size()), n_states);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Eigen::VectorXd& x = data[i];
        const Eigen::VectorXd enc_logits = model.encoder_weights.transpose() * x + model.encoder_bias;
        const Eigen::VectorXd log_q = bernoulli_log_mass(Z, enc_logits);
        const Eigen::VectorXd log_lik = dec_logits * x - dec_norm;
        const Eigen::Index row = static_cast<Eigen::Index>(i);
        batch.log_q.row(row) = log_q;
        batch.log_w.row(row) = log_prior + log_lik - log_q;
    }
    return batch;
}

LogWeightBatch sample_latents(const BernoulliLatentModel& model, const Dataset& data, int S,
                              std::uint64_t seed) {
    model.validate();
    if (S < 1) throw std::invalid_argument("sample_latents: S must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    LogWeightBatch batch;
    batch.provenance = Provenance::Sampled;
    batch.log_w.resize(static_cast<Eigen::Index>(data.size()), S);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Eigen::VectorXd& x = data[i];
        const Eigen::VectorXd enc_logits = model.encoder_weights.transpose() * x + model.encoder_bias;
        for (int ell = 0; ell < S; ++ell) {
            Eigen::VectorXd z(model.latent_bits());
            double log_q = 0.0, log_prior = 0.0;
            for (Eigen::Index k = 0; k < z.size(); ++k) {
                const double p = sigmoid(enc_logits(k));
                z(k) = unif(rng) < p ? 1.0 : 0.0;
                log_q += z(k) * enc_logits(k) - softplus(enc_logits(k));
                log_prior += z(k) * model.prior_logits(k) - softplus(model.prior_logits(k));
            }
            const Eigen::VectorXd dec = model.decoder_weights.transpose() * z + model.decoder_bias;
            double log_lik = 0.0;
            for (Eigen::Index d = 0; d < dec.size(); ++d) {
                log_lik += x(d) * dec(d) - softplus(dec(d));
            }
            batch.log_w(static_cast<Eigen::Index>(i), ell) = log_prior + log_lik - log_q;
        }
    }
    return batch;
}

Eigen::VectorXd tvo_gradient_exact(const BernoulliLatentModel& model, const Dataset& data,
                                   const std::vector<double>& partition) {
    model.validate();
    if (partition.size() < 2) throw std::invalid_argument("tvo_gradient_exact: bad partition");
    const Eigen::Index K = model.latent_bits();
    const Eigen::Index D = model.obs_bits();
    const Eigen::Index n_states = Eigen::Index(1) << K;
    const Eigen::MatrixXd Z = state_table(K);
    const Eigen::VectorXd log_prior = bernoulli_log_mass(Z, model.prior_logits);
    const Eigen::MatrixXd dec_logits =
        (Z * model.decoder_weights).rowwise() + model.decoder_bias.transpose();
    Eigen::MatrixXd dec_sig(n_states, D);
    Eigen::VectorXd dec_norm(n_states);
    for (Eigen::Index s = 0; s < n_states; ++s) {
        double acc = 0.0;
        for (Eigen::Index d = 0; d < D; ++d) {
            dec_sig(s, d) = sigmoid(dec_logits(s, d));
            acc += softplus(dec_logits(s, d));
        }
        dec_norm(s) = acc;
    }
    const Eigen::VectorXd prior_sig =
        model.prior_logits.unaryExpr([](double v) { return sigmoid(v); });

    Eigen::VectorXd g_prior = Eigen::VectorXd::Zero(K);
    Eigen::MatrixXd g_dec_w = Eigen::MatrixXd::Zero(K, D);
    Eigen::VectorXd g_dec_b = Eigen::VectorXd::Zero(D);
    Eigen::MatrixXd g_enc_w = Eigen::MatrixXd::Zero(D, K);
    Eigen::VectorXd g_enc_b = Eigen::VectorXd::Zero(K);

    for (const Eigen::VectorXd& x : data) {
        const Eigen::VectorXd enc_logits = model.encoder_weights.transpose() * x + model.encoder_bias;
        const Eigen::VectorXd log_q = bernoulli_log_mass(Z, enc_logits);
        const Eigen::VectorXd u = log_prior + (dec_logits * x - dec_norm) - log_q;  // log w
        const Eigen::VectorXd enc_sig = enc_logits.unaryExpr([](double v) { return sigmoid(v); });

        // For each left knot, d/dparam E_{pi_beta}[log w] decomposes into
        //   theta:  beta * Cov_p(dlp, u) + E_p[dlp]
        //   phi:   (1-beta) * Cov_p(ds, u) - E_p[ds]
        // which collapses to state-weight vectors applied to dlp and ds.
        Eigen::VectorXd w_theta = Eigen::VectorXd::Zero(n_states);
        Eigen::VectorXd w_phi = Eigen::VectorXd::Zero(n_states);
        for (std::size_t j = 0; j + 1 < partition.size(); ++j) {
            const double beta = partition[j];
            const double width = partition[j + 1] - partition[j];
            if (width == 0.0) continue;
            Eigen::VectorXd lp = log_q + beta * u;
            lp.array() -= lp.maxCoeff();
            Eigen::VectorXd p = lp.array().exp();
            p /= p.sum();
            const double mean_u = p.dot(u);
            const Eigen::VectorXd centered = p.array() * (u.array() - mean_u);
            w_theta += width * (beta * centered + p);
            w_phi += width * ((1.0 - beta) * centered - p);
        }

        const double sum_theta = w_theta.sum();
        const double sum_phi = w_phi.sum();
        const Eigen::VectorXd zt = Z.transpose() * w_theta;  // E-weighted z under theta weights
        const Eigen::VectorXd zp = Z.transpose() * w_phi;

        g_prior += zt - sum_theta * prior_sig;
        g_dec_w += zt * x.transpose() -
                   Z.transpose() * (dec_sig.array().colwise() * w_theta.array()).matrix();
        g_dec_b += sum_theta * x - dec_sig.transpose() * w_theta;
        g_enc_w += x * (zp - sum_phi * enc_sig).transpose();
        g_enc_b += zp - sum_phi * enc_sig;
    }

    const double inv_n = 1.0 / static_cast<double>(data.size());
    BernoulliLatentModel g = model;
    g.prior_logits = g_prior * inv_n;
    g.decoder_weights = g_dec_w * inv_n;
    g.decoder_bias = g_dec_b * inv_n;
    g.encoder_weights = g_enc_w * inv_n;
    g.encoder_bias = g_enc_b * inv_n;
    return g.flatten();
}

TrainStepResult AdamTrainer::train_step(BernoulliLatentModel& model, const Dataset& data,
                                        const std::vector<double>& partition) {
    if (!(lr_ >= 0.0)) throw std::invalid_argument("train_step: learning rate must be >= 0");
    TrainStepResult result;
    const LogWeightBatch before = enumerate_latents(model, data);
    result.tvo_value = tvo_lower(before, partition);

    const Eigen::VectorXd grad = tvo_gradient_exact(model, data, partition);
    if (!grad.allFinite()) {
        result.skipped = true;
        result.log_evidence = exact_log_evidence(before).mean();
        return result;
    }
    if (m_.size() != grad.size()) {
        m_ = Eigen::VectorXd::Zero(grad.size());
        v_ = Eigen::VectorXd::Zero(grad.size());
        step_count_ = 0;
    }
    ++step_count_;
    m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
    v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(beta1_, step_count_);
    const double bc2 = 1.0 - std::pow(beta2_, step_count_);
    const Eigen::VectorXd step =
        (m_ / bc1).array() / ((v_ / bc2).array().sqrt() + eps_);

    Eigen::VectorXd params = model.flatten();
    params += lr_ * step;
    model.unflatten(params);

    result.log_evidence = exact_log_evidence(enumerate_latents(model, data)).mean();
    return result;
}

double LinearGaussianModel::log_evidence(const Eigen::VectorXd& x) const {
    const Eigen::Index n = A.rows();
    Eigen::MatrixXd cov = A * A.transpose();
    cov.diagonal().array() += noise_variance;
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("LinearGaussianModel: evidence covariance not PD");
    }
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
    const Eigen::VectorXd alpha = llt.solve(x);
    return -0.5 * x.dot(alpha) - 0.5 * log_det -
           0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
}

void LinearGaussianModel::posterior(const Eigen::VectorXd& x, Eigen::VectorXd& mean,
                                    Eigen::MatrixXd& cov) const {
    const Eigen::Index m = A.cols();
    Eigen::MatrixXd precision = Eigen::MatrixXd::Identity(m, m) +
                                A.transpose() * A / noise_variance;
    const Eigen::LLT<Eigen::MatrixXd> llt(precision);
    cov = llt.solve(Eigen::MatrixXd::Identity(m, m));
    mean = llt.solve(A.transpose() * x / noise_variance);
}

double LinearGaussianModel::kl_from_posterior(const Eigen::VectorXd& x,
                                              const Eigen::VectorXd& mean,
                                              const Eigen::MatrixXd& cov) const {
    Eigen::VectorXd post_mean;
    Eigen::MatrixXd post_cov;
    posterior(x, post_mean, post_cov);
    const Eigen::Index m = cov.rows();
    const Eigen::LLT<Eigen::MatrixXd> llt(post_cov);
    const Eigen::MatrixXd inv_post = llt.solve(Eigen::MatrixXd::Identity(m, m));
    const Eigen::VectorXd diff = post_mean - mean;
    const double trace_term = (inv_post * cov).trace();
    const double quad = diff.dot(inv_post * diff);
    const double log_det_ratio =
        std::log(post_cov.determinant()) - std::log(cov.determinant());
    return 0.5 * (trace_term + quad - static_cast<double>(m) + log_det_ratio);
}

std::string BernoulliLatentModel::to_json() const {
    nlohmann::json j;
    auto vec = [](const Eigen::VectorXd& v) {
        return std::vector<double>(v.data(), v.data() + v.size());
    };
    auto mat = [](const Eigen::MatrixXd& m) {
        std::vector<std::vector<double>> rows;
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            rows.emplace_back(m.row(i).begin(), m.row(i).end());
        }
        return rows;
    };
    j["prior_logits"] = vec(prior_logits);
    j["decoder_weights"] = mat(decoder_weights);
    j["decoder_bias"] = vec(decoder_bias);
    j["encoder_weights"] = mat(encoder_weights);
    j["encoder_bias"] = vec(encoder_bias);
    return j.dump();
}

BernoulliLatentModel BernoulliLatentModel::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    auto vec = [&](const char* key) {
        const auto v = j.at(key).get<std::vector<double>>();
        return Eigen::VectorXd(
            Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    };
    auto mat = [&](const char* key) {
        const auto rows = j.at(key).get<std::vector<std::vector<double>>>();
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                          rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            m.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(
                rows[i].data(), static_cast<Eigen::Index>(rows[i].size()));
        }
        return m;
    };
    BernoulliLatentModel model;
    model.prior_logits = vec("prior_logits");
    model.decoder_weights = mat("decoder_weights");
    model.decoder_bias = vec("decoder_bias");
    model.encoder_weights = mat("encoder_weights");
    model.encoder_bias = vec("encoder_bias");
    model.validate();
    return model;
}

std::string dataset_to_json(const Dataset& data) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& x : data) {
        j.push_back(std::vector<double>(x.data(), x.data() + x.size()));
    }
    return j.dump();
}

Dataset dataset_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    Dataset data;
    for (const auto& row : j) {
        const auto v = row.get<std::vector<double>>();
        data.emplace_back(
            Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    return data;
}

}  // namespace tvogp
