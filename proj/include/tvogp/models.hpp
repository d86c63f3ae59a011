#ifndef TVOGP_MODELS_HPP
#define TVOGP_MODELS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tvogp/tvo.hpp"

namespace tvogp {

using Dataset = std::vector<Eigen::VectorXd>;  // binary observation vectors

// Factorized-Bernoulli latent-variable model small enough for exact
// enumeration of its 2^K latent states. prior_logits and the decoder
// are the generative side (theta); the encoder is the inference side
// (phi).
struct BernoulliLatentModel {
    Eigen::VectorXd prior_logits;     // K
    Eigen::MatrixXd decoder_weights;  // K x D
    Eigen::VectorXd decoder_bias;     // D
    Eigen::MatrixXd encoder_weights;  // D x K
    Eigen::VectorXd encoder_bias;     // K

    Eigen::Index latent_bits() const { return prior_logits.size(); }
    Eigen::Index obs_bits() const { return decoder_bias.size(); }

    void validate() const;
    Eigen::Index num_params() const;
    Eigen::VectorXd flatten() const;
    void unflatten(const Eigen::VectorXd& params);

    std::string to_json() const;
    static BernoulliLatentModel from_json(const std::string& text);
};

BernoulliLatentModel random_model(int K, int D, std::uint64_t seed, double scale = 0.5);

Dataset generate_dataset(const BernoulliLatentModel& truth, int N, std::uint64_t seed);

// All 2^K latent states with exact log q mass and log importance weight.
LogWeightBatch enumerate_latents(const BernoulliLatentModel& model, const Dataset& data);

// S i.i.d. draws from q per datum.
LogWeightBatch sample_latents(const BernoulliLatentModel& model, const Dataset& data, int S,
                              std::uint64_t seed);

// Exact gradient of tvo_lower (mean over data) w.r.t. the flattened
// parameters, differentiating through pi_beta's dependence on both
// theta and phi.
Eigen::VectorXd tvo_gradient_exact(const BernoulliLatentModel& model, const Dataset& data,
                                   const std::vector<double>& partition);

struct TrainStepResult {
    double log_evidence = 0.0;  // exact mean log p(x) after the step
    double tvo_value = 0.0;     // tvo_lower before the step
    bool skipped = false;       // non-finite gradient
};

// Adam ascent on the exact TVO.
class AdamTrainer {
public:
    explicit AdamTrainer(double learning_rate = 1e-3) : lr_(learning_rate) {}

    TrainStepResult train_step(BernoulliLatentModel& model, const Dataset& data,
                               const std::vector<double>& partition);

private:
    double lr_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    Eigen::VectorXd m_, v_;
    long step_count_ = 0;
};

// Analytic cross-check model: x = A z + noise, z ~ N(0, I).
struct LinearGaussianModel {
    Eigen::MatrixXd A;             // n x m
    double noise_variance = 1.0;

    double log_evidence(const Eigen::VectorXd& x) const;
    void posterior(const Eigen::VectorXd& x, Eigen::VectorXd& mean, Eigen::MatrixXd& cov) const;
    // KL( N(mean, cov) || p(z|x) )
    double kl_from_posterior(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                             const Eigen::MatrixXd& cov) const;
};

std::string dataset_to_json(const Dataset& data);
Dataset dataset_from_json(const std::string& text);

}  // namespace tvogp

#endif
