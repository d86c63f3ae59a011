#ifndef TVOGP_REGRET_LAB_HPP
#define TVOGP_REGRET_LAB_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tvogp/acquisition.hpp"
#include "tvogp/gp.hpp"
#include "tvogp/kernel.hpp"

namespace tvogp {

// A time-varying objective realized exactly on an arm grid: one joint
// draw from the product-kernel GP over (arm, round) pairs.
struct SyntheticTVObjective {
    Eigen::MatrixXd arms;    // n_arms x dims, lattice in [0,1]^dims
    Eigen::MatrixXd values;  // rounds x n_arms, f_t(arm)
    KernelHyperparams hyp;   // generator hyperparameters

    int rounds() const { return static_cast<int>(values.rows()); }
    int num_arms() const { return static_cast<int>(values.cols()); }
};

SyntheticTVObjective sample_tv_objective(int arms_per_dim, int dims, double omega,
                                         double lengthscale, double noise_variance, int rounds,
                                         std::uint64_t seed);

// R_t = sum_{s<=t} (max_arm f_s - f_s(chosen_s)); per-round optimum by
// exhaustive grid scan.
std::vector<double> cumulative_regret(const std::vector<int>& chosen,
                                      const SyntheticTVObjective& objective);

// 1/2 log det(I + K / noise_variance)
double information_gain(const Eigen::MatrixXd& K, double noise_variance);

struct BoundReport {
    double gamma = 0.0;             // realized time-varying information gain
    double min_rhs = 0.0;           // min over block lengths of the bound RHS
    int minimizing_block = 1;
    std::vector<double> rhs_n52;    // RHS per block length, N^{5/2} variant
    std::vector<double> rhs_n3;     // N^3 variant
    std::vector<double> gamma_beta; // realized per-block spatial gain, max over blocks
    double c1 = 0.0;
    double kappa = 0.0;
    double regret_bound = 0.0;      // sqrt(gamma * C1 * kappa * rounds) + 2
    bool violated = false;
    bool greedy_gamma_beta = false; // realized-design gain flagged above the exhaustive cap

    std::string to_json() const;
};

// Numeric check of the information-gain bound on a realized pull
// sequence (rounds 1..R).
BoundReport bound_report(const std::vector<ArmPoint>& pulls, const KernelHyperparams& hyp,
                         const AcquisitionConfig& cfg);

enum class PolicyKind { GpUcb, Random, FixedBestInitial };

struct PolicyRun {
    std::vector<int> chosen;
    std::vector<double> rewards;      // noisy observations
    std::vector<double> cum_regret;
};

// One rollout. The per-round noise stream comes from noise_seed so
// policies can share it (common random numbers).
PolicyRun run_policy(const SyntheticTVObjective& objective, PolicyKind kind,
                     const AcquisitionConfig& cfg, std::uint64_t noise_seed,
                     std::uint64_t policy_seed);

struct PolicyComparison {
    std::vector<std::string> policy_names;
    // [policy][seed][round]
    std::vector<std::vector<std::vector<double>>> cum_regret;
    std::vector<std::vector<double>> mean_cum_regret;  // [policy][round]

    std::string to_csv() const;  // seed,policy,round,instantaneous,cumulative
};

PolicyComparison compare_policies(int arms_per_dim, int dims, double omega, double lengthscale,
                                  double noise_variance, int rounds,
                                  const std::vector<PolicyKind>& policies,
                                  const std::vector<std::uint64_t>& seeds,
                                  const AcquisitionConfig& cfg);

}  // namespace tvogp

#endif
