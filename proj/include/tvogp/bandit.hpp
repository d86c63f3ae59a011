#ifndef TVOGP_BANDIT_HPP
#define TVOGP_BANDIT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tvogp/acquisition.hpp"
#include "tvogp/gp.hpp"
#include "tvogp/models.hpp"
#include "tvogp/schedule.hpp"

namespace tvogp {

struct WindowPolicy {
    int initial_w = 6;
    int growth_every = 10;  // w += 1 after this many bandit rounds; 0 disables
    bool early_update = true;
    double early_update_threshold = -0.05;  // per-epoch change in L, nats
};

enum class RewardEstimator { Exact, Snis };

struct BanditConfig {
    int T = 600;
    int d = 5;  // arm dimension: free knots in [lo,hi]^d
    double lo = 0.05, hi = 0.95;
    WindowPolicy window;
    AcquisitionConfig acq;
    RewardEstimator reward = RewardEstimator::Exact;
    int snis_samples = 50;
    int reward_partition_size = 50;  // linear evaluation schedule for L_t
    double learning_rate = 1e-3;
    bool permutation_invariant = true;
};

struct EpochRecord {
    int epoch = 0;
    double log_evidence = 0.0;  // reward-estimator value of L after this epoch
    double exact_log_evidence = 0.0;
    double tvo_value = 0.0;
    bool step_skipped = false;
};

struct RoundRecord {
    int round = 0;
    int epoch_end = 0;  // epoch at which this window closed
    Schedule beta;      // arm active during the window
    double raw_reward = 0.0;
    double std_reward = 0.0;
    double kappa = 0.0;
    KernelHyperparams hyp_after_fit;
    bool early = false;
};

struct BanditTrace {
    std::vector<EpochRecord> epochs;
    std::vector<RoundRecord> rounds;
    double initial_log_evidence = 0.0;
    double final_log_evidence = 0.0;
    double final_exact_log_evidence = 0.0;
    GPState gp;  // state after the final fit (bandit runs only)

    std::string to_json() const;
    std::string to_csv() const;  // one row per epoch plus one per round
};

// Running-average standardization: (y - mean) / (population std + 1e-8),
// statistics over the history including the new value.
double standardize_reward(const std::vector<double>& history, double new_y);

BanditTrace run_bandit(BernoulliLatentModel model, const Dataset& data, const BanditConfig& cfg,
                       std::uint64_t seed);

enum class BaselineKind { Linear, Log, Moments, Random };

struct BaselineConfig {
    BaselineKind kind = BaselineKind::Linear;
    double beta1 = 0.025;       // log spacing start
    int moments_refresh = 100;  // epochs between moments recomputations
};

// Same training loop with a static or periodically refreshed schedule;
// the trace is field-for-field comparable with run_bandit's.
BanditTrace run_baseline(BernoulliLatentModel model, const Dataset& data, const BanditConfig& cfg,
                         const BaselineConfig& baseline, std::uint64_t seed);

// Uniformly spaced d-knot arm used before any GP data exists.
Schedule initial_arm(int d, double lo, double hi);

}  // namespace tvogp

#endif
