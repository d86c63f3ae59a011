#include "tvogp/bandit.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tvogp {

namespace {

// splitmix64-style mixing for derived stream seeds
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

struct RewardEvaluator {
    const BanditConfig& cfg;
    const Dataset& data;
    std::uint64_t seed;
    std::vector<double> eval_partition;

    RewardEvaluator(const BanditConfig& c, const Dataset& d, std::uint64_t s)
        : cfg(c), data(d), seed(s) {
        eval_partition = linear_schedule(static_cast<std::size_t>(cfg.reward_partition_size))
                             .evaluation_partition();
    }

    double operator()(const BernoulliLatentModel& model, int epoch) const {
        if (cfg.reward == RewardEstimator::Exact) {
            return exact_log_evidence(enumerate_latents(model, data)).mean();
        }
        const LogWeightBatch batch = sample_latents(
            model, data, cfg.snis_samples, mix_seed(seed, 7000 + static_cast<std::uint64_t>(epoch)));
        return tvo_lower(batch, eval_partition);
    }
};

// Shared training loop; the schedule source is the only difference
// between the bandit and the baselines, so traces compare field for
// field.
struct LoopCallbacks {
    // Called when a window closes; returns the arm for the next window.
    std::function<Schedule(int round, int epoch, double std_reward, RoundRecord& record)>
        on_window_close;
    // Optional pre-epoch schedule refresh (moments baseline).
    std::function<void(int epoch, const BernoulliLatentModel& model, Schedule& current)> on_epoch;
};

BanditTrace run_loop(BernoulliLatentModel model, const Dataset& data, const BanditConfig& cfg,
                     std::uint64_t seed, Schedule schedule, const LoopCallbacks& callbacks) {
    if (cfg.T < cfg.window.initial_w) {
        throw std::invalid_argument("run: T must be at least one window");
    }
    BanditTrace trace;
    const RewardEvaluator evaluate(cfg, data, seed);
    AdamTrainer trainer(cfg.learning_rate);

    double L = evaluate(model, 0);
    trace.initial_log_evidence = L;
    double window_start_L = L;
    double prev_L = L;

    int w = cfg.window.initial_w;
    int epochs_in_window = 0;
    int round = 0;
    std::vector<double> raw_rewards;

    for (int epoch = 1; epoch <= cfg.T; ++epoch) {
        if (callbacks.on_epoch) callbacks.on_epoch(epoch, model, schedule);
        const TrainStepResult step =
            trainer.train_step(model, data, schedule.evaluation_partition());
        L = evaluate(model, epoch);
        EpochRecord er;
        er.epoch = epoch;
        er.log_evidence = L;
        er.exact_log_evidence = cfg.reward == RewardEstimator::Exact
                                    ? L
                                    : exact_log_evidence(enumerate_latents(model, data)).mean();
        er.tvo_value = step.tvo_value;
        er.step_skipped = step.skipped;
        trace.epochs.push_back(er);
        ++epochs_in_window;

        const bool early = cfg.window.early_update && epochs_in_window < w && epoch < cfg.T &&
                           (L - prev_L) <= cfg.window.early_update_threshold;
        const bool closes = epochs_in_window >= w || early || epoch == cfg.T;
        prev_L = L;
        if (!closes) continue;

        ++round;
        const double raw = L - window_start_L;
        const double standardized = standardize_reward(raw_rewards, raw);
        raw_rewards.push_back(raw);

        RoundRecord rr;
        rr.round = round;
        rr.epoch_end = epoch;
        rr.beta = schedule;
        rr.raw_reward = raw;
        rr.std_reward = standardized;
        rr.early = early;
        Schedule next = callbacks.on_window_close(round, epoch, standardized, rr);
        trace.rounds.push_back(std::move(rr));

        schedule = std::move(next);
        window_start_L = L;
        epochs_in_window = 0;
        if (cfg.window.growth_every > 0 && round % cfg.window.growth_every == 0) ++w;
    }

    trace.final_log_evidence = L;
    trace.final_exact_log_evidence =
        cfg.reward == RewardEstimator::Exact
            ? L
            : exact_log_evidence(enumerate_latents(model, data)).mean();
    return trace;
}

}  // namespace

double standardize_reward(const std::vector<double>& history, double new_y) {
    double sum = new_y, sum_sq = new_y * new_y;
    for (double y : history) {
        sum += y;
        sum_sq += y * y;
    }
    const double n = static_cast<double>(history.size() + 1);
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    const double sd = std::sqrt(var > 0.0 ? var : 0.0);
    return (new_y - mean) / (sd + 1e-8);
}

Schedule initial_arm(int d, double lo, double hi) {
    std::vector<double> pts(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
        pts[static_cast<std::size_t>(j)] = static_cast<double>(j + 1) / static_cast<double>(d + 1);
    }
    return project_sorted(pts, lo, hi);
}

BanditTrace run_bandit(BernoulliLatentModel model, const Dataset& data, const BanditConfig& cfg,
                       std::uint64_t seed) {
    KernelHyperparams hyp;
    hyp.permutation_invariant = cfg.permutation_invariant;
    GPState gp(hyp);
    AcquisitionConfig acq = cfg.acq;
    acq.d = cfg.d;
    acq.T = cfg.T;
    acq.w = cfg.window.initial_w;

    LoopCallbacks callbacks;
    callbacks.on_window_close = [&gp, acq, cfg, seed](int round, int /*epoch*/,
                                                      double standardized,
                                                      RoundRecord& record) {
        ArmPoint x;
        x.beta = Eigen::Map<const Eigen::VectorXd>(record.beta.interior.data(),
                                                   static_cast<Eigen::Index>(cfg.d));
        x.round = round;
        gp.add_observation(std::move(x), standardized);
        if (gp.size() >= 2) {
            gp.fit_map(HyperBounds{}, mix_seed(seed, 1000 + static_cast<std::uint64_t>(round)));
        }
        const double kappa_val = kappa(round, acq);
        record.kappa = kappa_val;
        record.hyp_after_fit = gp.hyperparams();
        return maximize_acquisition(gp, round + 1, kappa_val, static_cast<std::size_t>(cfg.d),
                                    cfg.lo, cfg.hi,
                                    mix_seed(seed, 2000 + static_cast<std::uint64_t>(round)),
                                    &record.beta, acq.n_starts, acq.max_iters);
    };

    BanditTrace trace = run_loop(std::move(model), data, cfg, seed, initial_arm(cfg.d, cfg.lo, cfg.hi),
                                 callbacks);
    trace.gp = gp;
    return trace;
}

BanditTrace run_baseline(BernoulliLatentModel model, const Dataset& data, const BanditConfig& cfg,
                         const BaselineConfig& baseline, std::uint64_t seed) {
    const std::size_t d = static_cast<std::size_t>(cfg.d);
    Schedule current;
    switch (baseline.kind) {
        case BaselineKind::Linear:
            current = linear_schedule(d);
            break;
        case BaselineKind::Log:
            current = log_schedule(std::max<std::size_t>(d, 2), baseline.beta1);
            break;
        case BaselineKind::Moments:
            current = moments_schedule(enumerate_latents(model, data), d);
            break;
        case BaselineKind::Random:
            current = random_schedule(d, mix_seed(seed, 3000), cfg.lo, cfg.hi);
            break;
    }

    LoopCallbacks callbacks;
    callbacks.on_window_close = [baseline, cfg, seed](int round, int /*epoch*/, double,
                                                      RoundRecord& record) -> Schedule {
        record.kappa = 0.0;
        if (baseline.kind == BaselineKind::Random) {
            return random_schedule(static_cast<std::size_t>(cfg.d),
                                   mix_seed(seed, 3000 + static_cast<std::uint64_t>(round)),
                                   cfg.lo, cfg.hi);
        }
        return record.beta;
    };
    if (baseline.kind == BaselineKind::Moments && baseline.moments_refresh > 0) {
        callbacks.on_epoch = [baseline, &data, d](int epoch, const BernoulliLatentModel& m,
                                                  Schedule& current_schedule) {
            if (epoch > 1 && (epoch - 1) % baseline.moments_refresh == 0) {
                current_schedule = moments_schedule(enumerate_latents(m, data), d);
            }
        };
    }
    return run_loop(std::move(model), data, cfg, seed, current, callbacks);
}

std::string BanditTrace::to_json() const {
    nlohmann::json j;
    j["initial_log_evidence"] = initial_log_evidence;
    j["final_log_evidence"] = final_log_evidence;
    j["final_exact_log_evidence"] = final_exact_log_evidence;
    j["epochs"] = nlohmann::json::array();
    for (const auto& e : epochs) {
        j["epochs"].push_back({{"epoch", e.epoch},
                               {"log_evidence", e.log_evidence},
                               {"exact_log_evidence", e.exact_log_evidence},
                               {"tvo_value", e.tvo_value},
                               {"step_skipped", e.step_skipped}});
    }
    j["rounds"] = nlohmann::json::array();
    for (const auto& r : rounds) {
        j["rounds"].push_back({{"round", r.round},
                               {"epoch_end", r.epoch_end},
                               {"beta", r.beta.interior},
                               {"raw_reward", r.raw_reward},
                               {"std_reward", r.std_reward},
                               {"kappa", r.kappa},
                               {"early", r.early},
                               {"lengthscale", r.hyp_after_fit.lengthscale},
                               {"omega", r.hyp_after_fit.omega},
                               {"noise_variance", r.hyp_after_fit.noise_variance}});
    }
    return j.dump();
}

std::string BanditTrace::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "kind,epoch,round,log_evidence,tvo_value,raw_reward,std_reward,kappa,beta\n";
    for (const auto& e : epochs) {
        out << "epoch," << e.epoch << ",," << e.log_evidence << "," << e.tvo_value << ",,,,\n";
    }
    for (const auto& r : rounds) {
        out << "round," << r.epoch_end << "," << r.round << ",,," << r.raw_reward << ","
            << r.std_reward << "," << r.kappa << ",";
        for (std::size_t i = 0; i < r.beta.interior.size(); ++i) {
            if (i) out << ';';
            out << r.beta.interior[i];
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace tvogp
