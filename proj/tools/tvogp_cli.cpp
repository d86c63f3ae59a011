// Configuration-driven experiment runner. See README.md for the config
// schema and artifact layout.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include "tvogp/artifacts.hpp"
#include "tvogp/bandit.hpp"
#include "tvogp/regret_lab.hpp"

using nlohmann::json;
using namespace tvogp;

namespace {

// ---------------------------------------------------------------- logging

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3 };

LogLevel log_threshold() {
    static const LogLevel level = [] {
        const char* env = std::getenv("TVO_GPBANDIT_LOG");
        if (!env) return LogLevel::Warn;
        const std::string v(env);
        if (v == "debug") return LogLevel::Debug;
        if (v == "info") return LogLevel::Info;
        if (v == "error") return LogLevel::Error;
        return LogLevel::Warn;
    }();
    return level;
}

void log(LogLevel level, const std::string& msg) {
    if (level < log_threshold()) return;
    static const char* names[] = {"debug", "info", "warn", "error"};
    std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

// ------------------------------------------------------------ config layer

struct ConfigError : std::runtime_error {
    std::string field;
    ConfigError(std::string f, const std::string& message)
        : std::runtime_error(message), field(std::move(f)) {}
};

void report_error(int code, const std::string& field, const std::string& message) {
    json j;
    j["error"] = code == 2 ? "invalid-config" : "runtime-failure";
    j["field"] = field;
    j["message"] = message;
    std::cerr << j.dump() << "\n";
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(key, e.what());
    }
}

template <typename T>
T require(const json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError(key, "missing required field");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(key, e.what());
    }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        seeds.push_back(std::stoull(tok));
    }
    return seeds;
}

struct Options {
    std::string config_path;
    int jobs = 1;
    std::string out_override;
    std::string seed_override;
};

struct Resolved {
    std::string experiment;
    std::vector<std::uint64_t> seeds;
    std::filesystem::path out_dir;
    json resolved;  // config with defaults materialized
};

BernoulliLatentModel resolve_model(const json& spec) {
    if (spec.contains("file")) {
        const std::string path = require<std::string>(spec, "file");
        if (!std::filesystem::exists(path)) {
            throw ConfigError("model.file", "fixture file does not exist: " + path);
        }
        return BernoulliLatentModel::from_json(read_file(path));
    }
    const int K = require<int>(spec, "K");
    const int D = require<int>(spec, "D");
    try {
        return random_model(K, D, get_or<std::uint64_t>(spec, "seed", 0),
                            get_or<double>(spec, "scale", 0.5));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("model", e.what());
    }
}

Dataset resolve_data(const json& spec, const BernoulliLatentModel& model) {
    if (spec.contains("file")) {
        const std::string path = require<std::string>(spec, "file");
        if (!std::filesystem::exists(path)) {
            throw ConfigError("data.file", "fixture file does not exist: " + path);
        }
        return dataset_from_json(read_file(path));
    }
    const int N = require<int>(spec, "N");
    if (N < 1) throw ConfigError("data.N", "need at least one datum");
    return generate_dataset(model, N, get_or<std::uint64_t>(spec, "seed", 0));
}

BanditConfig resolve_bandit_config(const json& j, json& resolved) {
    BanditConfig cfg;
    cfg.T = get_or<int>(j, "T", cfg.T);
    cfg.d = get_or<int>(j, "d", cfg.d);
    if (cfg.d < 1) throw ConfigError("d", "arm dimension must be >= 1");
    if (cfg.T < 1) throw ConfigError("T", "epoch budget must be >= 1");
    cfg.lo = get_or<double>(j, "lo", cfg.lo);
    cfg.hi = get_or<double>(j, "hi", cfg.hi);
    if (!(cfg.lo < cfg.hi)) throw ConfigError("lo", "need lo < hi");
    cfg.learning_rate = get_or<double>(j, "learning_rate", cfg.learning_rate);
    cfg.permutation_invariant = get_or<bool>(j, "permutation_invariant", true);
    cfg.snis_samples = get_or<int>(j, "S", cfg.snis_samples);
    cfg.reward_partition_size = get_or<int>(j, "reward_partition_size", cfg.reward_partition_size);

    const std::string reward = get_or<std::string>(j, "reward", "exact");
    if (reward == "exact") {
        cfg.reward = RewardEstimator::Exact;
    } else if (reward == "snis") {
        cfg.reward = RewardEstimator::Snis;
    } else {
        throw ConfigError("reward", "unknown reward estimator '" + reward + "'");
    }

    const json w = get_or<json>(j, "window", json::object());
    cfg.window.initial_w = get_or<int>(w, "initial_w", cfg.window.initial_w);
    cfg.window.growth_every = get_or<int>(w, "growth_every", cfg.window.growth_every);
    cfg.window.early_update = get_or<bool>(w, "early_update", cfg.window.early_update);
    cfg.window.early_update_threshold =
        get_or<double>(w, "early_update_threshold", cfg.window.early_update_threshold);
    if (cfg.window.initial_w < 1) throw ConfigError("window.initial_w", "window must be >= 1");
    if (cfg.T < cfg.window.initial_w) throw ConfigError("T", "T must cover at least one window");

    const json a = get_or<json>(j, "acquisition", json::object());
    cfg.acq.delta = get_or<double>(a, "delta", cfg.acq.delta);
    cfg.acq.a = get_or<double>(a, "a", cfg.acq.a);
    cfg.acq.b = get_or<double>(a, "b", cfg.acq.b);
    cfg.acq.n_starts = get_or<int>(a, "n_starts", cfg.acq.n_starts);
    cfg.acq.max_iters = get_or<int>(a, "max_iters", cfg.acq.max_iters);
    if (a.contains("kappa_override") && !a.at("kappa_override").is_null()) {
        cfg.acq.kappa_override = require<double>(a, "kappa_override");
    }

    resolved["T"] = cfg.T;
    resolved["d"] = cfg.d;
    resolved["lo"] = cfg.lo;
    resolved["hi"] = cfg.hi;
    resolved["learning_rate"] = cfg.learning_rate;
    resolved["permutation_invariant"] = cfg.permutation_invariant;
    resolved["S"] = cfg.snis_samples;
    resolved["reward_partition_size"] = cfg.reward_partition_size;
    resolved["reward"] = reward;
    resolved["window"] = {{"initial_w", cfg.window.initial_w},
                          {"growth_every", cfg.window.growth_every},
                          {"early_update", cfg.window.early_update},
                          {"early_update_threshold", cfg.window.early_update_threshold}};
    resolved["acquisition"] = {{"delta", cfg.acq.delta},
                               {"a", cfg.acq.a},
                               {"b", cfg.acq.b},
                               {"n_starts", cfg.acq.n_starts},
                               {"max_iters", cfg.acq.max_iters}};
    if (cfg.acq.kappa_override) {
        resolved["acquisition"]["kappa_override"] = *cfg.acq.kappa_override;
    } else {
        resolved["acquisition"]["kappa_override"] = nullptr;
    }
    return cfg;
}

struct SchedulerChoice {
    bool bandit = true;
    BaselineConfig baseline;
};

SchedulerChoice resolve_scheduler(const json& j, json& resolved) {
    SchedulerChoice choice;
    const std::string name = get_or<std::string>(j, "scheduler", "gp-bandit");
    if (name == "gp-bandit") {
        choice.bandit = true;
    } else if (name == "linear") {
        choice.bandit = false;
        choice.baseline.kind = BaselineKind::Linear;
    } else if (name == "log") {
        choice.bandit = false;
        choice.baseline.kind = BaselineKind::Log;
    } else if (name == "moments") {
        choice.bandit = false;
        choice.baseline.kind = BaselineKind::Moments;
    } else if (name == "random") {
        choice.bandit = false;
        choice.baseline.kind = BaselineKind::Random;
    } else {
        throw ConfigError("scheduler", "unknown scheduler '" + name + "'");
    }
    choice.baseline.beta1 = get_or<double>(j, "beta1", choice.baseline.beta1);
    choice.baseline.moments_refresh =
        get_or<int>(j, "moments_refresh", choice.baseline.moments_refresh);
    resolved["scheduler"] = name;
    resolved["beta1"] = choice.baseline.beta1;
    resolved["moments_refresh"] = choice.baseline.moments_refresh;
    return choice;
}

// Run one job per seed on up to `jobs` threads; the first captured
// exception is rethrown after everything joins.
template <typename Fn>
void for_each_seed(const std::vector<std::uint64_t>& seeds, int jobs, Fn&& fn) {
    if (jobs <= 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(seeds.size());
    for (std::size_t base = 0; base < seeds.size(); base += static_cast<std::size_t>(jobs)) {
        std::vector<std::thread> batch;
        for (std::size_t i = base; i < seeds.size() && i < base + static_cast<std::size_t>(jobs);
             ++i) {
            batch.emplace_back([&, i] {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            });
        }
        for (auto& t : batch) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// ------------------------------------------------------------- experiments

void flush_partial(const std::filesystem::path& out_dir,
                   const std::vector<std::uint64_t>& seeds,
                   const std::vector<BanditTrace>& traces, const std::vector<bool>& done) {
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (!done[i]) continue;
        write_file((out_dir / ("trace_seed" + std::to_string(seeds[i]) + ".json")).string(),
                   traces[i].to_json());
    }
}

int run_tvo_train(const json& j, Resolved& r, int jobs, bool ablation_member = false,
                  std::string tag = "") {
    const BernoulliLatentModel model = resolve_model(require<json>(j, "model"));
    const Dataset data = resolve_data(require<json>(j, "data"), model);
    const BanditConfig cfg = resolve_bandit_config(j, r.resolved);
    const SchedulerChoice sched = resolve_scheduler(j, r.resolved);
    if (!tag.empty()) tag = "_" + tag;

    std::vector<BanditTrace> traces(r.seeds.size());
    std::vector<bool> done(r.seeds.size(), false);
    try {
        for_each_seed(r.seeds, jobs, [&](std::size_t i) {
            log(LogLevel::Info, "seed " + std::to_string(r.seeds[i]) + ": training");
            traces[i] = sched.bandit
                            ? run_bandit(model, data, cfg, r.seeds[i])
                            : run_baseline(model, data, cfg, sched.baseline, r.seeds[i]);
            done[i] = true;
        });
    } catch (const std::exception& e) {
        flush_partial(r.out_dir, r.seeds, traces, done);
        throw std::runtime_error(std::string("training failed: ") + e.what());
    }

    std::ostringstream csv;
    csv.precision(17);
    csv << "seed,epoch,log_evidence,exact_log_evidence,tvo_value\n";
    std::vector<LineSeries> series;
    for (std::size_t i = 0; i < r.seeds.size(); ++i) {
        write_file(
            (r.out_dir / ("trace" + tag + "_seed" + std::to_string(r.seeds[i]) + ".json")).string(),
            traces[i].to_json());
        LineSeries s;
        s.label = "seed " + std::to_string(r.seeds[i]);
        for (const auto& e : traces[i].epochs) {
            csv << r.seeds[i] << "," << e.epoch << "," << e.log_evidence << ","
                << e.exact_log_evidence << "," << e.tvo_value << "\n";
            s.x.push_back(e.epoch);
            s.y.push_back(e.exact_log_evidence);
        }
        series.push_back(std::move(s));
    }
    if (!ablation_member) {
        write_file((r.out_dir / "aggregate.csv").string(), csv.str());
        write_file((r.out_dir / "evidence_vs_epoch.svg").string(),
                   svg_line_chart(series, "exact log evidence", "epoch", "log p(x)"));
    } else {
        write_file((r.out_dir / ("aggregate" + tag + ".csv")).string(), csv.str());
    }
    return 0;
}

int run_regret_lab(const json& j, Resolved& r, int /*jobs*/) {
    const json spec = get_or<json>(j, "regret", json::object());
    const int arms = get_or<int>(spec, "arms_per_dim", 64);
    const int dims = get_or<int>(spec, "dims", 1);
    const double omega = get_or<double>(spec, "omega", 0.01);
    const double lengthscale = get_or<double>(spec, "lengthscale", 0.2);
    const double noise = get_or<double>(spec, "noise_variance", 0.05);
    const int rounds = get_or<int>(spec, "rounds", 100);
    AcquisitionConfig acq;
    acq.T = rounds;
    acq.w = 1;

    std::vector<PolicyKind> kinds;
    std::vector<std::string> names =
        get_or<std::vector<std::string>>(spec, "policies", {"gp-ucb", "random"});
    for (const std::string& n : names) {
        if (n == "gp-ucb") {
            kinds.push_back(PolicyKind::GpUcb);
        } else if (n == "random") {
            kinds.push_back(PolicyKind::Random);
        } else if (n == "fixed-best-initial") {
            kinds.push_back(PolicyKind::FixedBestInitial);
        } else {
            throw ConfigError("regret.policies", "unknown policy '" + n + "'");
        }
    }
    r.resolved["regret"] = {{"arms_per_dim", arms}, {"dims", dims},
                            {"omega", omega},       {"lengthscale", lengthscale},
                            {"noise_variance", noise}, {"rounds", rounds},
                            {"policies", names}};

    PolicyComparison cmp;
    try {
        cmp = compare_policies(arms, dims, omega, lengthscale, noise, rounds, kinds, r.seeds, acq);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("regret", e.what());
    }
    write_file((r.out_dir / "aggregate.csv").string(), cmp.to_csv());
    for (std::size_t s = 0; s < r.seeds.size(); ++s) {
        json per_seed;
        for (std::size_t p = 0; p < cmp.policy_names.size(); ++p) {
            per_seed[cmp.policy_names[p]] = cmp.cum_regret[p][s];
        }
        write_file((r.out_dir / ("trace_seed" + std::to_string(r.seeds[s]) + ".json")).string(),
                   per_seed.dump());
    }
    std::vector<LineSeries> series;
    for (std::size_t p = 0; p < cmp.policy_names.size(); ++p) {
        LineSeries s;
        s.label = cmp.policy_names[p];
        for (int t = 0; t < rounds; ++t) {
            s.x.push_back(t + 1);
            s.y.push_back(cmp.mean_cum_regret[p][static_cast<std::size_t>(t)]);
        }
        series.push_back(std::move(s));
    }
    write_file((r.out_dir / "regret_vs_round.svg").string(),
               svg_line_chart(series, "mean cumulative regret", "round", "regret"));
    return 0;
}

int run_bound_check(const json& j, Resolved& r, int /*jobs*/) {
    const json spec = get_or<json>(j, "bound", json::object());
    const int rounds = get_or<int>(spec, "rounds", 20);
    const double lengthscale = get_or<double>(spec, "lengthscale", 0.25);
    const double noise = get_or<double>(spec, "noise_variance", 0.05);
    const std::vector<double> omegas =
        get_or<std::vector<double>>(spec, "omegas", {0.0, 0.01, 0.1, 0.5});
    if (rounds < 1) throw ConfigError("bound.rounds", "need at least one round");
    r.resolved["bound"] = {{"rounds", rounds},
                           {"lengthscale", lengthscale},
                           {"noise_variance", noise},
                           {"omegas", omegas}};

    std::ostringstream csv;
    csv.precision(17);
    csv << "seed,omega,rounds,gamma,min_rhs,minimizing_block,kappa,regret_bound,violated\n";
    for (std::uint64_t seed : r.seeds) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::vector<ArmPoint> pulls;
        for (int t = 1; t <= rounds; ++t) {
            ArmPoint p;
            p.beta = Eigen::VectorXd::Constant(1, unif(rng));
            p.round = t;
            pulls.push_back(std::move(p));
        }
        json reports = json::array();
        for (double omega : omegas) {
            KernelHyperparams hyp;
            hyp.lengthscale = lengthscale;
            hyp.omega = omega;
            hyp.noise_variance = noise;
            hyp.permutation_invariant = false;
            AcquisitionConfig acq;
            acq.T = rounds;
            acq.w = 1;
            const BoundReport rep = bound_report(pulls, hyp, acq);
            reports.push_back(json::parse(rep.to_json()));
            csv << seed << "," << omega << "," << rounds << "," << rep.gamma << ","
                << rep.min_rhs << "," << rep.minimizing_block << "," << rep.kappa << ","
                << rep.regret_bound << "," << (rep.violated ? 1 : 0) << "\n";
        }
        write_file((r.out_dir / ("trace_seed" + std::to_string(seed) + ".json")).string(),
                   reports.dump());
    }
    write_file((r.out_dir / "aggregate.csv").string(), csv.str());
    return 0;
}

int run_ablation(const json& j, Resolved& r, int jobs) {
    const json toggles = get_or<json>(j, "toggles", json::object());
    const std::vector<bool> perms =
        get_or<std::vector<bool>>(toggles, "permutation_invariance", {true, false});
    const std::vector<std::string> rewards =
        get_or<std::vector<std::string>>(toggles, "reward_estimator", {"exact"});
    std::vector<json> kappas;
    if (toggles.contains("kappa_override")) {
        for (const auto& k : toggles.at("kappa_override")) kappas.push_back(k);
    } else {
        kappas.push_back(nullptr);
    }
    r.resolved["toggles"] = {{"permutation_invariance", perms},
                             {"reward_estimator", rewards},
                             {"kappa_override", kappas}};

    std::ostringstream csv;
    csv.precision(17);
    csv << "permutation_invariant,reward,kappa_override,seed,final_exact_log_evidence,"
           "final_log_evidence,rounds\n";
    for (bool perm : perms) {
        for (const std::string& reward : rewards) {
            for (const json& kap : kappas) {
                json variant = j;
                variant["permutation_invariant"] = perm;
                variant["reward"] = reward;
                if (!variant.contains("acquisition")) variant["acquisition"] = json::object();
                variant["acquisition"]["kappa_override"] = kap;
                variant["scheduler"] = "gp-bandit";

                const BernoulliLatentModel model = resolve_model(require<json>(variant, "model"));
                const Dataset data = resolve_data(require<json>(variant, "data"), model);
                json scratch = json::object();
                const BanditConfig cfg = resolve_bandit_config(variant, scratch);

                std::vector<BanditTrace> traces(r.seeds.size());
                for_each_seed(r.seeds, jobs, [&](std::size_t i) {
                    traces[i] = run_bandit(model, data, cfg, r.seeds[i]);
                });
                const std::string kap_label = kap.is_null() ? "none" : kap.dump();
                for (std::size_t i = 0; i < r.seeds.size(); ++i) {
                    csv << (perm ? 1 : 0) << "," << reward << "," << kap_label << ","
                        << r.seeds[i] << "," << traces[i].final_exact_log_evidence << ","
                        << traces[i].final_log_evidence << "," << traces[i].rounds.size() << "\n";
                }
                log(LogLevel::Info, "ablation variant done: perm=" + std::to_string(perm) +
                                        " reward=" + reward + " kappa=" + kap_label);
            }
        }
    }
    write_file((r.out_dir / "comparison.csv").string(), csv.str());
    return 0;
}

int dispatch(const Options& opts, bool ablate) {
    json j;
    try {
        j = json::parse(read_file(opts.config_path));
    } catch (const std::exception& e) {
        report_error(2, "<config>", std::string("cannot parse config: ") + e.what());
        return 2;
    }

    Resolved r;
    try {
        r.experiment = require<std::string>(j, "experiment");
        if (r.experiment != "tvo-train" && r.experiment != "regret-lab" &&
            r.experiment != "bound-check" && r.experiment != "ablation") {
            throw ConfigError("experiment", "unknown experiment '" + r.experiment + "'");
        }
        if (ablate) r.experiment = "ablation";
        r.seeds = require<std::vector<std::uint64_t>>(j, "seeds");
        if (!opts.seed_override.empty()) r.seeds = parse_seed_list(opts.seed_override);
        if (r.seeds.empty()) throw ConfigError("seeds", "seeds list must be nonempty");
        std::string out = get_or<std::string>(j, "output_dir", "out");
        if (!opts.out_override.empty()) out = opts.out_override;
        r.out_dir = out;
        std::filesystem::create_directories(r.out_dir);

        r.resolved = json::object();
        r.resolved["experiment"] = r.experiment;
        r.resolved["seeds"] = r.seeds;
        r.resolved["output_dir"] = r.out_dir.string();

        int rc = 0;
        if (r.experiment == "tvo-train") {
            rc = run_tvo_train(j, r, opts.jobs);
        } else if (r.experiment == "regret-lab") {
            rc = run_regret_lab(j, r, opts.jobs);
        } else if (r.experiment == "bound-check") {
            rc = run_bound_check(j, r, opts.jobs);
        } else {
            rc = run_ablation(j, r, opts.jobs);
        }
        write_file((r.out_dir / "resolved_config.json").string(), r.resolved.dump(2));
        return rc;
    } catch (const ConfigError& e) {
        report_error(2, e.field, e.what());
        return 2;
    } catch (const std::exception& e) {
        report_error(3, "", e.what());
        return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive TVO schedule experiments"};
    app.require_subcommand(1);

    Options opts;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", opts.config_path, "experiment config (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--jobs", opts.jobs, "max concurrent seeds")->check(CLI::PositiveNumber);
        sub->add_option("--out", opts.out_override, "override the output directory");
        sub->add_option("--seed-override", opts.seed_override,
                        "comma-separated seed list replacing the config's");
    };
    CLI::App* run = app.add_subcommand("run", "run the experiment in the config");
    CLI::App* ablate = app.add_subcommand("ablate", "cross-product of ablation toggles");
    add_common(run);
    add_common(ablate);

    CLI11_PARSE(app, argc, argv);
    return dispatch(opts, ablate->parsed());
}
