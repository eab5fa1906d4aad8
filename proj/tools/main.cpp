#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hyrec/config.hpp"
#include "hyrec/errors.hpp"
#include "hyrec/sim.hpp"
#include "hyrec/store.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hyrec;

namespace {

constexpr char kVersion[] = "1.0.0";
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitInternal = 4;

std::string iso_utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fixed6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

/// Mean of the first up-to-five windows: the cold-start portion of a curve.
double early_mean(const std::vector<double>& values) {
    const std::size_t n = std::min<std::size_t>(5, values.size());
    if (n == 0) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[i];
    return s / static_cast<double>(n);
}

void write_text_file(const fs::path& file, const std::string& content) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(file.string() + ": cannot open for writing");
    out << content;
    out.flush();
    if (!out) throw IoError(file.string() + ": write failed");
}

// --- simulate --------------------------------------------------------------------

/// Per-flag state for "apply only if the user passed it" semantics: config
/// file values must lose to explicit flags but win over built-in defaults.
struct Overrides {
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> variants;
    int trials = 0, window = 0, parallelism = 0;
    int teams = 0, users_per_team = 0, resources = 0;
    int interest_size = 0, quirk_size = 0, history_events = 0;
    double alpha = 0, gamma = 0, epsilon = 0, p = 0;
    int k_users = 0, k_items = 0, rebuild_every = 0;
    double reuse_threshold = 0, success_threshold = 0;
    double noise = 0, drift_fraction = 0;
    std::int64_t drift_trial = 0;
    std::string time_granularity, location_granularity;
    bool include_cognitive = false;
};

template <typename T>
void apply_if(const CLI::Option* opt, T& dst, const T& src) {
    if (opt != nullptr && opt->count() > 0) dst = src;
}

std::string trial_log_name(const RunSpec& spec) {
    return "trials_" + spec.variant + "_s" + std::to_string(spec.seed) + "_" + spec.user_id +
           ".tsv";
}

/// Demonstrates the interaction database on the first listed spec: the
/// population as user/device rows, the run's couples as preferences, its
/// steps as history actions, and the final agent's rating matrix.
void write_store_demo(const fs::path& dir, const AppConfig& config,
                      const std::vector<RunSpec>& specs) {
    if (specs.empty()) return;
    RunSpec spec = specs.front();
    for (const RunSpec& s : specs)
        if (s.variant == "hyql") {
            spec = s;
            break;
        }

    RunState st = init_run(config, spec);
    while (advance(st)) {
    }

    TableStore store(dir);
    for (const SimUser& u : st.population) {
        UserRecord rec;
        rec.user_id = u.user_id;
        rec.social_group_id = u.team_id;
        rec.screen_class = "desktop";
        rec.capability_flags = {"keyboard", "pointer"};
        store.append(rec);
        HistoryRecord ev;
        ev.kind = HistoryRecord::Kind::Event;
        ev.user_id = u.user_id;
        ev.timestamp = u.schedule.front().timestamp;
        ev.event_text = "joined " + u.team_id;
        store.append(ev);
    }
    const SimUser& target = st.population[st.target];
    for (const TrialRecord& rec : st.records) {
        PreferenceRecord pref;
        pref.user_id = spec.user_id;
        pref.action_id = rec.action;
        pref.reward = rec.accepted ? 1.0 : 0.0;
        pref.trial = rec.trial;
        pref.state_id = rec.state_id;
        store.append(pref);
        HistoryRecord act;
        act.kind = HistoryRecord::Kind::Action;
        act.user_id = spec.user_id;
        act.timestamp = target.schedule[static_cast<std::size_t>(rec.trial)].timestamp;
        act.resource = rec.action;
        act.source = std::string(to_string(rec.source));
        act.reward = rec.accepted ? 1.0 : 0.0;
        store.append(act);
    }
    for (const Transaction& t : st.agent.matrix().transactions()) store.append(t);
}

/// Prints per-window means per variant and, when both learners are present,
/// the early-window paired comparison.
void print_summary(std::ostream& out, const AppConfig& config,
                   const std::vector<RunResult>& runs) {
    std::vector<std::string> variants;
    std::map<std::string, std::vector<std::vector<double>>> by_window;  // variant -> window -> vals
    for (const RunResult& r : runs) {
        auto [it, fresh] = by_window.try_emplace(r.spec.variant);
        if (fresh) variants.push_back(r.spec.variant);
        if (it->second.size() < r.curve.values.size()) it->second.resize(r.curve.values.size());
        for (std::size_t w = 0; w < r.curve.values.size(); ++w)
            it->second[w].push_back(r.curve.values[w]);
    }

    out << "\nwindow";
    for (const std::string& v : variants) out << '\t' << v;
    out << '\n';
    std::size_t n_windows = 0;
    for (const std::string& v : variants)
        n_windows = std::max(n_windows, by_window[v].size());
    for (std::size_t w = 0; w < n_windows; ++w) {
        out << w;
        for (const std::string& v : variants) {
            const auto& cols = by_window[v];
            out << '\t' << (w < cols.size() ? fixed6(mean_of(cols[w])) : "-");
        }
        out << '\n';
    }

    const bool both = by_window.count("hyql") && by_window.count("plain-qlearning");
    if (!both) return;
    // Pair per (seed, user): early-window mean under each learner.
    std::map<std::pair<std::uint64_t, std::string>, std::pair<std::optional<double>, std::optional<double>>>
        pairs;
    for (const RunResult& r : runs) {
        auto& slot = pairs[{r.spec.seed, r.spec.user_id}];
        if (r.spec.variant == "hyql") slot.first = early_mean(r.curve.values);
        if (r.spec.variant == "plain-qlearning") slot.second = early_mean(r.curve.values);
    }
    std::vector<double> a, b;
    for (const auto& [key, slot] : pairs)
        if (slot.first && slot.second) {
            a.push_back(*slot.first);
            b.push_back(*slot.second);
        }
    if (a.size() < 2) return;
    const PairedComparison cmp = paired_t_test(a, b);
    out << "\nearly windows (first " << std::min<std::size_t>(5, n_windows)
        << "), hyql vs plain-qlearning: mean diff " << fixed6(cmp.mean_diff) << ", t="
        << fixed6(cmp.t_statistic) << " vs critical " << fixed6(cmp.t_critical)
        << " (n=" << cmp.n << "), hyql greater at 95%: " << (cmp.significant ? "yes" : "no")
        << '\n';
    (void)config;
}

int cmd_simulate(const AppConfig& config, const fs::path& out_dir) {
    const std::string started = iso_utc_now();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError(out_dir.string() + ": cannot create directory: " + ec.message());

    const ExperimentResult result = run_experiment(config);

    std::vector<std::string> log_names;
    for (const RunResult& r : result.runs) {
        const std::string name = trial_log_name(r.spec);
        write_trial_log(out_dir / name, r.log);
        log_names.push_back(name);
    }
    write_curves(out_dir / "curves.tsv", result.runs);
    write_store_demo(out_dir / "store", config, experiment_specs(config));

    json manifest{{"manifest_version", 1},
                  {"code_version", kVersion},
                  {"started", started},
                  {"finished", iso_utc_now()},
                  {"config", json::parse(config_to_json(config))},
                  {"seeds", config.run.seeds},
                  {"variants", config.run.variants},
                  {"outputs",
                   {{"curves", "curves.tsv"}, {"trial_logs", log_names}, {"store", "store"}}}};
    write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

    std::cout << "wrote " << (out_dir / "manifest.json").string() << " (" << result.runs.size()
              << " runs)\n";
    print_summary(std::cout, config, result.runs);
    return 0;
}

// --- compare ---------------------------------------------------------------------

struct LoadedDir {
    fs::path dir;
    AppConfig config;
    std::vector<CurveRow> rows;
};

int cmd_compare(const std::vector<std::string>& dirs) {
    std::vector<LoadedDir> loaded;
    for (const std::string& d : dirs) {
        LoadedDir ld;
        ld.dir = d;
        ld.config = load_config(fs::path(d) / "manifest.json");
        ld.rows = read_curves(fs::path(d) / "curves.tsv");
        loaded.push_back(std::move(ld));
    }
    for (const LoadedDir& ld : loaded)
        if (ld.config.sim.trials != loaded.front().config.sim.trials ||
            ld.config.sim.window != loaded.front().config.sim.window)
            throw ConfigError(ld.dir.string() + ": incompatible manifest (trials " +
                              std::to_string(ld.config.sim.trials) + ", window " +
                              std::to_string(ld.config.sim.window) + " vs " +
                              std::to_string(loaded.front().config.sim.trials) + ", " +
                              std::to_string(loaded.front().config.sim.window) + ")");

    // Per (dir, variant, window) statistics.
    std::cout << "dir\tvariant\twindow\tn\tmean\tsd\n";
    // dir index -> variant -> window -> values
    std::vector<std::map<std::string, std::vector<std::vector<double>>>> stats(loaded.size());
    for (std::size_t i = 0; i < loaded.size(); ++i)
        for (const CurveRow& row : loaded[i].rows) {
            auto& cols = stats[i][row.variant];
            if (cols.size() < row.values.size()) cols.resize(row.values.size());
            for (std::size_t w = 0; w < row.values.size(); ++w)
                cols[w].push_back(row.values[w]);
        }
    for (std::size_t i = 0; i < loaded.size(); ++i)
        for (const auto& [variant, cols] : stats[i])
            for (std::size_t w = 0; w < cols.size(); ++w)
                std::cout << loaded[i].dir.string() << '\t' << variant << '\t' << w << '\t'
                          << cols[w].size() << '\t' << fixed6(mean_of(cols[w])) << '\t'
                          << fixed6(sample_sd(cols[w])) << '\n';

    // With exactly two directories, report the per-window mean differences
    // for every variant they share (identical runs show all zeros).
    if (loaded.size() == 2) {
        for (const auto& [variant, cols_a] : stats[0]) {
            const auto it = stats[1].find(variant);
            if (it == stats[1].end()) continue;
            const auto& cols_b = it->second;
            std::cout << "\ndifference (" << loaded[0].dir.string() << " - "
                      << loaded[1].dir.string() << "), " << variant << ":\n";
            const std::size_t n = std::min(cols_a.size(), cols_b.size());
            for (std::size_t w = 0; w < n; ++w)
                std::cout << w << '\t' << fixed6(mean_of(cols_a[w]) - mean_of(cols_b[w]))
                          << '\n';
        }
    }

    // The early-window ordering verdict needs more than one directory and
    // both learners somewhere in the pool.
    if (loaded.size() < 2) return 0;
    std::map<std::pair<std::uint64_t, std::string>,
             std::pair<std::vector<double>, std::vector<double>>>
        pairs;  // (seed, user) -> early means seen for (hyql, plain)
    for (const LoadedDir& ld : loaded)
        for (const CurveRow& row : ld.rows) {
            auto& slot = pairs[{row.seed, row.user_id}];
            if (row.variant == "hyql") slot.first.push_back(early_mean(row.values));
            if (row.variant == "plain-qlearning") slot.second.push_back(early_mean(row.values));
        }
    std::vector<double> a, b;
    for (const auto& [key, slot] : pairs)
        if (!slot.first.empty() && !slot.second.empty()) {
            a.push_back(mean_of(slot.first));
            b.push_back(mean_of(slot.second));
        }
    if (a.size() < 2) return 0;
    const PairedComparison cmp = paired_t_test(a, b);
    std::cout << "\nverdict: hyql vs plain-qlearning early windows: mean diff "
              << fixed6(cmp.mean_diff) << ", t=" << fixed6(cmp.t_statistic) << " vs critical "
              << fixed6(cmp.t_critical) << " (n=" << cmp.n
              << "), hyql greater at 95%: " << (cmp.significant ? "yes" : "no") << '\n';
    return 0;
}

// --- export ----------------------------------------------------------------------

int cmd_export(const std::string& dir, const std::string& format, std::string out_file) {
    if (format != "tsv" && format != "csv")
        throw ConfigError("unknown format \"" + format + "\" (expected tsv or csv)");
    const std::vector<CurveRow> rows = read_curves(fs::path(dir) / "curves.tsv");
    if (rows.empty()) throw IoError(dir + ": no curves to export");

    std::map<std::string, std::vector<std::vector<double>>> stats;  // variant -> window -> vals
    for (const CurveRow& row : rows) {
        auto& cols = stats[row.variant];
        if (cols.size() < row.values.size()) cols.resize(row.values.size());
        for (std::size_t w = 0; w < row.values.size(); ++w) cols[w].push_back(row.values[w]);
    }

    const char sep = format == "tsv" ? '\t' : ',';
    std::string body;
    body += std::string("variant") + sep + "window_index" + sep + "mean_precision" + sep +
            "sd_precision" + sep + "runs\n";
    for (const auto& [variant, cols] : stats)
        for (std::size_t w = 0; w < cols.size(); ++w) {
            body += variant;
            body += sep;
            body += std::to_string(w);
            body += sep;
            body += fixed6(mean_of(cols[w]));
            body += sep;
            body += fixed6(sample_sd(cols[w]));
            body += sep;
            body += std::to_string(cols[w].size());
            body += '\n';
        }

    if (out_file.empty()) out_file = (fs::path(dir) / ("export." + format)).string();
    write_text_file(out_file, body);
    std::cout << "wrote " << out_file << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Contextual recommender harness: q-learning with social-group guided "
                 "exploration, plus a user simulator for cold-start experiments"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path,
                   "JSON config file or a previous run's manifest.json")
        ->envname("HYREC_CONFIG");

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Run the experiment grid and write logs, "
                                                   "curves and a manifest");
    sim_cmd->fallthrough();
    std::string out_dir = "hyrec-out";
    sim_cmd->add_option("--out", out_dir, "Output directory (default hyrec-out)");
    Overrides ov;
    const CLI::Option* o_seeds =
        sim_cmd->add_option("--seeds", ov.seeds, "Seed list, e.g. 1,2,3")->delimiter(',');
    const CLI::Option* o_variants =
        sim_cmd->add_option("--variants", ov.variants,
                            "Variants to run: plain-qlearning, hyql, oracle")
            ->delimiter(',');
    const CLI::Option* o_trials = sim_cmd->add_option("--trials", ov.trials, "Trials per run");
    const CLI::Option* o_window =
        sim_cmd->add_option("--window", ov.window, "Trials per precision window");
    const CLI::Option* o_par =
        sim_cmd->add_option("--parallelism", ov.parallelism, "Worker threads");
    const CLI::Option* o_teams = sim_cmd->add_option("--teams", ov.teams, "Number of teams");
    const CLI::Option* o_upt =
        sim_cmd->add_option("--users-per-team", ov.users_per_team, "Users per team");
    const CLI::Option* o_res =
        sim_cmd->add_option("--resources", ov.resources, "Number of resources");
    const CLI::Option* o_interest =
        sim_cmd->add_option("--interest-size", ov.interest_size, "Interest set size per user");
    const CLI::Option* o_quirk =
        sim_cmd->add_option("--quirk-size", ov.quirk_size, "Per-user interest deviations");
    const CLI::Option* o_hist = sim_cmd->add_option("--history-events-per-user",
                                                    ov.history_events,
                                                    "Bootstrap visits per teammate");
    const CLI::Option* o_alpha = sim_cmd->add_option("--alpha", ov.alpha, "Learning rate");
    const CLI::Option* o_gamma = sim_cmd->add_option("--gamma", ov.gamma, "Discount factor");
    const CLI::Option* o_eps =
        sim_cmd->add_option("--epsilon", ov.epsilon, "Baseline exploration rate");
    const CLI::Option* o_p =
        sim_cmd->add_option("--p", ov.p, "Exploitation probability of the hybrid policy");
    const CLI::Option* o_ku = sim_cmd->add_option("--k-users", ov.k_users,
                                                  "Raters used to fill a vacant rating");
    const CLI::Option* o_ki =
        sim_cmd->add_option("--k-items", ov.k_items, "Item neighborhood size");
    const CLI::Option* o_rebuild = sim_cmd->add_option("--rebuild-every", ov.rebuild_every,
                                                       "Trials between group model rebuilds");
    const CLI::Option* o_reuse = sim_cmd->add_option("--reuse-threshold", ov.reuse_threshold,
                                                     "Case similarity needed for reuse");
    const CLI::Option* o_succ =
        sim_cmd->add_option("--success-threshold", ov.success_threshold,
                            "Case success rate needed for reuse");
    const CLI::Option* o_noise = sim_cmd->add_option(
        "--acceptance-noise", ov.noise, "Probability of a contrary simulated answer");
    const CLI::Option* o_dtrial =
        sim_cmd->add_option("--drift-trial", ov.drift_trial, "Trial of interest drift (-1 off)");
    const CLI::Option* o_dfrac = sim_cmd->add_option("--drift-fraction", ov.drift_fraction,
                                                     "Fraction of interests replaced at drift");
    const CLI::Option* o_tg = sim_cmd->add_option(
        "--time-granularity", ov.time_granularity, "hour, period-of-day or day-type");
    const CLI::Option* o_lg = sim_cmd->add_option(
        "--location-granularity", ov.location_granularity, "place, city or region");
    const CLI::Option* o_cog = sim_cmd->add_flag("--include-cognitive-in-state",
                                                 ov.include_cognitive,
                                                 "Add the cognitive action to the RL state");

    // compare
    auto* cmp_cmd =
        app.add_subcommand("compare", "Summarize one or more run directories side by side");
    cmp_cmd->fallthrough();
    std::vector<std::string> cmp_dirs;
    cmp_cmd->add_option("dirs", cmp_dirs, "Run output directories")->required()->expected(-1);

    // export
    auto* exp_cmd = app.add_subcommand("export", "Write a plot-ready variant x window table");
    exp_cmd->fallthrough();
    std::string exp_dir;
    std::string exp_format = "tsv";
    std::string exp_out;
    exp_cmd->add_option("dir", exp_dir, "Run output directory")->required();
    exp_cmd->add_option("--format", exp_format, "tsv or csv (default tsv)");
    exp_cmd->add_option("--out", exp_out, "Output file (default <dir>/export.<format>)");

    try {
        app.parse(argc, argv);

        if (sim_cmd->parsed()) {
            AppConfig config =
                config_path.empty() ? default_config() : load_config(config_path);
            apply_if(o_seeds, config.run.seeds, ov.seeds);
            apply_if(o_variants, config.run.variants, ov.variants);
            apply_if(o_trials, config.sim.trials, ov.trials);
            apply_if(o_window, config.sim.window, ov.window);
            apply_if(o_par, config.run.parallelism, ov.parallelism);
            apply_if(o_teams, config.sim.teams, ov.teams);
            apply_if(o_upt, config.sim.users_per_team, ov.users_per_team);
            apply_if(o_res, config.sim.resources, ov.resources);
            apply_if(o_interest, config.sim.interest_size, ov.interest_size);
            apply_if(o_quirk, config.sim.quirk_size, ov.quirk_size);
            apply_if(o_hist, config.sim.history_events_per_user, ov.history_events);
            apply_if(o_alpha, config.learning.alpha, ov.alpha);
            apply_if(o_gamma, config.learning.gamma, ov.gamma);
            apply_if(o_eps, config.learning.epsilon, ov.epsilon);
            apply_if(o_p, config.learning.p, ov.p);
            apply_if(o_ku, config.cf.k_users, ov.k_users);
            apply_if(o_ki, config.cf.k_items, ov.k_items);
            apply_if(o_rebuild, config.cf.rebuild_every, ov.rebuild_every);
            apply_if(o_reuse, config.cbr.reuse_threshold, ov.reuse_threshold);
            apply_if(o_succ, config.cbr.success_threshold, ov.success_threshold);
            apply_if(o_noise, config.sim.acceptance_noise, ov.noise);
            apply_if(o_dtrial, config.sim.drift_trial, ov.drift_trial);
            apply_if(o_dfrac, config.sim.drift_fraction, ov.drift_fraction);
            if (o_tg->count())
                config.context.time_granularity = [&] {
                    try {
                        return time_granularity_from_string(ov.time_granularity);
                    } catch (const std::invalid_argument& e) {
                        throw ConfigError(e.what());
                    }
                }();
            if (o_lg->count())
                config.context.location_granularity = [&] {
                    try {
                        return location_granularity_from_string(ov.location_granularity);
                    } catch (const std::invalid_argument& e) {
                        throw ConfigError(e.what());
                    }
                }();
            apply_if(o_cog, config.context.include_cognitive_in_state, ov.include_cognitive);
            config.validate();
            return cmd_simulate(config, out_dir);
        }
        if (cmp_cmd->parsed()) return cmd_compare(cmp_dirs);
        if (exp_cmd->parsed()) return cmd_export(exp_dir, exp_format, exp_out);
        return 0;
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}
