#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hyrec/context.hpp"
#include "hyrec/qlearning.hpp"

namespace hyrec {

struct CfParams {
    int k_users = 5;
    int k_items = 10;
    int rebuild_every = 10;
};

struct CbrParams {
    double reuse_threshold = 0.75;
    double success_threshold = 0.5;
};

struct ContextConfig {
    TimeGranularity time_granularity = TimeGranularity::PeriodOfDay;
    LocationGranularity location_granularity = LocationGranularity::Place;
    bool include_cognitive_in_state = false;
    TimeVocabulary vocabulary{};
    LocationHierarchy hierarchy = LocationHierarchy::standard_tree();
};

/// Parameters of the synthetic user population and its feedback model.
struct SimConfig {
    int teams = 2;
    int users_per_team = 10;
    int resources = 100;
    int trials = 100;
    int window = 10;                  // trials per precision window
    double acceptance_noise = 0.1;    // probability of a contrary answer
    int interest_size = 10;           // resources each user actually wants
    int quirk_size = 2;               // per-user deviations from the team set
    int history_events_per_user = 5;  // bootstrap visits per teammate
    std::int64_t drift_trial = -1;    // trial at which interests change; -1 disables
    double drift_fraction = 0.0;      // fraction of the interest set replaced

    void validate() const;  // throws ConfigError
};

struct RunConfig {
    std::vector<std::uint64_t> seeds;           // default 1..30
    std::vector<std::string> variants;          // default plain-qlearning, hyql
    int parallelism = 1;
};

struct AppConfig {
    ContextConfig context{};
    LearningParams learning{};
    CfParams cf{};
    CbrParams cbr{};
    SimConfig sim{};
    RunConfig run{};

    void validate() const;  // throws ConfigError
};

/// Built-in defaults; runs without any config file use exactly these.
AppConfig default_config();

/// Reads a JSON config. Accepts either a bare config object or a run
/// manifest (the object under its "config" key), so a previous run's
/// manifest reproduces that run. Unknown keys, type mismatches and
/// out-of-range values throw ConfigError naming the offending key; a
/// missing or unreadable file throws ConfigError too.
AppConfig load_config(const std::filesystem::path& file);

/// Parses a config from a JSON string (same rules as load_config).
AppConfig parse_config(const std::string& json_text, const std::string& origin);

/// Canonical JSON serialization of a config (round-trips through
/// parse_config to an equivalent config).
std::string config_to_json(const AppConfig& c);

}  // namespace hyrec
