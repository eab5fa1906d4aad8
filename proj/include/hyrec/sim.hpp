#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyrec/agent.hpp"
#include "hyrec/config.hpp"
#include "hyrec/rand.hpp"

namespace hyrec {

/// A synthetic user: team membership, the resources they actually want
/// (sorted), and a fixed per-trial context schedule of trials+1 entries
/// (the extra entry supplies the successor situation of the last trial).
struct SimUser {
    std::string user_id;
    std::string team_id;
    std::vector<int> interest_set;
    std::vector<RawContext> schedule;
};

/// Resources come in three classes cycling with the id; each class is
/// relevant in one scheduled period of the day.
int resource_class(int resource);

/// The period in which a class's resources are wanted, under a vocabulary.
/// Classes anchor to the schedule template hours 9, 12 and 15.
const std::string& period_for_class(int cls, const TimeVocabulary& vocab);

/// Builds the population: per team a random class-stratified core interest
/// set (cores disjoint across teams), per user `quirk_size` class-preserving
/// substitutions, and the shared weekday schedule. Deterministic in seed.
/// Throws ConfigError when the interest sets cannot fit the resource pool.
std::vector<SimUser> make_population(const AppConfig& config, std::uint64_t seed);

/// The immediate reward: 1 with probability (1 - acceptance_noise) when the
/// resource is in the user's interest set and its class matches the period
/// of the raw context, otherwise 1 with probability acceptance_noise.
/// Consumes exactly one draw. The judgment uses the raw schedule context,
/// not the agent's abstraction of it.
double user_feedback(const SimUser& user, const RawContext& raw, int resource,
                     const AppConfig& config, rng::Engine& eng);

/// Synthesizes `n_events` bootstrap visits by the team's members other than
/// `exclude_user`: each picks a random contributor and a random resource
/// from that contributor's interest set, logged in the class-consistent
/// scheduled context with trial tag -1. Deterministic in seed.
std::vector<Transaction> generate_team_history(const std::vector<SimUser>& population,
                                               const std::string& team_id,
                                               const std::string& exclude_user, int n_events,
                                               const AppConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Trial records and precision.
// ---------------------------------------------------------------------------

struct TrialRecord {
    std::int64_t trial = 0;
    std::string state_id;
    int action = 0;
    ActionSource source = ActionSource::ExploitGreedy;
    bool accepted = false;
};

struct TrialLog {
    std::string variant;
    std::uint64_t seed = 0;
    std::string user_id;
    std::vector<TrialRecord> records;
};

struct PrecisionCurve {
    int window = 0;
    std::vector<double> values;  // accepted/window per window
    double overall = 0.0;
};

/// Windowed precision; `window` must divide the record count (throws
/// std::invalid_argument otherwise).
PrecisionCurve precision_curve(const TrialLog& log, int window);

// ---------------------------------------------------------------------------
// Single runs. `variant` is "plain-qlearning", "hyql", or "oracle" (a
// perfect-knowledge harness upper bound; not a learner).
// ---------------------------------------------------------------------------

struct RunSpec {
    std::string variant;
    std::uint64_t seed = 0;
    std::string user_id;
    std::string team_id;
};

/// Everything needed to continue a run trial by trial. The population is a
/// deterministic function of (config, seed) and is regenerated, never
/// serialized.
struct RunState {
    AppConfig config;
    RunSpec spec;
    std::vector<SimUser> population;
    std::size_t target = 0;  // index of spec.user_id in population
    Agent agent;
    rng::Engine env_rng;
    std::int64_t trial = 0;
    std::vector<TrialRecord> records;
};

/// Builds the initial state: population, a seeded agent (bootstrapped with
/// team history for the hyql variant only), and the environment stream.
RunState init_run(const AppConfig& config, const RunSpec& spec);

/// Runs one trial; returns false (doing nothing) once trials are exhausted.
bool advance(RunState& st);

/// Applies the configured interest drift to the target user. Exposed for
/// checkpoint restore; advance() calls it at the drift trial.
void apply_interest_drift(RunState& st);

TrialLog log_of(const RunState& st);

struct RunResult {
    RunSpec spec;
    TrialLog log;
    PrecisionCurve curve;
};

RunResult run_single(const AppConfig& config, const RunSpec& spec);

/// The full (variant x seed x target user) grid; one target per team.
std::vector<RunSpec> experiment_specs(const AppConfig& config);

struct ExperimentResult {
    std::vector<RunResult> runs;  // in experiment_specs order
};

/// Runs every spec, honoring config.run.parallelism. Results are ordered by
/// spec position regardless of scheduling.
ExperimentResult run_experiment(const AppConfig& config);

// ---------------------------------------------------------------------------
// Paired comparison.
// ---------------------------------------------------------------------------

struct PairedComparison {
    std::size_t n = 0;        // number of pairs
    double mean_diff = 0.0;   // mean of a[i] - b[i]
    double t_statistic = 0.0;
    double t_critical = 0.0;  // one-sided, 95% confidence
    bool significant = false; // mean_diff > 0 at 95%
};

/// One-sided paired t-test of a > b. Requires a.size() == b.size() >= 2.
PairedComparison paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace hyrec
