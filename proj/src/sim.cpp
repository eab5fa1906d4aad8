#include "hyrec/sim.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "hyrec/errors.hpp"

namespace hyrec {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

constexpr int kBaseDay = 4;  // 1970-01-05, a Monday
constexpr std::array<int, 3> kClassHours{9, 12, 15};

const char* place_for_slot(int slot) { return slot == 1 ? "client-site" : "office"; }

CognitiveAction cognitive_for_slot(int slot) {
    return slot == 1 ? CognitiveAction::ReadDocument : CognitiveAction::None;
}

RawContext slot_context(int slot, int day, const std::string& team_id) {
    RawContext raw;
    raw.timestamp = static_cast<std::int64_t>(day) * 86400 +
                    static_cast<std::int64_t>(kClassHours[static_cast<std::size_t>(slot)]) * 3600;
    raw.place_id = place_for_slot(slot);
    raw.social_group_id = team_id;
    raw.cognitive_action = cognitive_for_slot(slot);
    return raw;
}

/// Three slots per weekday: morning and afternoon at the office, midday at
/// the client site. Weekends are skipped.
std::vector<RawContext> make_schedule(const AppConfig& config, const std::string& team_id) {
    const int n = config.sim.trials + 1;
    std::vector<RawContext> out;
    out.reserve(static_cast<std::size_t>(n));
    int day = kBaseDay;
    for (int t = 0; t < n; ++t) {
        if (t > 0 && t % 3 == 0) {
            ++day;
            while (is_weekend(day)) ++day;
        }
        out.push_back(slot_context(t % 3, day, team_id));
    }
    return out;
}

Situation situate(const RawContext& raw, const AppConfig& config) {
    const ContextConfig& cc = config.context;
    return aggregate(raw, cc.time_granularity, cc.location_granularity, cc.vocabulary,
                     cc.hierarchy);
}

std::string state_id_of(const Situation& s, const AppConfig& config) {
    return encode(s, config.context.include_cognitive_in_state);
}

/// Class-preserving substitution used by quirks and drift: replaces
/// interest[pos] with a same-class resource outside `exclude` and the
/// current interest set; no-ops when no candidate exists.
void substitute_resource(std::vector<int>& interest, std::size_t pos, int n_resources,
                         const std::vector<int>& exclude, rng::Engine& eng) {
    const int cls = resource_class(interest[pos]);
    std::vector<int> candidates;
    for (int r = cls; r < n_resources; r += 3) {
        if (std::find(interest.begin(), interest.end(), r) != interest.end()) continue;
        if (std::binary_search(exclude.begin(), exclude.end(), r)) continue;
        candidates.push_back(r);
    }
    if (candidates.empty()) return;
    interest[pos] = candidates[rng::uniform_index(eng, candidates.size())];
}

int oracle_pick(const SimUser& user, const RawContext& raw, const AppConfig& config) {
    const TimeVocabulary& vocab = config.context.vocabulary;
    const std::string& period = vocab.period_of_hour(hour_of(raw.timestamp));
    for (int r : user.interest_set)
        if (period_for_class(resource_class(r), vocab) == period) return r;
    return user.interest_set.front();
}

}  // namespace

int resource_class(int resource) {
    require(resource >= 0, "resource_class: negative resource id");
    return resource % 3;
}

const std::string& period_for_class(int cls, const TimeVocabulary& vocab) {
    require(cls >= 0 && cls < 3, "period_for_class: class out of range");
    return vocab.period_of_hour(kClassHours[static_cast<std::size_t>(cls)]);
}

std::vector<SimUser> make_population(const AppConfig& config, std::uint64_t seed) {
    const SimConfig& sim = config.sim;
    sim.validate();
    for (const char* place : {"office", "client-site"})
        if (!config.context.hierarchy.has_place(place))
            throw ConfigError(std::string("config: context.locations: the simulator schedule "
                                          "requires place \"") +
                              place + "\"");

    // Class-stratified pools keep every user's interest set spread over all
    // three resource classes, so each scheduled period has something to want.
    std::array<std::vector<int>, 3> pool;
    for (int r = 0; r < sim.resources; ++r)
        pool[static_cast<std::size_t>(r % 3)].push_back(r);
    std::array<int, 3> need{};
    for (int c = 0; c < 3; ++c)
        need[static_cast<std::size_t>(c)] = sim.interest_size / 3 + (c < sim.interest_size % 3);
    for (int c = 0; c < 3; ++c)
        if (static_cast<std::size_t>(need[static_cast<std::size_t>(c)]) *
                static_cast<std::size_t>(sim.teams) >
            pool[static_cast<std::size_t>(c)].size())
            throw ConfigError("config: sim.interest_size: team interest sets exceed the "
                              "per-class resource pools");

    rng::Engine eng(rng::derive_seed(seed, "population"));
    // In-house Fisher-Yates: std::shuffle's draw sequence is not specified,
    // and populations must be identical across standard libraries.
    for (auto& p : pool)
        for (std::size_t i = p.size(); i > 1; --i) {
            const std::size_t j = rng::uniform_index(eng, i);
            std::swap(p[i - 1], p[j]);
        }

    std::vector<SimUser> out;
    out.reserve(static_cast<std::size_t>(sim.teams) *
                static_cast<std::size_t>(sim.users_per_team));
    for (int t = 0; t < sim.teams; ++t) {
        std::vector<int> core;
        for (int c = 0; c < 3; ++c) {
            const int n = need[static_cast<std::size_t>(c)];
            for (int i = 0; i < n; ++i)
                core.push_back(pool[static_cast<std::size_t>(c)]
                                   [static_cast<std::size_t>(t * n + i)]);
        }
        std::sort(core.begin(), core.end());
        const std::string team_id = "team-" + std::to_string(t);
        for (int u = 0; u < sim.users_per_team; ++u) {
            SimUser su;
            su.user_id = "t" + std::to_string(t) + "-u" + std::to_string(u);
            su.team_id = team_id;
            su.interest_set = core;
            std::vector<std::size_t> positions(core.size());
            for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
            for (int q = 0; q < sim.quirk_size; ++q) {
                const std::size_t pi = rng::uniform_index(eng, positions.size());
                const std::size_t pos = positions[pi];
                positions.erase(positions.begin() + static_cast<std::ptrdiff_t>(pi));
                substitute_resource(su.interest_set, pos, sim.resources, core, eng);
            }
            std::sort(su.interest_set.begin(), su.interest_set.end());
            su.schedule = make_schedule(config, team_id);
            out.push_back(std::move(su));
        }
    }
    return out;
}

double user_feedback(const SimUser& user, const RawContext& raw, int resource,
                     const AppConfig& config, rng::Engine& eng) {
    require(resource >= 0 && resource < config.sim.resources,
            "user_feedback: resource out of range");
    const TimeVocabulary& vocab = config.context.vocabulary;
    const bool in_interest =
        std::binary_search(user.interest_set.begin(), user.interest_set.end(), resource);
    const bool class_match = vocab.period_of_hour(hour_of(raw.timestamp)) ==
                             period_for_class(resource_class(resource), vocab);
    const double p_accept = (in_interest && class_match) ? 1.0 - config.sim.acceptance_noise
                                                         : config.sim.acceptance_noise;
    return rng::uniform01(eng) < p_accept ? 1.0 : 0.0;
}

std::vector<Transaction> generate_team_history(const std::vector<SimUser>& population,
                                               const std::string& team_id,
                                               const std::string& exclude_user, int n_events,
                                               const AppConfig& config, std::uint64_t seed) {
    require(n_events >= 0, "generate_team_history: n_events must be >= 0");
    std::vector<const SimUser*> contributors;
    for (const SimUser& u : population)
        if (u.team_id == team_id && u.user_id != exclude_user) contributors.push_back(&u);
    std::vector<Transaction> out;
    if (contributors.empty() || n_events == 0) return out;
    rng::Engine eng(rng::derive_seed(seed, "history|" + team_id));
    out.reserve(static_cast<std::size_t>(n_events));
    for (int e = 0; e < n_events; ++e) {
        const SimUser& u = *contributors[rng::uniform_index(eng, contributors.size())];
        const int r = u.interest_set[rng::uniform_index(eng, u.interest_set.size())];
        // Log the visit in the scheduled context of the resource's class, so
        // bootstrap states coincide with the states real trials will see.
        const RawContext raw = slot_context(resource_class(r), kBaseDay, team_id);
        Transaction tx;
        tx.id = e + 1;
        tx.user = u.user_id;
        tx.item = r;
        tx.rating = 1.0;
        tx.state_id = state_id_of(situate(raw, config), config);
        tx.trial = -1;
        out.push_back(std::move(tx));
    }
    return out;
}

PrecisionCurve precision_curve(const TrialLog& log, int window) {
    require(window >= 1, "precision_curve: window must be >= 1");
    require(log.records.size() % static_cast<std::size_t>(window) == 0,
            "precision_curve: window must divide the trial count");
    PrecisionCurve curve;
    curve.window = window;
    std::size_t accepted_total = 0;
    for (std::size_t start = 0; start < log.records.size();
         start += static_cast<std::size_t>(window)) {
        std::size_t accepted = 0;
        for (std::size_t i = start; i < start + static_cast<std::size_t>(window); ++i)
            accepted += log.records[i].accepted ? 1 : 0;
        accepted_total += accepted;
        curve.values.push_back(static_cast<double>(accepted) / window);
    }
    curve.overall = log.records.empty()
                        ? 0.0
                        : static_cast<double>(accepted_total) /
                              static_cast<double>(log.records.size());
    return curve;
}

RunState init_run(const AppConfig& config, const RunSpec& spec) {
    config.validate();
    require(spec.variant == "plain-qlearning" || spec.variant == "hyql" ||
                spec.variant == "oracle",
            "init_run: unknown variant " + spec.variant);
    std::vector<SimUser> population = make_population(config, spec.seed);
    std::size_t target = population.size();
    for (std::size_t i = 0; i < population.size(); ++i)
        if (population[i].user_id == spec.user_id) target = i;
    require(target < population.size(), "init_run: unknown user " + spec.user_id);
    require(population[target].team_id == spec.team_id,
            "init_run: user " + spec.user_id + " is not in " + spec.team_id);

    AgentOptions opts;
    opts.variant = spec.variant == "hyql" ? Variant::Hyql : Variant::PlainQLearning;
    opts.params = config.learning;
    opts.n_actions = config.sim.resources;
    opts.user_id = spec.user_id;
    opts.group_id = spec.team_id;
    opts.reuse_threshold = config.cbr.reuse_threshold;
    opts.success_threshold = config.cbr.success_threshold;
    opts.k_users = config.cf.k_users;
    opts.k_items = config.cf.k_items;
    opts.rebuild_every = config.cf.rebuild_every;
    opts.include_cognitive_in_state = config.context.include_cognitive_in_state;
    opts.seed = rng::derive_seed(spec.seed, "agent|" + spec.variant + "|" + spec.user_id);
    Agent agent(std::move(opts));

    if (spec.variant == "hyql") {
        // The cold-start premise: the target user has no history of their
        // own; only teammates contribute bootstrap transactions.
        int teammates = 0;
        for (const SimUser& u : population)
            if (u.team_id == spec.team_id && u.user_id != spec.user_id) ++teammates;
        const int n_events = config.sim.history_events_per_user * teammates;
        agent.bootstrap_from_group(generate_team_history(population, spec.team_id,
                                                         spec.user_id, n_events, config,
                                                         spec.seed));
    }

    rng::Engine env_rng(
        rng::derive_seed(spec.seed, "env|" + spec.variant + "|" + spec.user_id));
    return RunState{config,  spec, std::move(population), target, std::move(agent),
                    env_rng, 0,    {}};
}

void apply_interest_drift(RunState& st) {
    SimUser& u = st.population[st.target];
    const int n_flip = static_cast<int>(
        std::llround(st.config.sim.drift_fraction * static_cast<double>(u.interest_set.size())));
    if (n_flip <= 0) return;
    rng::Engine eng(rng::derive_seed(st.spec.seed, "drift|" + u.user_id));
    std::vector<std::size_t> positions(u.interest_set.size());
    for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = i;
    const std::vector<int> no_exclusions;
    for (int f = 0; f < n_flip && !positions.empty(); ++f) {
        const std::size_t pi = rng::uniform_index(eng, positions.size());
        const std::size_t pos = positions[pi];
        positions.erase(positions.begin() + static_cast<std::ptrdiff_t>(pi));
        substitute_resource(u.interest_set, pos, st.config.sim.resources, no_exclusions, eng);
    }
    std::sort(u.interest_set.begin(), u.interest_set.end());
}

bool advance(RunState& st) {
    if (st.trial >= st.config.sim.trials) return false;
    if (st.config.sim.drift_trial >= 0 && st.trial == st.config.sim.drift_trial)
        apply_interest_drift(st);
    const SimUser& u = st.population[st.target];
    const RawContext& raw = u.schedule[static_cast<std::size_t>(st.trial)];
    const RawContext& raw_next = u.schedule[static_cast<std::size_t>(st.trial) + 1];
    const Situation s = situate(raw, st.config);

    int action = 0;
    ActionSource source = ActionSource::ExploitGreedy;
    if (st.spec.variant == "oracle")
        action = oracle_pick(u, raw, st.config);
    else
        std::tie(action, source) = st.agent.select_action(s);

    const double reward = user_feedback(u, raw, action, st.config, st.env_rng);
    if (st.spec.variant != "oracle")
        st.agent.observe(s, action, source, reward, situate(raw_next, st.config));

    TrialRecord rec;
    rec.trial = st.trial;
    rec.state_id = state_id_of(s, st.config);
    rec.action = action;
    rec.source = source;
    rec.accepted = reward == 1.0;
    st.records.push_back(std::move(rec));
    st.trial += 1;
    return true;
}

TrialLog log_of(const RunState& st) {
    TrialLog log;
    log.variant = st.spec.variant;
    log.seed = st.spec.seed;
    log.user_id = st.spec.user_id;
    log.records = st.records;
    return log;
}

RunResult run_single(const AppConfig& config, const RunSpec& spec) {
    RunState st = init_run(config, spec);
    while (advance(st)) {
    }
    RunResult result{spec, log_of(st), {}};
    result.curve = precision_curve(result.log, config.sim.window);
    return result;
}

std::vector<RunSpec> experiment_specs(const AppConfig& config) {
    std::vector<RunSpec> specs;
    for (const std::string& variant : config.run.variants)
        for (std::uint64_t seed : config.run.seeds)
            for (int t = 0; t < config.sim.teams; ++t)
                specs.push_back(RunSpec{variant, seed, "t" + std::to_string(t) + "-u0",
                                        "team-" + std::to_string(t)});
    return specs;
}

ExperimentResult run_experiment(const AppConfig& config) {
    config.validate();
    const std::vector<RunSpec> specs = experiment_specs(config);
    std::vector<RunResult> results(specs.size());
    const std::size_t workers = std::min<std::size_t>(
        static_cast<std::size_t>(config.run.parallelism), specs.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < specs.size(); ++i)
            results[i] = run_single(config, specs[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::mutex error_mutex;
        std::exception_ptr first_error;
        auto work = [&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= specs.size()) return;
                try {
                    results[i] = run_single(config, specs[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (std::thread& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }
    return ExperimentResult{std::move(results)};
}

PairedComparison paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    require(a.size() == b.size(), "paired_t_test: length mismatch");
    require(a.size() >= 2, "paired_t_test: need at least 2 pairs");
    const std::size_t n = a.size();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i] - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));

    // One-sided 95% Student-t critical values; beyond df=30 the df=30 value
    // is kept as a (slightly conservative) bound.
    static constexpr std::array<double, 30> kCritical{
        6.314, 2.920, 2.353, 2.132, 2.015, 1.943, 1.895, 1.860, 1.833, 1.812,
        1.796, 1.782, 1.771, 1.761, 1.753, 1.746, 1.740, 1.734, 1.729, 1.725,
        1.721, 1.717, 1.714, 1.711, 1.708, 1.706, 1.703, 1.701, 1.699, 1.697};
    const std::size_t df = n - 1;
    const double critical = kCritical[std::min<std::size_t>(df, kCritical.size()) - 1];

    PairedComparison cmp;
    cmp.n = n;
    cmp.mean_diff = mean;
    cmp.t_critical = critical;
    if (sd == 0.0)
        cmp.t_statistic = mean == 0.0 ? 0.0
                                      : std::copysign(std::numeric_limits<double>::infinity(),
                                                      mean);
    else
        cmp.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
    cmp.significant = cmp.t_statistic > critical;
    return cmp;
}

}  // namespace hyrec
