#include "hyrec/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "hyrec/errors.hpp"

namespace hyrec {

using nlohmann::json;

namespace {

void fail(const std::string& where, const std::string& what) {
    throw ConfigError("config: " + where + ": " + what);
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) fail(where, "expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (allowed.find(it.key()) == allowed.end()) fail(where, "unknown key \"" + it.key() + "\"");
}

double read_number(const json& obj, const char* key, double fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) fail(where + "." + key, "expected a number");
    return v.get<double>();
}

int read_int(const json& obj, const char* key, int fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail(where + "." + key, "expected an integer");
    return v.get<int>();
}

bool read_bool(const json& obj, const char* key, bool fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) fail(where + "." + key, "expected a boolean");
    return v.get<bool>();
}

std::string read_string(const json& obj, const char* key, std::string fallback,
                        const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) fail(where + "." + key, "expected a string");
    return v.get<std::string>();
}

ContextConfig parse_context(const json& obj, ContextConfig base) {
    const std::string where = "context";
    check_keys(obj,
               {"time_granularity", "location_granularity", "include_cognitive_in_state",
                "periods", "locations"},
               where);
    try {
        base.time_granularity = time_granularity_from_string(
            read_string(obj, "time_granularity", std::string(to_string(base.time_granularity)),
                        where));
        base.location_granularity = location_granularity_from_string(read_string(
            obj, "location_granularity", std::string(to_string(base.location_granularity)),
            where));
    } catch (const std::invalid_argument& e) {
        fail(where, e.what());
    }
    base.include_cognitive_in_state =
        read_bool(obj, "include_cognitive_in_state", base.include_cognitive_in_state, where);
    if (obj.contains("periods")) {
        const json& p = obj.at("periods");
        if (!p.is_object()) fail(where + ".periods", "expected an object");
        std::vector<TimeVocabulary::Period> periods;
        for (auto it = p.begin(); it != p.end(); ++it) {
            const json& range = it.value();
            if (!range.is_array() || range.size() != 2 || !range[0].is_number_integer() ||
                !range[1].is_number_integer())
                fail(where + ".periods." + it.key(), "expected [begin_hour, end_hour]");
            periods.push_back({it.key(), range[0].get<int>(), range[1].get<int>()});
        }
        try {
            base.vocabulary = TimeVocabulary(std::move(periods));
        } catch (const std::invalid_argument& e) {
            fail(where + ".periods", e.what());
        }
    }
    if (obj.contains("locations")) {
        const json& regions = obj.at("locations");
        if (!regions.is_object()) fail(where + ".locations", "expected an object");
        LocationHierarchy h;
        for (auto rit = regions.begin(); rit != regions.end(); ++rit) {
            if (!rit.value().is_object())
                fail(where + ".locations." + rit.key(), "expected an object of cities");
            for (auto cit = rit.value().begin(); cit != rit.value().end(); ++cit) {
                if (!cit.value().is_array())
                    fail(where + ".locations." + rit.key() + "." + cit.key(),
                         "expected an array of places");
                for (const json& place : cit.value()) {
                    if (!place.is_string())
                        fail(where + ".locations", "place ids must be strings");
                    try {
                        h.add_place(place.get<std::string>(), cit.key(), rit.key());
                    } catch (const std::invalid_argument& e) {
                        fail(where + ".locations", e.what());
                    }
                }
            }
        }
        base.hierarchy = std::move(h);
    }
    return base;
}

}  // namespace

void SimConfig::validate() const {
    auto bad = [](const std::string& key, const std::string& what) {
        throw ConfigError("config: sim." + key + ": " + what);
    };
    if (teams < 1) bad("teams", "must be >= 1");
    if (users_per_team < 1) bad("users_per_team", "must be >= 1");
    if (resources < 1) bad("resources", "must be >= 1");
    if (trials < 1) bad("trials", "must be >= 1");
    if (window < 1) bad("window", "must be >= 1");
    if (trials % window != 0) bad("window", "must divide trials");
    if (!(acceptance_noise >= 0.0 && acceptance_noise <= 1.0))
        bad("acceptance_noise", "must be in [0, 1]");
    if (interest_size < 1) bad("interest_size", "must be >= 1");
    if (quirk_size < 0 || quirk_size > interest_size)
        bad("quirk_size", "must be in [0, interest_size]");
    if (history_events_per_user < 0) bad("history_events_per_user", "must be >= 0");
    if (drift_trial < -1) bad("drift_trial", "must be -1 (off) or a trial index");
    if (!(drift_fraction >= 0.0 && drift_fraction <= 1.0))
        bad("drift_fraction", "must be in [0, 1]");
}

void AppConfig::validate() const {
    try {
        learning.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: learning: ") + e.what());
    }
    if (cf.k_users < 1) throw ConfigError("config: cf.k_users: must be >= 1");
    if (cf.k_items < 1) throw ConfigError("config: cf.k_items: must be >= 1");
    if (cf.rebuild_every < 1) throw ConfigError("config: cf.rebuild_every: must be >= 1");
    if (!(cbr.reuse_threshold >= 0.0 && cbr.reuse_threshold <= 1.0))
        throw ConfigError("config: cbr.reuse_threshold: must be in [0, 1]");
    if (!(cbr.success_threshold >= 0.0 && cbr.success_threshold <= 1.0))
        throw ConfigError("config: cbr.success_threshold: must be in [0, 1]");
    sim.validate();
    if (run.seeds.empty()) throw ConfigError("config: run.seeds: must not be empty");
    if (run.variants.empty()) throw ConfigError("config: run.variants: must not be empty");
    for (const std::string& v : run.variants)
        if (v != "plain-qlearning" && v != "hyql" && v != "oracle")
            throw ConfigError("config: run.variants: unknown variant \"" + v + "\"");
    if (run.parallelism < 1) throw ConfigError("config: run.parallelism: must be >= 1");
}

AppConfig default_config() {
    AppConfig c;
    for (std::uint64_t s = 1; s <= 30; ++s) c.run.seeds.push_back(s);
    c.run.variants = {"plain-qlearning", "hyql"};
    return c;
}

AppConfig parse_config(const std::string& json_text, const std::string& origin) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + origin + ": " + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: " + origin + ": expected a JSON object");
    // A run manifest embeds the config it ran with; accept it directly.
    if (root.contains("config")) {
        if (!root.at("config").is_object())
            throw ConfigError("config: " + origin + ": \"config\" must be an object");
        root = root.at("config");
    }
    check_keys(root, {"context", "learning", "cf", "cbr", "sim", "run"}, "top level");

    AppConfig c = default_config();
    if (root.contains("context")) c.context = parse_context(root.at("context"), c.context);
    if (root.contains("learning")) {
        const json& obj = root.at("learning");
        check_keys(obj, {"alpha", "gamma", "epsilon", "p"}, "learning");
        c.learning.alpha = read_number(obj, "alpha", c.learning.alpha, "learning");
        c.learning.gamma = read_number(obj, "gamma", c.learning.gamma, "learning");
        c.learning.epsilon = read_number(obj, "epsilon", c.learning.epsilon, "learning");
        c.learning.p = read_number(obj, "p", c.learning.p, "learning");
    }
    if (root.contains("cf")) {
        const json& obj = root.at("cf");
        check_keys(obj, {"k_users", "k_items", "rebuild_every"}, "cf");
        c.cf.k_users = read_int(obj, "k_users", c.cf.k_users, "cf");
        c.cf.k_items = read_int(obj, "k_items", c.cf.k_items, "cf");
        c.cf.rebuild_every = read_int(obj, "rebuild_every", c.cf.rebuild_every, "cf");
    }
    if (root.contains("cbr")) {
        const json& obj = root.at("cbr");
        check_keys(obj, {"reuse_threshold", "success_threshold"}, "cbr");
        c.cbr.reuse_threshold =
            read_number(obj, "reuse_threshold", c.cbr.reuse_threshold, "cbr");
        c.cbr.success_threshold =
            read_number(obj, "success_threshold", c.cbr.success_threshold, "cbr");
    }
    if (root.contains("sim")) {
        const json& obj = root.at("sim");
        check_keys(obj,
                   {"teams", "users_per_team", "resources", "trials", "window",
                    "acceptance_noise", "interest_size", "quirk_size",
                    "history_events_per_user", "drift_trial", "drift_fraction"},
                   "sim");
        c.sim.teams = read_int(obj, "teams", c.sim.teams, "sim");
        c.sim.users_per_team = read_int(obj, "users_per_team", c.sim.users_per_team, "sim");
        c.sim.resources = read_int(obj, "resources", c.sim.resources, "sim");
        c.sim.trials = read_int(obj, "trials", c.sim.trials, "sim");
        c.sim.window = read_int(obj, "window", c.sim.window, "sim");
        c.sim.acceptance_noise =
            read_number(obj, "acceptance_noise", c.sim.acceptance_noise, "sim");
        c.sim.interest_size = read_int(obj, "interest_size", c.sim.interest_size, "sim");
        c.sim.quirk_size = read_int(obj, "quirk_size", c.sim.quirk_size, "sim");
        c.sim.history_events_per_user =
            read_int(obj, "history_events_per_user", c.sim.history_events_per_user, "sim");
        if (obj.contains("drift_trial")) {
            if (!obj.at("drift_trial").is_number_integer())
                fail("sim.drift_trial", "expected an integer");
            c.sim.drift_trial = obj.at("drift_trial").get<std::int64_t>();
        }
        c.sim.drift_fraction = read_number(obj, "drift_fraction", c.sim.drift_fraction, "sim");
    }
    if (root.contains("run")) {
        const json& obj = root.at("run");
        check_keys(obj, {"seeds", "variants", "parallelism"}, "run");
        if (obj.contains("seeds")) {
            const json& seeds = obj.at("seeds");
            if (!seeds.is_array()) fail("run.seeds", "expected an array");
            c.run.seeds.clear();
            for (const json& s : seeds) {
                if (!s.is_number_unsigned() && !s.is_number_integer())
                    fail("run.seeds", "seeds must be non-negative integers");
                if (s.is_number_integer() && s.get<std::int64_t>() < 0)
                    fail("run.seeds", "seeds must be non-negative integers");
                c.run.seeds.push_back(s.get<std::uint64_t>());
            }
        }
        if (obj.contains("variants")) {
            const json& variants = obj.at("variants");
            if (!variants.is_array()) fail("run.variants", "expected an array");
            c.run.variants.clear();
            for (const json& v : variants) {
                if (!v.is_string()) fail("run.variants", "variants must be strings");
                c.run.variants.push_back(v.get<std::string>());
            }
        }
        c.run.parallelism = read_int(obj, "parallelism", c.run.parallelism, "run");
    }
    c.validate();
    return c;
}

AppConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("config: cannot open " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), file.string());
}

std::string config_to_json(const AppConfig& c) {
    json periods = json::object();
    for (const auto& p : c.context.vocabulary.periods())
        periods[p.label] = json::array({p.begin_hour, p.end_hour});
    json locations = json::object();
    for (const std::string& place : c.context.hierarchy.places()) {
        const std::string& city = c.context.hierarchy.city_of(place);
        const std::string& region = c.context.hierarchy.region_of(place);
        locations[region][city].push_back(place);
    }
    json root = {
        {"context",
         {{"time_granularity", std::string(to_string(c.context.time_granularity))},
          {"location_granularity", std::string(to_string(c.context.location_granularity))},
          {"include_cognitive_in_state", c.context.include_cognitive_in_state},
          {"periods", periods},
          {"locations", locations}}},
        {"learning",
         {{"alpha", c.learning.alpha},
          {"gamma", c.learning.gamma},
          {"epsilon", c.learning.epsilon},
          {"p", c.learning.p}}},
        {"cf",
         {{"k_users", c.cf.k_users},
          {"k_items", c.cf.k_items},
          {"rebuild_every", c.cf.rebuild_every}}},
        {"cbr",
         {{"reuse_threshold", c.cbr.reuse_threshold},
          {"success_threshold", c.cbr.success_threshold}}},
        {"sim",
         {{"teams", c.sim.teams},
          {"users_per_team", c.sim.users_per_team},
          {"resources", c.sim.resources},
          {"trials", c.sim.trials},
          {"window", c.sim.window},
          {"acceptance_noise", c.sim.acceptance_noise},
          {"interest_size", c.sim.interest_size},
          {"quirk_size", c.sim.quirk_size},
          {"history_events_per_user", c.sim.history_events_per_user},
          {"drift_trial", c.sim.drift_trial},
          {"drift_fraction", c.sim.drift_fraction}}},
        {"run",
         {{"seeds", c.run.seeds},
          {"variants", c.run.variants},
          {"parallelism", c.run.parallelism}}}};
    return root.dump(2);
}

}  // namespace hyrec
