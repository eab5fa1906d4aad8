#include "hyrec/store.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "json.hpp"

#include "hyrec/errors.hpp"

namespace hyrec {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    if (s.empty()) throw IoError("empty number field");
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end != begin + s.size()) throw IoError("malformed number: " + s);
    return v;
}

namespace {

constexpr char kUsersHeader[] = "#hyrec users v1";
constexpr char kDevicesHeader[] = "#hyrec devices v1";
constexpr char kPreferencesHeader[] = "#hyrec preferences v1";
constexpr char kHistoryHeader[] = "#hyrec history v1";
constexpr char kTransactionsHeader[] = "#hyrec transactions v1";
constexpr char kTrialsHeader[] = "#hyrec trials v1";
constexpr char kCurvesHeader[] = "#hyrec curves v1";
constexpr char kAgentHeader[] = "#hyrec checkpoint v1 agent";
constexpr char kRunHeader[] = "#hyrec checkpoint v1 run";

void require_schema(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

/// Fields are validated, never escaped: a tab or line break in a value is a
/// schema violation, not something to encode around.
void check_field(const std::string& value, const std::string& what) {
    for (char c : value)
        require_schema(c != '\t' && c != '\n' && c != '\r',
                       what + ": field contains a tab or line break");
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

std::string join_tabs(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += '\t';
        out += fields[i];
    }
    return out;
}

/// Reads a whole file as lines, tracking positions for error messages.
class Reader {
  public:
    Reader(const fs::path& file) : name_(file.string()) {
        std::ifstream in(file, std::ios::binary);
        if (!in) throw IoError(name_ + ": cannot open");
        std::string line;
        while (std::getline(in, line)) lines_.push_back(line);
    }

    bool done() const { return pos_ >= lines_.size(); }

    const std::string& next(const std::string& what) {
        if (done()) fail("unexpected end of file while reading " + what);
        return lines_[pos_++];
    }

    // pos_ already points past the offending line, so its 1-based number is pos_.
    [[noreturn]] void fail(const std::string& msg) const {
        throw IoError(name_ + ":" + std::to_string(pos_ == 0 ? 1 : pos_) + ": " + msg);
    }

    std::int64_t parse_int(const std::string& s, const std::string& what) const {
        try {
            std::size_t idx = 0;
            const std::int64_t v = std::stoll(s, &idx);
            if (idx != s.size()) fail(what + ": malformed integer " + s);
            return v;
        } catch (const IoError&) {
            throw;
        } catch (const std::exception&) {
            fail(what + ": malformed integer " + s);
        }
    }

    double parse_num(const std::string& s, const std::string& what) const {
        try {
            return parse_double(s);
        } catch (const IoError&) {
            fail(what + ": malformed number " + s);
        }
    }

  private:
    std::string name_;
    std::vector<std::string> lines_;
    std::size_t pos_ = 0;
};

void atomic_write(const fs::path& file, const std::string& content) {
    fs::path tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(tmp.string() + ": cannot open for writing");
        out << content;
        out.flush();
        if (!out) throw IoError(tmp.string() + ": write failed");
    }
    std::error_code ec;
    fs::rename(tmp, file, ec);
    if (ec) throw IoError(file.string() + ": rename failed: " + ec.message());
}

void ensure_table(const fs::path& file, const char* header, const char* columns) {
    if (fs::exists(file)) {
        Reader r(file);
        if (r.done() || r.next("header") != header)
            r.fail(std::string("expected header \"") + header + "\"");
        return;
    }
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError(file.string() + ": cannot create");
    out << header << '\n' << columns << '\n';
    out.flush();
    if (!out) throw IoError(file.string() + ": write failed");
}

void append_row(const fs::path& file, const std::vector<std::string>& fields) {
    std::ofstream out(file, std::ios::binary | std::ios::app);
    if (!out) throw IoError(file.string() + ": cannot open for append");
    out << join_tabs(fields) << '\n';
    out.flush();
    if (!out) throw IoError(file.string() + ": write failed");
}

/// Opens a table for scanning: checks the version header and skips the
/// column line. Returns a Reader positioned at the first data row.
Reader open_table(const fs::path& file, const char* header) {
    Reader r(file);
    if (r.next("header") != header)
        r.fail(std::string("expected header \"") + header + "\"");
    r.next("column header");
    return r;
}

std::string reward_field(double reward) {
    require_schema(reward == 0.0 || reward == 1.0, "reward must be 0 or 1");
    return reward == 1.0 ? "1" : "0";
}

}  // namespace

// --- TableStore ----------------------------------------------------------------

TableStore::TableStore(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError(dir_.string() + ": cannot create directory: " + ec.message());
    ensure_table(dir_ / "users.tsv", kUsersHeader, "user_id\tsocial_group_id");
    ensure_table(dir_ / "devices.tsv", kDevicesHeader,
                 "user_id\tscreen_class\tcapability_flags");
    ensure_table(dir_ / "preferences.tsv", kPreferencesHeader,
                 "user_id\taction_id\treward\ttrial\tstate_id");
    ensure_table(dir_ / "history.tsv", kHistoryHeader,
                 "kind\tuser_id\ttimestamp\tresource\tsource\treward\tevent_text");
    ensure_table(dir_ / "transactions.tsv", kTransactionsHeader,
                 "id\tuser\titem\trating\tstate_id\ttrial");
}

void TableStore::append(const UserRecord& r) {
    require_schema(!r.user_id.empty(), "user record: empty user_id");
    check_field(r.user_id, "user record");
    check_field(r.social_group_id, "user record");
    check_field(r.screen_class, "user record");
    std::string flags;
    for (std::size_t i = 0; i < r.capability_flags.size(); ++i) {
        check_field(r.capability_flags[i], "user record");
        require_schema(r.capability_flags[i].find(',') == std::string::npos,
                       "user record: capability flag contains a comma");
        if (i) flags += ',';
        flags += r.capability_flags[i];
    }
    append_row(dir_ / "users.tsv", {r.user_id, r.social_group_id});
    append_row(dir_ / "devices.tsv", {r.user_id, r.screen_class, flags});
}

void TableStore::append(const PreferenceRecord& r) {
    require_schema(!r.user_id.empty(), "preference record: empty user_id");
    check_field(r.user_id, "preference record");
    check_field(r.state_id, "preference record");
    require_schema(r.action_id >= 0, "preference record: negative action id");
    append_row(dir_ / "preferences.tsv",
               {r.user_id, std::to_string(r.action_id), reward_field(r.reward),
                std::to_string(r.trial), r.state_id});
}

void TableStore::append(const HistoryRecord& r) {
    require_schema(!r.user_id.empty(), "history record: empty user_id");
    check_field(r.user_id, "history record");
    check_field(r.source, "history record");
    check_field(r.event_text, "history record");
    require_schema(r.timestamp >= 0, "history record: negative timestamp");
    std::string kind;
    if (r.kind == HistoryRecord::Kind::Action) {
        kind = "action";
        require_schema(r.resource >= 0, "history record: action needs a resource");
        require_schema(!r.source.empty(), "history record: action needs a source");
        require_schema(r.event_text.empty(), "history record: action carries no event text");
        (void)reward_field(r.reward);
    } else {
        kind = "event";
        require_schema(r.resource == -1, "history record: event carries no resource");
        require_schema(r.source.empty(), "history record: event carries no source");
        require_schema(r.reward == 0.0, "history record: event carries no reward");
        require_schema(!r.event_text.empty(), "history record: empty event text");
    }
    append_row(dir_ / "history.tsv",
               {kind, r.user_id, std::to_string(r.timestamp), std::to_string(r.resource),
                r.source, r.kind == HistoryRecord::Kind::Action ? reward_field(r.reward) : "0",
                r.event_text});
}

void TableStore::append(const Transaction& t) {
    require_schema(!t.user.empty(), "transaction: empty user");
    check_field(t.user, "transaction");
    check_field(t.state_id, "transaction");
    require_schema(t.item >= 0, "transaction: negative item");
    require_schema(t.rating >= 0.0 && t.rating <= 1.0, "transaction: rating must be in [0, 1]");
    append_row(dir_ / "transactions.tsv",
               {std::to_string(t.id), t.user, std::to_string(t.item), format_double(t.rating),
                t.state_id, std::to_string(t.trial)});
}

std::vector<UserRecord> TableStore::scan_users() const {
    Reader users = open_table(dir_ / "users.tsv", kUsersHeader);
    Reader devices = open_table(dir_ / "devices.tsv", kDevicesHeader);
    std::vector<UserRecord> out;
    while (!users.done()) {
        const auto uf = split_tabs(users.next("user row"));
        if (uf.size() != 2) users.fail("expected 2 fields in users row");
        const auto df = split_tabs(devices.next("device row"));
        if (df.size() != 3) devices.fail("expected 3 fields in devices row");
        if (df[0] != uf[0]) devices.fail("device row does not match user " + uf[0]);
        UserRecord r;
        r.user_id = uf[0];
        r.social_group_id = uf[1];
        r.screen_class = df[1];
        if (!df[2].empty()) {
            std::size_t start = 0;
            while (true) {
                const std::size_t comma = df[2].find(',', start);
                if (comma == std::string::npos) {
                    r.capability_flags.push_back(df[2].substr(start));
                    break;
                }
                r.capability_flags.push_back(df[2].substr(start, comma - start));
                start = comma + 1;
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<PreferenceRecord> TableStore::scan_preferences() const {
    Reader r = open_table(dir_ / "preferences.tsv", kPreferencesHeader);
    std::vector<PreferenceRecord> out;
    while (!r.done()) {
        const auto f = split_tabs(r.next("preference row"));
        if (f.size() != 5) r.fail("expected 5 fields in preferences row");
        PreferenceRecord rec;
        rec.user_id = f[0];
        rec.action_id = static_cast<int>(r.parse_int(f[1], "action_id"));
        rec.reward = r.parse_num(f[2], "reward");
        rec.trial = r.parse_int(f[3], "trial");
        rec.state_id = f[4];
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<HistoryRecord> TableStore::scan_history() const {
    Reader r = open_table(dir_ / "history.tsv", kHistoryHeader);
    std::vector<HistoryRecord> out;
    while (!r.done()) {
        const auto f = split_tabs(r.next("history row"));
        if (f.size() != 7) r.fail("expected 7 fields in history row");
        HistoryRecord rec;
        if (f[0] == "action")
            rec.kind = HistoryRecord::Kind::Action;
        else if (f[0] == "event")
            rec.kind = HistoryRecord::Kind::Event;
        else
            r.fail("unknown history kind " + f[0]);
        rec.user_id = f[1];
        rec.timestamp = r.parse_int(f[2], "timestamp");
        rec.resource = static_cast<int>(r.parse_int(f[3], "resource"));
        rec.source = f[4];
        rec.reward = r.parse_num(f[5], "reward");
        rec.event_text = f[6];
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<Transaction> TableStore::scan_transactions() const {
    Reader r = open_table(dir_ / "transactions.tsv", kTransactionsHeader);
    std::vector<Transaction> out;
    while (!r.done()) {
        const auto f = split_tabs(r.next("transaction row"));
        if (f.size() != 6) r.fail("expected 6 fields in transactions row");
        Transaction t;
        t.id = r.parse_int(f[0], "id");
        t.user = f[1];
        t.item = static_cast<int>(r.parse_int(f[2], "item"));
        t.rating = r.parse_num(f[3], "rating");
        t.state_id = f[4];
        t.trial = r.parse_int(f[5], "trial");
        out.push_back(std::move(t));
    }
    return out;
}

// --- Agent checkpoints -----------------------------------------------------------

namespace {

json options_to_json(const AgentOptions& o) {
    return json{{"variant", std::string(to_string(o.variant))},
                {"alpha", o.params.alpha},
                {"gamma", o.params.gamma},
                {"epsilon", o.params.epsilon},
                {"p", o.params.p},
                {"n_actions", o.n_actions},
                {"user_id", o.user_id},
                {"group_id", o.group_id},
                {"reuse_threshold", o.reuse_threshold},
                {"success_threshold", o.success_threshold},
                {"k_users", o.k_users},
                {"k_items", o.k_items},
                {"rebuild_every", o.rebuild_every},
                {"include_cognitive_in_state", o.include_cognitive_in_state},
                {"seed", o.seed}};
}

AgentOptions options_from_json(const json& j, const Reader& r) {
    if (!j.is_object()) r.fail("options: expected a JSON object");
    AgentOptions o;
    try {
        o.variant = variant_from_string(j.at("variant").get<std::string>());
        o.params.alpha = j.at("alpha").get<double>();
        o.params.gamma = j.at("gamma").get<double>();
        o.params.epsilon = j.at("epsilon").get<double>();
        o.params.p = j.at("p").get<double>();
        o.n_actions = j.at("n_actions").get<int>();
        o.user_id = j.at("user_id").get<std::string>();
        o.group_id = j.at("group_id").get<std::string>();
        o.reuse_threshold = j.at("reuse_threshold").get<double>();
        o.success_threshold = j.at("success_threshold").get<double>();
        o.k_users = j.at("k_users").get<int>();
        o.k_items = j.at("k_items").get<int>();
        o.rebuild_every = j.at("rebuild_every").get<int>();
        o.include_cognitive_in_state = j.at("include_cognitive_in_state").get<bool>();
        o.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        r.fail(std::string("options: ") + e.what());
    } catch (const std::invalid_argument& e) {
        r.fail(std::string("options: ") + e.what());
    }
    return o;
}

std::string rng_state(const rng::Engine& eng) {
    std::ostringstream os;
    os << eng;
    return os.str();
}

void parse_rng(const std::string& s, rng::Engine& eng, const Reader& r) {
    std::istringstream is(s);
    is >> eng;
    if (!is) r.fail("malformed rng state");
}

void write_agent_sections(std::ostream& out, const Agent& agent) {
    out << "options\t" << options_to_json(agent.options()).dump() << '\n';
    out << "trial\t" << agent.trial() << '\n';
    out << "rng\t" << rng_state(agent.rng()) << '\n';

    const auto& cells = agent.qtable().cells();
    out << "qtable\t" << cells.size() << '\n';
    for (const auto& [key, value] : cells)
        out << "q\t" << key.first << '\t' << key.second << '\t' << format_double(value) << '\n';

    const auto& cases = agent.casebase().cases();
    out << "casebase\t" << cases.size() << '\n';
    for (const auto& [key, c] : cases) {
        const Situation& s = c.situation;
        out << "case\t" << to_string(s.time.granularity) << '\t' << s.time.label << '\t'
            << s.time.day_type << '\t' << to_string(s.location.granularity) << '\t'
            << s.location.label << '\t' << s.location.city << '\t' << s.location.region << '\t'
            << s.social_group_id << '\t' << to_string(s.cognitive_action) << '\t' << c.action
            << '\t' << c.successes << '\t' << c.attempts << '\t' << c.last_trial << '\n';
    }

    const RatingMatrix& m = agent.matrix();
    out << "matrix\t" << m.users().size() << '\t' << m.transactions().size() << '\n';
    for (const std::string& u : m.users()) out << "user\t" << u << '\t' << m.group_of(u) << '\n';
    for (const Transaction& t : m.transactions())
        out << "tx\t" << t.id << '\t' << t.user << '\t' << t.item << '\t'
            << format_double(t.rating) << '\t' << t.state_id << '\t' << t.trial << '\n';
}

Agent read_agent_sections(Reader& r) {
    auto fields = split_tabs(r.next("options"));
    if (fields.size() != 2 || fields[0] != "options") r.fail("expected options line");
    json oj;
    try {
        oj = json::parse(fields[1]);
    } catch (const json::parse_error& e) {
        r.fail(std::string("options: ") + e.what());
    }
    std::optional<Agent> agent_box;
    try {
        agent_box.emplace(options_from_json(oj, r));
    } catch (const std::invalid_argument& e) {
        r.fail(std::string("options: ") + e.what());
    }
    Agent& agent = *agent_box;

    fields = split_tabs(r.next("trial"));
    if (fields.size() != 2 || fields[0] != "trial") r.fail("expected trial line");
    agent.set_trial(r.parse_int(fields[1], "trial"));

    fields = split_tabs(r.next("rng"));
    if (fields.size() != 2 || fields[0] != "rng") r.fail("expected rng line");
    parse_rng(fields[1], agent.rng(), r);

    fields = split_tabs(r.next("qtable"));
    if (fields.size() != 2 || fields[0] != "qtable") r.fail("expected qtable line");
    const std::int64_t n_cells = r.parse_int(fields[1], "qtable count");
    for (std::int64_t i = 0; i < n_cells; ++i) {
        fields = split_tabs(r.next("qtable cell"));
        if (fields.size() != 4 || fields[0] != "q") r.fail("expected q line");
        try {
            agent.qtable().set(fields[1], static_cast<int>(r.parse_int(fields[2], "action")),
                               r.parse_num(fields[3], "q value"));
        } catch (const std::invalid_argument& e) {
            r.fail(std::string("q cell: ") + e.what());
        }
    }

    fields = split_tabs(r.next("casebase"));
    if (fields.size() != 2 || fields[0] != "casebase") r.fail("expected casebase line");
    const std::int64_t n_cases = r.parse_int(fields[1], "casebase count");
    for (std::int64_t i = 0; i < n_cases; ++i) {
        fields = split_tabs(r.next("case"));
        if (fields.size() != 14 || fields[0] != "case") r.fail("expected case line");
        Case c;
        try {
            c.situation.time.granularity = time_granularity_from_string(fields[1]);
            c.situation.time.label = fields[2];
            c.situation.time.day_type = fields[3];
            c.situation.location.granularity = location_granularity_from_string(fields[4]);
            c.situation.location.label = fields[5];
            c.situation.location.city = fields[6];
            c.situation.location.region = fields[7];
            c.situation.social_group_id = fields[8];
            c.situation.cognitive_action = cognitive_action_from_string(fields[9]);
        } catch (const std::invalid_argument& e) {
            r.fail(std::string("case: ") + e.what());
        }
        c.action = static_cast<int>(r.parse_int(fields[10], "case action"));
        c.successes = r.parse_int(fields[11], "case successes");
        c.attempts = r.parse_int(fields[12], "case attempts");
        c.last_trial = r.parse_int(fields[13], "case last_trial");
        try {
            agent.casebase().insert(c);
        } catch (const std::invalid_argument& e) {
            r.fail(std::string("case: ") + e.what());
        }
    }

    fields = split_tabs(r.next("matrix"));
    if (fields.size() != 3 || fields[0] != "matrix") r.fail("expected matrix line");
    const std::int64_t n_users = r.parse_int(fields[1], "matrix user count");
    const std::int64_t n_tx = r.parse_int(fields[2], "matrix transaction count");
    RatingMatrix m(agent.options().n_actions);
    try {
        for (std::int64_t i = 0; i < n_users; ++i) {
            fields = split_tabs(r.next("matrix user"));
            if (fields.size() != 3 || fields[0] != "user") r.fail("expected user line");
            m.add_user(fields[1], fields[2]);
        }
        for (std::int64_t i = 0; i < n_tx; ++i) {
            fields = split_tabs(r.next("matrix transaction"));
            if (fields.size() != 7 || fields[0] != "tx") r.fail("expected tx line");
            Transaction t;
            t.id = r.parse_int(fields[1], "tx id");
            t.user = fields[2];
            t.item = static_cast<int>(r.parse_int(fields[3], "tx item"));
            t.rating = r.parse_num(fields[4], "tx rating");
            t.state_id = fields[5];
            t.trial = r.parse_int(fields[6], "tx trial");
            m.add_transaction(t);
        }
    } catch (const std::invalid_argument& e) {
        r.fail(std::string("matrix: ") + e.what());
    }
    agent.matrix() = std::move(m);
    agent.invalidate_group_model();
    return std::move(agent);
}

}  // namespace

void save_agent(const Agent& agent, const fs::path& file) {
    std::ostringstream out;
    out << kAgentHeader << '\n';
    write_agent_sections(out, agent);
    out << "END\n";
    atomic_write(file, out.str());
}

Agent load_agent(const fs::path& file) {
    Reader r(file);
    if (r.next("header") != kAgentHeader) r.fail("not an agent checkpoint");
    Agent agent = read_agent_sections(r);
    if (r.next("END marker") != "END") r.fail("expected END marker");
    return agent;
}

// --- Run checkpoints --------------------------------------------------------------

void save_run(const RunState& st, const fs::path& file) {
    std::ostringstream out;
    out << kRunHeader << '\n';
    json config_json = json::parse(config_to_json(st.config));
    out << "config\t" << config_json.dump() << '\n';
    out << "spec\t" << st.spec.variant << '\t' << st.spec.seed << '\t' << st.spec.user_id
        << '\t' << st.spec.team_id << '\n';
    out << "trial\t" << st.trial << '\n';
    out << "env_rng\t" << rng_state(st.env_rng) << '\n';
    out << "records\t" << st.records.size() << '\n';
    for (const TrialRecord& rec : st.records)
        out << "rec\t" << rec.trial << '\t' << rec.state_id << '\t' << rec.action << '\t'
            << to_string(rec.source) << '\t' << (rec.accepted ? 1 : 0) << '\n';
    write_agent_sections(out, st.agent);
    out << "END\n";
    atomic_write(file, out.str());
}

RunState load_run(const fs::path& file) {
    Reader r(file);
    if (r.next("header") != kRunHeader) r.fail("not a run checkpoint");

    auto fields = split_tabs(r.next("config"));
    if (fields.size() != 2 || fields[0] != "config") r.fail("expected config line");
    AppConfig config;
    try {
        config = parse_config(fields[1], file.string());
    } catch (const ConfigError& e) {
        r.fail(e.what());
    }

    fields = split_tabs(r.next("spec"));
    if (fields.size() != 5 || fields[0] != "spec") r.fail("expected spec line");
    RunSpec spec;
    spec.variant = fields[1];
    spec.seed = static_cast<std::uint64_t>(r.parse_int(fields[2], "spec seed"));
    spec.user_id = fields[3];
    spec.team_id = fields[4];

    fields = split_tabs(r.next("trial"));
    if (fields.size() != 2 || fields[0] != "trial") r.fail("expected trial line");
    const std::int64_t trial = r.parse_int(fields[1], "trial");

    fields = split_tabs(r.next("env_rng"));
    if (fields.size() != 2 || fields[0] != "env_rng") r.fail("expected env_rng line");
    rng::Engine env_rng;
    parse_rng(fields[1], env_rng, r);

    fields = split_tabs(r.next("records"));
    if (fields.size() != 2 || fields[0] != "records") r.fail("expected records line");
    const std::int64_t n_records = r.parse_int(fields[1], "record count");
    std::vector<TrialRecord> records;
    records.reserve(static_cast<std::size_t>(n_records));
    for (std::int64_t i = 0; i < n_records; ++i) {
        fields = split_tabs(r.next("record"));
        if (fields.size() != 6 || fields[0] != "rec") r.fail("expected rec line");
        TrialRecord rec;
        rec.trial = r.parse_int(fields[1], "record trial");
        rec.state_id = fields[2];
        rec.action = static_cast<int>(r.parse_int(fields[3], "record action"));
        try {
            rec.source = action_source_from_string(fields[4]);
        } catch (const std::invalid_argument& e) {
            r.fail(std::string("record: ") + e.what());
        }
        if (fields[5] != "0" && fields[5] != "1") r.fail("record: accepted must be 0 or 1");
        rec.accepted = fields[5] == "1";
        records.push_back(std::move(rec));
    }

    Agent agent = read_agent_sections(r);
    if (r.next("END marker") != "END") r.fail("expected END marker");

    // The population is a pure function of (config, seed): regenerate it
    // rather than trusting serialized copies.
    std::vector<SimUser> population;
    try {
        population = make_population(config, spec.seed);
    } catch (const ConfigError& e) {
        r.fail(e.what());
    }
    std::size_t target = population.size();
    for (std::size_t i = 0; i < population.size(); ++i)
        if (population[i].user_id == spec.user_id) target = i;
    if (target >= population.size()) r.fail("spec user not in population: " + spec.user_id);

    RunState st{std::move(config), std::move(spec), std::move(population), target,
                std::move(agent),  env_rng,         trial,                 std::move(records)};
    // Drift mutates the population at its trial; a state restored past that
    // point must re-apply it (the dedicated stream keeps it identical).
    if (st.config.sim.drift_trial >= 0 && st.trial > st.config.sim.drift_trial)
        apply_interest_drift(st);
    return st;
}

// --- Trial logs and curves ---------------------------------------------------------

void write_trial_log(const fs::path& file, const TrialLog& log) {
    std::ostringstream out;
    out << kTrialsHeader << '\n';
    out << "trial\tstate_id\taction\tsource\taccepted\tvariant\tseed\tuser\n";
    for (const TrialRecord& rec : log.records)
        out << rec.trial << '\t' << rec.state_id << '\t' << rec.action << '\t'
            << to_string(rec.source) << '\t' << (rec.accepted ? 1 : 0) << '\t' << log.variant
            << '\t' << log.seed << '\t' << log.user_id << '\n';
    atomic_write(file, out.str());
}

TrialLog read_trial_log(const fs::path& file) {
    Reader r = open_table(file, kTrialsHeader);
    TrialLog log;
    bool first = true;
    while (!r.done()) {
        const auto f = split_tabs(r.next("trial row"));
        if (f.size() != 8) r.fail("expected 8 fields in trials row");
        TrialRecord rec;
        rec.trial = r.parse_int(f[0], "trial");
        rec.state_id = f[1];
        rec.action = static_cast<int>(r.parse_int(f[2], "action"));
        try {
            rec.source = action_source_from_string(f[3]);
        } catch (const std::invalid_argument& e) {
            r.fail(std::string("trial row: ") + e.what());
        }
        if (f[4] != "0" && f[4] != "1") r.fail("trial row: accepted must be 0 or 1");
        rec.accepted = f[4] == "1";
        if (first) {
            log.variant = f[5];
            log.seed = static_cast<std::uint64_t>(r.parse_int(f[6], "seed"));
            log.user_id = f[7];
            first = false;
        } else if (log.variant != f[5] || std::to_string(log.seed) != f[6] ||
                   log.user_id != f[7]) {
            r.fail("trial row: inconsistent run identity");
        }
        log.records.push_back(std::move(rec));
    }
    return log;
}

void write_curves(const fs::path& file, const std::vector<RunResult>& runs) {
    std::ostringstream out;
    out << kCurvesHeader << '\n';
    out << "variant\tseed\tuser\twindow_index\tprecision\n";
    char buf[32];
    for (const RunResult& run : runs)
        for (std::size_t w = 0; w < run.curve.values.size(); ++w) {
            std::snprintf(buf, sizeof buf, "%.6f", run.curve.values[w]);
            out << run.spec.variant << '\t' << run.spec.seed << '\t' << run.spec.user_id
                << '\t' << w << '\t' << buf << '\n';
        }
    atomic_write(file, out.str());
}

std::vector<CurveRow> read_curves(const fs::path& file) {
    Reader r = open_table(file, kCurvesHeader);
    std::vector<CurveRow> out;
    while (!r.done()) {
        const auto f = split_tabs(r.next("curve row"));
        if (f.size() != 5) r.fail("expected 5 fields in curves row");
        const std::uint64_t seed = static_cast<std::uint64_t>(r.parse_int(f[1], "seed"));
        const std::size_t window = static_cast<std::size_t>(r.parse_int(f[3], "window_index"));
        if (out.empty() || out.back().variant != f[0] || out.back().seed != seed ||
            out.back().user_id != f[2]) {
            if (window != 0) r.fail("curve rows out of order");
            CurveRow row;
            row.variant = f[0];
            row.seed = seed;
            row.user_id = f[2];
            out.push_back(std::move(row));
        } else if (window != out.back().values.size()) {
            r.fail("curve rows out of order");
        }
        out.back().values.push_back(r.parse_num(f[4], "precision"));
    }
    return out;
}

}  // namespace hyrec
