#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hyrec/agent.hpp"
#include "hyrec/sim.hpp"

namespace hyrec {

/// Shortest exact decimal form of a double ("%.17g"); parse_double reads it
/// back bit-identically.
std::string format_double(double v);
double parse_double(const std::string& s);

// ---------------------------------------------------------------------------
// The four-part interaction database: users (with device profile), the
// recommendation/reward couples, and the action/event history.
// ---------------------------------------------------------------------------

struct UserRecord {
    std::string user_id;
    std::string social_group_id;
    std::string screen_class;                    // device profile
    std::vector<std::string> capability_flags;   // device profile
};

struct PreferenceRecord {
    std::string user_id;
    int action_id = 0;
    double reward = 0.0;  // must be 0 or 1
    std::int64_t trial = 0;
    std::string state_id;
};

struct HistoryRecord {
    enum class Kind { Action, Event };
    Kind kind = Kind::Action;
    std::string user_id;
    std::int64_t timestamp = 0;
    // Action payload: what was recommended, by which policy branch, with
    // what outcome. Event payload: a calendar entry.
    int resource = -1;
    std::string source;
    double reward = 0.0;
    std::string event_text;
};

/// A directory of append-only TSV tables (users, devices, preferences,
/// history, transactions), each starting with a version header line.
/// Appends validate the record first and leave the file untouched on a
/// schema violation (std::invalid_argument). I/O failures throw IoError.
class TableStore {
  public:
    explicit TableStore(std::filesystem::path dir);
    const std::filesystem::path& dir() const { return dir_; }

    void append(const UserRecord& r);        // writes users + devices rows
    void append(const PreferenceRecord& r);
    void append(const HistoryRecord& r);
    void append(const Transaction& t);

    std::vector<UserRecord> scan_users() const;
    std::vector<PreferenceRecord> scan_preferences() const;
    std::vector<HistoryRecord> scan_history() const;
    std::vector<Transaction> scan_transactions() const;

  private:
    std::filesystem::path dir_;
};

// ---------------------------------------------------------------------------
// Checkpoints. Text files with counted sections and a final END marker;
// any truncation or corruption raises IoError naming the line, and nothing
// partial is ever returned. restore(checkpoint(x)) continues bit-for-bit
// identically to x under the same seeds.
// ---------------------------------------------------------------------------

void save_agent(const Agent& agent, const std::filesystem::path& file);
Agent load_agent(const std::filesystem::path& file);

void save_run(const RunState& st, const std::filesystem::path& file);
RunState load_run(const std::filesystem::path& file);

// ---------------------------------------------------------------------------
// Run outputs: per-run trial logs and the combined precision-curve table.
// ---------------------------------------------------------------------------

void write_trial_log(const std::filesystem::path& file, const TrialLog& log);
TrialLog read_trial_log(const std::filesystem::path& file);

struct CurveRow {
    std::string variant;
    std::uint64_t seed = 0;
    std::string user_id;
    std::vector<double> values;
};

void write_curves(const std::filesystem::path& file, const std::vector<RunResult>& runs);
std::vector<CurveRow> read_curves(const std::filesystem::path& file);

}  // namespace hyrec
