#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hyrec {

// ---------------------------------------------------------------------------
// Granularity levels and the cognitive-action vocabulary.
// ---------------------------------------------------------------------------

enum class TimeGranularity { Hour, PeriodOfDay, DayType };
enum class LocationGranularity { Place, City, Region };
enum class CognitiveAction { None, ReadDocument, OpenFolder, SendEmail, Call };

std::string_view to_string(TimeGranularity g);
std::string_view to_string(LocationGranularity g);
std::string_view to_string(CognitiveAction a);
TimeGranularity time_granularity_from_string(std::string_view s);
LocationGranularity location_granularity_from_string(std::string_view s);
CognitiveAction cognitive_action_from_string(std::string_view s);

// ---------------------------------------------------------------------------
// Raw observations.
// ---------------------------------------------------------------------------

/// One low-level sensor snapshot. `timestamp` is naive local seconds since
/// 1970-01-01 00:00 (no time zone handling; the simulator produces these
/// directly in local time). Must be >= 0.
struct RawContext {
    std::int64_t timestamp = 0;
    std::string place_id;
    std::string social_group_id;
    CognitiveAction cognitive_action = CognitiveAction::None;
};

// ---------------------------------------------------------------------------
// Abstracted concepts. Equality is (granularity, label); the extra fields
// carry ancestry used by case similarity and are derived, never compared.
// ---------------------------------------------------------------------------

struct TimeConcept {
    TimeGranularity granularity = TimeGranularity::PeriodOfDay;
    std::string label;
    std::string day_type;  // "weekday" or "weekend" of the source timestamp

    friend bool operator==(const TimeConcept& a, const TimeConcept& b) {
        return a.granularity == b.granularity && a.label == b.label;
    }
    friend bool operator!=(const TimeConcept& a, const TimeConcept& b) { return !(a == b); }
};

struct LocationConcept {
    LocationGranularity granularity = LocationGranularity::Place;
    std::string label;
    std::string city;    // empty when the concept is coarser than city
    std::string region;

    friend bool operator==(const LocationConcept& a, const LocationConcept& b) {
        return a.granularity == b.granularity && a.label == b.label;
    }
    friend bool operator!=(const LocationConcept& a, const LocationConcept& b) { return !(a == b); }
};

/// The learning state: abstracted time and place, plus the group the user
/// is acting in and what they are doing on the device.
struct Situation {
    TimeConcept time;
    LocationConcept location;
    std::string social_group_id;
    CognitiveAction cognitive_action = CognitiveAction::None;

    friend bool operator==(const Situation& a, const Situation& b) {
        return a.time == b.time && a.location == b.location &&
               a.social_group_id == b.social_group_id &&
               a.cognitive_action == b.cognitive_action;
    }
    friend bool operator!=(const Situation& a, const Situation& b) { return !(a == b); }
};

// ---------------------------------------------------------------------------
// Vocabularies.
// ---------------------------------------------------------------------------

/// Named day periods forming a partition of the 24 hours.
class TimeVocabulary {
  public:
    /// One period: label plus the half-open hour range [begin, end).
    struct Period {
        std::string label;
        int begin_hour = 0;
        int end_hour = 0;
    };

    /// Default periods: night [0,6), morning [6,11), midday [11,14),
    /// afternoon [14,18), evening [18,24).
    TimeVocabulary();

    /// Validates that the periods exactly cover [0,24) with no overlap,
    /// labels are unique, nonempty and free of '|'. Throws
    /// std::invalid_argument otherwise.
    explicit TimeVocabulary(std::vector<Period> periods);

    const std::string& period_of_hour(int hour) const;  // hour in [0,24)
    bool has_period(std::string_view label) const;
    const std::vector<Period>& periods() const { return periods_; }

    static const TimeVocabulary& standard();

  private:
    std::vector<Period> periods_;
    std::vector<std::size_t> by_hour_;  // hour -> index into periods_
};

/// Three-level containment tree: place -> city -> region.
class LocationHierarchy {
  public:
    /// Registers a place. A place id may be added once; a city must keep a
    /// single region across calls. Labels must be nonempty and free of '|'.
    /// Throws std::invalid_argument on violations.
    void add_place(const std::string& place, const std::string& city, const std::string& region);

    bool has_place(const std::string& place) const;
    /// Ancestors of a known place. Throws std::invalid_argument for unknown ids.
    const std::string& city_of(const std::string& place) const;
    const std::string& region_of(const std::string& place) const;
    std::vector<std::string> places() const;  // sorted by id

    /// Default tree used by the simulator: region "metro-region" containing
    /// "hq-city" (office, home) and "client-city" (client-site).
    static LocationHierarchy standard_tree();

  private:
    struct Ancestors {
        std::string city;
        std::string region;
    };
    std::map<std::string, Ancestors> places_;
    std::map<std::string, std::string> city_region_;
};

// ---------------------------------------------------------------------------
// Abstraction operators.
// ---------------------------------------------------------------------------

/// Maps a timestamp to a concept at the requested granularity.
/// Hour labels are "h00".."h23"; day-type labels are "weekday"/"weekend"
/// (Saturday and Sunday are the weekend). Throws std::invalid_argument for
/// negative timestamps.
TimeConcept abstract_time(std::int64_t timestamp, TimeGranularity g,
                          const TimeVocabulary& vocab = TimeVocabulary::standard());

/// Maps a place id to a concept at the requested granularity. The place must
/// exist in the hierarchy.
LocationConcept abstract_location(const std::string& place_id, LocationGranularity g,
                                  const LocationHierarchy& hierarchy);

/// Full abstraction of a raw snapshot at the given granularities.
Situation aggregate(const RawContext& raw, TimeGranularity tg, LocationGranularity lg,
                    const TimeVocabulary& vocab, const LocationHierarchy& hierarchy);

// ---------------------------------------------------------------------------
// State encoding. Situations become Q-table states through a canonical
// string; two situations encode equal iff they compare equal (given the
// same include_cognitive choice).
// ---------------------------------------------------------------------------

/// "<time>|<location>|<group>" or, with include_cognitive,
/// "<time>|<location>|<group>|<cognitive>". Labels must not contain '|'
/// (enforced; violations throw std::invalid_argument).
std::string encode(const Situation& s, bool include_cognitive = false);

struct StateFields {
    std::string time_label;
    std::string location_label;
    std::string social_group_id;
    std::string cognitive_label;  // empty unless include_cognitive
};

/// Splits a state id back into its label fields. Throws
/// std::invalid_argument when the field count does not match.
StateFields decode(const std::string& state_id, bool include_cognitive = false);

// Calendar helpers shared with the simulator.
int hour_of(std::int64_t timestamp);
int day_index_of(std::int64_t timestamp);      // days since 1970-01-01
int weekday_index(int day_index);              // 0 = Monday .. 6 = Sunday
bool is_weekend(int day_index);

}  // namespace hyrec
