#include "hyrec/context.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace hyrec {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

void require_label(std::string_view label, const std::string& what) {
    require(!label.empty(), what + ": empty label");
    require(label.find('|') == std::string_view::npos, what + ": label contains '|'");
}

}  // namespace

std::string_view to_string(TimeGranularity g) {
    switch (g) {
        case TimeGranularity::Hour: return "hour";
        case TimeGranularity::PeriodOfDay: return "period-of-day";
        case TimeGranularity::DayType: return "day-type";
    }
    throw std::invalid_argument("unknown time granularity");
}

std::string_view to_string(LocationGranularity g) {
    switch (g) {
        case LocationGranularity::Place: return "place";
        case LocationGranularity::City: return "city";
        case LocationGranularity::Region: return "region";
    }
    throw std::invalid_argument("unknown location granularity");
}

std::string_view to_string(CognitiveAction a) {
    switch (a) {
        case CognitiveAction::None: return "none";
        case CognitiveAction::ReadDocument: return "read-document";
        case CognitiveAction::OpenFolder: return "open-folder";
        case CognitiveAction::SendEmail: return "send-email";
        case CognitiveAction::Call: return "call";
    }
    throw std::invalid_argument("unknown cognitive action");
}

TimeGranularity time_granularity_from_string(std::string_view s) {
    if (s == "hour") return TimeGranularity::Hour;
    if (s == "period-of-day") return TimeGranularity::PeriodOfDay;
    if (s == "day-type") return TimeGranularity::DayType;
    throw std::invalid_argument("unknown time granularity: " + std::string(s));
}

LocationGranularity location_granularity_from_string(std::string_view s) {
    if (s == "place") return LocationGranularity::Place;
    if (s == "city") return LocationGranularity::City;
    if (s == "region") return LocationGranularity::Region;
    throw std::invalid_argument("unknown location granularity: " + std::string(s));
}

CognitiveAction cognitive_action_from_string(std::string_view s) {
    if (s == "none") return CognitiveAction::None;
    if (s == "read-document") return CognitiveAction::ReadDocument;
    if (s == "open-folder") return CognitiveAction::OpenFolder;
    if (s == "send-email") return CognitiveAction::SendEmail;
    if (s == "call") return CognitiveAction::Call;
    throw std::invalid_argument("unknown cognitive action: " + std::string(s));
}

// --- TimeVocabulary ---------------------------------------------------------

TimeVocabulary::TimeVocabulary()
    : TimeVocabulary({{"night", 0, 6},
                      {"morning", 6, 11},
                      {"midday", 11, 14},
                      {"afternoon", 14, 18},
                      {"evening", 18, 24}}) {}

TimeVocabulary::TimeVocabulary(std::vector<Period> periods) : periods_(std::move(periods)) {
    require(!periods_.empty(), "time vocabulary: no periods");
    by_hour_.assign(24, periods_.size());
    std::vector<std::string> seen;
    for (std::size_t i = 0; i < periods_.size(); ++i) {
        const Period& p = periods_[i];
        require_label(p.label, "time vocabulary");
        require(std::find(seen.begin(), seen.end(), p.label) == seen.end(),
                "time vocabulary: duplicate label " + p.label);
        seen.push_back(p.label);
        require(p.begin_hour >= 0 && p.end_hour <= 24 && p.begin_hour < p.end_hour,
                "time vocabulary: bad range for " + p.label);
        for (int h = p.begin_hour; h < p.end_hour; ++h) {
            require(by_hour_[static_cast<std::size_t>(h)] == periods_.size(),
                    "time vocabulary: overlapping periods at hour " + std::to_string(h));
            by_hour_[static_cast<std::size_t>(h)] = i;
        }
    }
    for (int h = 0; h < 24; ++h)
        require(by_hour_[static_cast<std::size_t>(h)] != periods_.size(),
                "time vocabulary: hour " + std::to_string(h) + " uncovered");
}

const std::string& TimeVocabulary::period_of_hour(int hour) const {
    require(hour >= 0 && hour < 24, "period_of_hour: hour out of range");
    return periods_[by_hour_[static_cast<std::size_t>(hour)]].label;
}

bool TimeVocabulary::has_period(std::string_view label) const {
    for (const Period& p : periods_)
        if (p.label == label) return true;
    return false;
}

const TimeVocabulary& TimeVocabulary::standard() {
    static const TimeVocabulary v;
    return v;
}

// --- LocationHierarchy ------------------------------------------------------

void LocationHierarchy::add_place(const std::string& place, const std::string& city,
                                  const std::string& region) {
    require_label(place, "location hierarchy");
    require_label(city, "location hierarchy");
    require_label(region, "location hierarchy");
    require(places_.find(place) == places_.end(),
            "location hierarchy: duplicate place " + place);
    auto it = city_region_.find(city);
    if (it != city_region_.end())
        require(it->second == region, "location hierarchy: city " + city + " in two regions");
    else
        city_region_.emplace(city, region);
    places_.emplace(place, Ancestors{city, region});
}

bool LocationHierarchy::has_place(const std::string& place) const {
    return places_.find(place) != places_.end();
}

const std::string& LocationHierarchy::city_of(const std::string& place) const {
    auto it = places_.find(place);
    require(it != places_.end(), "location hierarchy: unknown place " + place);
    return it->second.city;
}

const std::string& LocationHierarchy::region_of(const std::string& place) const {
    auto it = places_.find(place);
    require(it != places_.end(), "location hierarchy: unknown place " + place);
    return it->second.region;
}

std::vector<std::string> LocationHierarchy::places() const {
    std::vector<std::string> out;
    out.reserve(places_.size());
    for (const auto& [id, anc] : places_) out.push_back(id);
    return out;
}

LocationHierarchy LocationHierarchy::standard_tree() {
    LocationHierarchy h;
    h.add_place("office", "hq-city", "metro-region");
    h.add_place("home", "hq-city", "metro-region");
    h.add_place("client-site", "client-city", "metro-region");
    return h;
}

// --- Calendar helpers -------------------------------------------------------

int hour_of(std::int64_t timestamp) {
    require(timestamp >= 0, "negative timestamp");
    return static_cast<int>((timestamp % 86400) / 3600);
}

int day_index_of(std::int64_t timestamp) {
    require(timestamp >= 0, "negative timestamp");
    return static_cast<int>(timestamp / 86400);
}

int weekday_index(int day_index) {
    // Day 0 (1970-01-01) was a Thursday; shift so 0 means Monday.
    return ((day_index + 3) % 7 + 7) % 7;
}

bool is_weekend(int day_index) {
    int w = weekday_index(day_index);
    return w == 5 || w == 6;
}

// --- Abstraction -------------------------------------------------------------

TimeConcept abstract_time(std::int64_t timestamp, TimeGranularity g, const TimeVocabulary& vocab) {
    require(timestamp >= 0, "abstract_time: negative timestamp");
    const int hour = hour_of(timestamp);
    const bool weekend = is_weekend(day_index_of(timestamp));
    TimeConcept c;
    c.granularity = g;
    c.day_type = weekend ? "weekend" : "weekday";
    switch (g) {
        case TimeGranularity::Hour: {
            char buf[8];
            std::snprintf(buf, sizeof buf, "h%02d", hour);
            c.label = buf;
            break;
        }
        case TimeGranularity::PeriodOfDay:
            c.label = vocab.period_of_hour(hour);
            break;
        case TimeGranularity::DayType:
            c.label = c.day_type;
            break;
    }
    return c;
}

LocationConcept abstract_location(const std::string& place_id, LocationGranularity g,
                                  const LocationHierarchy& hierarchy) {
    require(hierarchy.has_place(place_id), "abstract_location: unknown place " + place_id);
    LocationConcept c;
    c.granularity = g;
    switch (g) {
        case LocationGranularity::Place:
            c.label = place_id;
            c.city = hierarchy.city_of(place_id);
            c.region = hierarchy.region_of(place_id);
            break;
        case LocationGranularity::City:
            c.label = hierarchy.city_of(place_id);
            c.region = hierarchy.region_of(place_id);
            break;
        case LocationGranularity::Region:
            c.label = hierarchy.region_of(place_id);
            break;
    }
    return c;
}

Situation aggregate(const RawContext& raw, TimeGranularity tg, LocationGranularity lg,
                    const TimeVocabulary& vocab, const LocationHierarchy& hierarchy) {
    require_label(raw.social_group_id, "aggregate: social group");
    Situation s;
    s.time = abstract_time(raw.timestamp, tg, vocab);
    s.location = abstract_location(raw.place_id, lg, hierarchy);
    s.social_group_id = raw.social_group_id;
    s.cognitive_action = raw.cognitive_action;
    return s;
}

// --- Encoding ----------------------------------------------------------------

std::string encode(const Situation& s, bool include_cognitive) {
    require_label(s.time.label, "encode: time");
    require_label(s.location.label, "encode: location");
    require_label(s.social_group_id, "encode: social group");
    std::string out = s.time.label;
    out += '|';
    out += s.location.label;
    out += '|';
    out += s.social_group_id;
    if (include_cognitive) {
        out += '|';
        out += to_string(s.cognitive_action);
    }
    return out;
}

StateFields decode(const std::string& state_id, bool include_cognitive) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t bar = state_id.find('|', start);
        if (bar == std::string::npos) {
            parts.push_back(state_id.substr(start));
            break;
        }
        parts.push_back(state_id.substr(start, bar - start));
        start = bar + 1;
    }
    const std::size_t expected = include_cognitive ? 4u : 3u;
    require(parts.size() == expected, "decode: expected " + std::to_string(expected) +
                                          " fields, got " + std::to_string(parts.size()));
    StateFields f;
    f.time_label = parts[0];
    f.location_label = parts[1];
    f.social_group_id = parts[2];
    if (include_cognitive) f.cognitive_label = parts[3];
    return f;
}

}  // namespace hyrec
