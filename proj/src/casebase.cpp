#include "hyrec/casebase.hpp"

#include <cmath>
#include <stdexcept>

namespace hyrec {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

double time_score(const TimeConcept& a, const TimeConcept& b) {
    if (a == b) return 1.0;
    if (!a.day_type.empty() && a.day_type == b.day_type) return 0.5;
    return 0.0;
}

double location_score(const LocationConcept& a, const LocationConcept& b) {
    if (a == b) return 1.0;
    if (!a.city.empty() && a.city == b.city) return 0.5;
    if (!a.region.empty() && a.region == b.region) return 0.25;
    return 0.0;
}

}  // namespace

void CaseSimilarityWeights::validate() const {
    for (double w : {time, location, social, cognitive})
        require(std::isfinite(w) && w >= 0.0, "case similarity weights: negative weight");
    const double sum = time + location + social + cognitive;
    require(std::abs(sum - 1.0) <= 1e-9, "case similarity weights: must sum to 1");
}

double case_similarity(const Situation& a, const Situation& b,
                       const CaseSimilarityWeights& w) {
    w.validate();
    double score = 0.0;
    score += w.time * time_score(a.time, b.time);
    score += w.location * location_score(a.location, b.location);
    score += w.social * (a.social_group_id == b.social_group_id ? 1.0 : 0.0);
    score += w.cognitive * (a.cognitive_action == b.cognitive_action ? 1.0 : 0.0);
    return score;
}

int adapt(const Case& retrieved, const Situation& /*current*/) {
    return retrieved.action;
}

CaseBase::CaseBase(double reuse_threshold, double success_threshold,
                   CaseSimilarityWeights weights)
    : reuse_threshold_(reuse_threshold), success_threshold_(success_threshold),
      weights_(weights) {
    require(reuse_threshold >= 0.0 && reuse_threshold <= 1.0,
            "case base: reuse threshold must be in [0, 1]");
    require(success_threshold >= 0.0 && success_threshold <= 1.0,
            "case base: success threshold must be in [0, 1]");
    weights_.validate();
}

std::optional<std::pair<Case, double>> CaseBase::retrieve(const Situation& s) const {
    const Case* best = nullptr;
    double best_sim = -1.0;
    // Map order makes the scan deterministic; the explicit tie chain below
    // makes the winner independent of insertion history.
    for (const auto& [key, c] : cases_) {
        if (c.success_rate() < success_threshold_) continue;
        const double sim = case_similarity(s, c.situation, weights_);
        if (best == nullptr || sim > best_sim ||
            (sim == best_sim && (c.last_trial > best->last_trial ||
                                 (c.last_trial == best->last_trial && c.action < best->action)))) {
            best = &c;
            best_sim = sim;
        }
    }
    if (best == nullptr || best_sim < reuse_threshold_) return std::nullopt;
    return std::make_pair(*best, best_sim);
}

void CaseBase::retain(const Situation& s, int action, double reward, std::int64_t trial) {
    require(reward == 0.0 || reward == 1.0, "retain: reward must be 0 or 1");
    const std::string key = encode(s, /*include_cognitive=*/true);
    auto it = cases_.find({key, action});
    if (it == cases_.end()) {
        Case c;
        c.situation = s;
        c.action = action;
        it = cases_.emplace(std::make_pair(key, action), c).first;
    }
    Case& c = it->second;
    c.attempts += 1;
    if (reward == 1.0) c.successes += 1;
    c.last_trial = trial;
}

void CaseBase::insert(const Case& c) {
    require(c.attempts >= 1 && c.successes >= 0 && c.successes <= c.attempts,
            "case base: inconsistent counters");
    const std::string key = encode(c.situation, /*include_cognitive=*/true);
    cases_[{key, c.action}] = c;
}

}  // namespace hyrec
