#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>

#include "hyrec/context.hpp"

namespace hyrec {

/// One remembered (situation, action) pairing with its outcome counters.
struct Case {
    Situation situation;
    int action = 0;
    std::int64_t successes = 0;
    std::int64_t attempts = 0;
    std::int64_t last_trial = 0;

    double success_rate() const {
        return attempts > 0 ? static_cast<double>(successes) / static_cast<double>(attempts)
                            : 0.0;
    }
};

/// Per-dimension weights of the situation similarity. Must be non-negative
/// and sum to 1.
struct CaseSimilarityWeights {
    double time = 0.25;
    double location = 0.25;
    double social = 0.25;
    double cognitive = 0.25;

    void validate() const;
};

/// Weighted mean of four dimension scores:
///   time:      equal concept 1, else same day type 0.5, else 0
///   location:  equal concept 1, same city 0.5, same region 0.25, else 0
///   social:    equal group 1, else 0
///   cognitive: equal action 1, else 0
/// Symmetric, bounded to [0, 1], and 1 for identical situations.
double case_similarity(const Situation& a, const Situation& b,
                       const CaseSimilarityWeights& w = {});

/// Identity adaptation: reuse the retrieved case's action unchanged.
int adapt(const Case& retrieved, const Situation& current);

/// Case store keyed by (full situation encoding, action); the key includes
/// the cognitive dimension even when the Q-state encoding omits it, so
/// distinct remembered situations never collapse.
class CaseBase {
  public:
    CaseBase() = default;
    /// Thresholds in [0, 1]; throws std::invalid_argument otherwise.
    CaseBase(double reuse_threshold, double success_threshold,
             CaseSimilarityWeights weights = {});

    /// Best reusable case for the situation: among cases with
    /// success_rate >= success_threshold, the one maximizing
    /// case_similarity, provided that maximum >= reuse_threshold.
    /// Ties: higher similarity, then most recent last_trial, then lowest
    /// action id, then key order. Returns the case and its similarity.
    std::optional<std::pair<Case, double>> retrieve(const Situation& s) const;

    /// Records one outcome for the (situation, action) pair, creating the
    /// case on first sight. reward must be exactly 0 or 1.
    void retain(const Situation& s, int action, double reward, std::int64_t trial);

    /// Inserts a case verbatim (checkpoint restore). Replaces an existing
    /// case with the same key.
    void insert(const Case& c);

    std::size_t size() const { return cases_.size(); }
    const std::map<std::pair<std::string, int>, Case>& cases() const { return cases_; }
    double reuse_threshold() const { return reuse_threshold_; }
    double success_threshold() const { return success_threshold_; }
    const CaseSimilarityWeights& weights() const { return weights_; }

  private:
    double reuse_threshold_ = 0.75;
    double success_threshold_ = 0.5;
    CaseSimilarityWeights weights_{};
    std::map<std::pair<std::string, int>, Case> cases_;
};

}  // namespace hyrec
