#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "hyrec/rand.hpp"

namespace hyrec {

/// Learning hyperparameters. `epsilon` drives the plain epsilon-greedy
/// baseline; `p` is the exploitation probability of the hybrid policy.
struct LearningParams {
    double alpha = 0.1;    // learning rate, (0, 1]
    double gamma = 0.9;    // discount factor, [0, 1)
    double epsilon = 0.1;  // exploration probability, [0, 1]
    double p = 0.9;        // exploitation probability, [0, 1]

    /// Throws std::invalid_argument when any value is out of range.
    void validate() const;
};

/// Sparse action-value table over string-encoded states and integer action
/// ids. Unseen cells read as `default_value`. The action space is fixed at
/// construction and kept sorted ascending.
class QTable {
  public:
    QTable() = default;
    QTable(std::vector<int> action_space, double default_value = 0.0);

    double get(const std::string& state, int action) const;

    /// Throws std::invalid_argument for an action outside the space or a
    /// non-finite value.
    void set(const std::string& state, int action, double value);

    /// Greedy action and its value; ties resolve to the lowest action id.
    /// Throws std::invalid_argument if the action space is empty.
    std::pair<int, double> max_q(const std::string& state) const;

    const std::vector<int>& action_space() const { return actions_; }
    double default_value() const { return default_; }

    /// Materialized cells in deterministic (state, action) order.
    const std::map<std::pair<std::string, int>, double>& cells() const { return cells_; }

  private:
    std::vector<int> actions_;
    double default_ = 0.0;
    std::map<std::pair<std::string, int>, double> cells_;
};

/// One temporal-difference update:
///   Q(s,a) <- Q(s,a) + alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)).
/// Touches exactly the (state, action) cell and returns its new value.
/// Accepts alpha in [0,1] (alpha = 0 leaves the cell unchanged) and gamma in
/// [0,1); throws std::invalid_argument otherwise or on non-finite reward.
double update(QTable& table, const std::string& state, int action, double reward,
              const std::string& next_state, const LearningParams& params);

/// Argmax action for the state (lowest id on ties).
int greedy_policy(const QTable& table, const std::string& state);

/// With probability epsilon a uniformly random action, otherwise greedy.
/// Consumes exactly one uniform01 draw, plus one index draw when exploring.
int epsilon_greedy_policy(const QTable& table, const std::string& state, double epsilon,
                          rng::Engine& eng);

}  // namespace hyrec
