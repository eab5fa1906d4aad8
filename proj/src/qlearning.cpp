#include "hyrec/qlearning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hyrec {

void LearningParams::validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("learning params: alpha must be in (0, 1]");
    if (!(gamma >= 0.0 && gamma < 1.0))
        throw std::invalid_argument("learning params: gamma must be in [0, 1)");
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("learning params: epsilon must be in [0, 1]");
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("learning params: p must be in [0, 1]");
}

QTable::QTable(std::vector<int> action_space, double default_value)
    : actions_(std::move(action_space)), default_(default_value) {
    std::sort(actions_.begin(), actions_.end());
    actions_.erase(std::unique(actions_.begin(), actions_.end()), actions_.end());
}

double QTable::get(const std::string& state, int action) const {
    auto it = cells_.find({state, action});
    return it == cells_.end() ? default_ : it->second;
}

void QTable::set(const std::string& state, int action, double value) {
    if (!std::binary_search(actions_.begin(), actions_.end(), action))
        throw std::invalid_argument("qtable: action not in action space");
    if (!std::isfinite(value)) throw std::invalid_argument("qtable: non-finite value");
    cells_[{state, action}] = value;
}

std::pair<int, double> QTable::max_q(const std::string& state) const {
    if (actions_.empty()) throw std::invalid_argument("max_q: empty action space");
    int best = actions_.front();
    double best_value = get(state, best);
    for (std::size_t i = 1; i < actions_.size(); ++i) {
        const double v = get(state, actions_[i]);
        if (v > best_value) {  // strict: ties keep the lowest action id
            best = actions_[i];
            best_value = v;
        }
    }
    return {best, best_value};
}

double update(QTable& table, const std::string& state, int action, double reward,
              const std::string& next_state, const LearningParams& params) {
    // Only alpha and gamma feed the rule; alpha = 0 is the valid degenerate
    // zero-step case, so the stricter config-level lower bound does not apply.
    if (!(params.alpha >= 0.0 && params.alpha <= 1.0))
        throw std::invalid_argument("update: alpha must be in [0,1]");
    if (!(params.gamma >= 0.0 && params.gamma < 1.0))
        throw std::invalid_argument("update: gamma must be in [0,1)");
    if (!std::isfinite(reward)) throw std::invalid_argument("update: non-finite reward");
    const double q = table.get(state, action);
    const double target = reward + params.gamma * table.max_q(next_state).second;
    const double updated = q + params.alpha * (target - q);
    table.set(state, action, updated);
    return updated;
}

int greedy_policy(const QTable& table, const std::string& state) {
    return table.max_q(state).first;
}

int epsilon_greedy_policy(const QTable& table, const std::string& state, double epsilon,
                          rng::Engine& eng) {
    if (table.action_space().empty())
        throw std::invalid_argument("epsilon_greedy_policy: empty action space");
    if (rng::uniform01(eng) < epsilon) {
        const auto& actions = table.action_space();
        return actions[rng::uniform_index(eng, actions.size())];
    }
    return greedy_policy(table, state);
}

}  // namespace hyrec
