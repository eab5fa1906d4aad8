#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hyrec/casebase.hpp"
#include "hyrec/collab.hpp"
#include "hyrec/context.hpp"
#include "hyrec/qlearning.hpp"
#include "hyrec/rand.hpp"

namespace hyrec {

/// Which learner drives action selection.
enum class Variant { PlainQLearning, Hyql };

/// Where a chosen action came from. Plain agents only ever produce
/// exploit-greedy or explore-random; hybrid agents only cbr-reuse,
/// exploit-greedy or explore-cf.
enum class ActionSource { CbrReuse, ExploitGreedy, ExploreCf, ExploreRandom };

std::string_view to_string(Variant v);
std::string_view to_string(ActionSource s);
Variant variant_from_string(std::string_view s);
ActionSource action_source_from_string(std::string_view s);

/// Everything observable about one completed trial.
struct StepOutcome {
    Situation situation;
    int action = 0;
    ActionSource source = ActionSource::ExploitGreedy;
    double reward = 0.0;
    double q_before = 0.0;
    double q_after = 0.0;
};

struct AgentOptions {
    Variant variant = Variant::Hyql;
    LearningParams params{};
    int n_actions = 100;  // actions are resource ids 0 .. n_actions-1
    std::string user_id;
    std::string group_id;
    double reuse_threshold = 0.75;
    double success_threshold = 0.5;
    int k_users = 5;
    int k_items = 10;
    int rebuild_every = 10;  // trials per collaborative model epoch
    bool include_cognitive_in_state = false;
    std::uint64_t seed = 1;

    void validate() const;  // throws std::invalid_argument
};

/// A single learner: a Q-table shared by both variants, plus (for the
/// hybrid variant) a case base that can short-circuit selection and a
/// group rating matrix that guides exploration.
///
/// The collaborative model is rebuilt once per epoch of `rebuild_every`
/// trials, from transactions recorded before that epoch's start. That makes
/// the cached model a pure function of (matrix, trial), which is what lets
/// a restored checkpoint continue bit-for-bit identically.
class Agent {
  public:
    explicit Agent(AgentOptions opts);

    /// Policy only; no state changes except consuming randomness.
    /// Hybrid order: case reuse first, then exploit/explore by one draw
    /// against p. Plain: epsilon-greedy.
    std::pair<int, ActionSource> select_action(const Situation& s);

    /// Applies one observed outcome: the temporal-difference update always;
    /// for the hybrid variant also case retention and, on success, a rating.
    /// Advances the trial counter. reward must be exactly 0 or 1.
    StepOutcome observe(const Situation& s, int action, ActionSource source, double reward,
                        const Situation& next);

    /// select_action + observe with a pre-determined reward.
    StepOutcome step(const Situation& s, double feedback_reward, const Situation& next);

    /// select_action + observe where the reward depends on the chosen
    /// action (the simulator's shape).
    template <typename FeedbackFn>
    StepOutcome step_with(const Situation& s, FeedbackFn&& feedback, const Situation& next) {
        auto [action, source] = select_action(s);
        return observe(s, action, source, feedback(action), next);
    }

    /// Seeds the rating matrix with teammates' transactions before any
    /// trial runs. Q-values and case base stay untouched. Transactions must
    /// be well-formed (known-range item, rating in [0, 1], nonempty user);
    /// throws std::invalid_argument otherwise, applying nothing.
    void bootstrap_from_group(const std::vector<Transaction>& transactions);

    const AgentOptions& options() const { return opts_; }
    Variant variant() const { return opts_.variant; }
    std::string state_of(const Situation& s) const;

    const QTable& qtable() const { return qtable_; }
    QTable& qtable() { return qtable_; }
    const CaseBase& casebase() const { return casebase_; }
    CaseBase& casebase() { return casebase_; }
    const RatingMatrix& matrix() const { return matrix_; }
    RatingMatrix& matrix() { return matrix_; }
    rng::Engine& rng() { return rng_; }
    const rng::Engine& rng() const { return rng_; }
    std::int64_t trial() const { return trial_; }
    void set_trial(std::int64_t t) { trial_ = t; }  // checkpoint restore

    /// Drops the cached collaborative model; it is rebuilt on demand from
    /// the matrix and trial counter (used after checkpoint restore).
    void invalidate_group_model() { cf_built_ = false; }

  private:
    std::pair<int, ActionSource> explore_with_group(const Situation& s);
    void ensure_group_model();

    AgentOptions opts_;
    std::vector<int> all_actions_;
    QTable qtable_;
    CaseBase casebase_;
    RatingMatrix matrix_;
    rng::Engine rng_;
    std::int64_t trial_ = 0;

    // Cached per-epoch collaborative model (group-wide, no state filter).
    bool cf_built_ = false;
    std::int64_t cf_epoch_start_ = 0;
    FilledMatrix cf_filled_;
    ItemModel cf_model_;
};

}  // namespace hyrec
