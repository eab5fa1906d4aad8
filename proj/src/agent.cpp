#include "hyrec/agent.hpp"

#include <cmath>
#include <stdexcept>

namespace hyrec {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::PlainQLearning: return "plain-qlearning";
        case Variant::Hyql: return "hyql";
    }
    throw std::invalid_argument("unknown variant");
}

std::string_view to_string(ActionSource s) {
    switch (s) {
        case ActionSource::CbrReuse: return "cbr-reuse";
        case ActionSource::ExploitGreedy: return "exploit-greedy";
        case ActionSource::ExploreCf: return "explore-cf";
        case ActionSource::ExploreRandom: return "explore-random";
    }
    throw std::invalid_argument("unknown action source");
}

Variant variant_from_string(std::string_view s) {
    if (s == "plain-qlearning") return Variant::PlainQLearning;
    if (s == "hyql") return Variant::Hyql;
    throw std::invalid_argument("unknown variant: " + std::string(s));
}

ActionSource action_source_from_string(std::string_view s) {
    if (s == "cbr-reuse") return ActionSource::CbrReuse;
    if (s == "exploit-greedy") return ActionSource::ExploitGreedy;
    if (s == "explore-cf") return ActionSource::ExploreCf;
    if (s == "explore-random") return ActionSource::ExploreRandom;
    throw std::invalid_argument("unknown action source: " + std::string(s));
}

void AgentOptions::validate() const {
    params.validate();
    require(n_actions >= 1, "agent options: n_actions must be >= 1");
    require(!user_id.empty(), "agent options: empty user id");
    require(!group_id.empty(), "agent options: empty group id");
    require(reuse_threshold >= 0.0 && reuse_threshold <= 1.0,
            "agent options: reuse threshold must be in [0, 1]");
    require(success_threshold >= 0.0 && success_threshold <= 1.0,
            "agent options: success threshold must be in [0, 1]");
    require(k_users >= 1, "agent options: k_users must be >= 1");
    require(k_items >= 1, "agent options: k_items must be >= 1");
    require(rebuild_every >= 1, "agent options: rebuild_every must be >= 1");
}

Agent::Agent(AgentOptions opts)
    : opts_(std::move(opts)),
      casebase_(0.75, 0.5),
      matrix_(std::max(opts_.n_actions, 1)) {
    opts_.validate();
    all_actions_.resize(static_cast<std::size_t>(opts_.n_actions));
    for (int i = 0; i < opts_.n_actions; ++i) all_actions_[static_cast<std::size_t>(i)] = i;
    qtable_ = QTable(all_actions_, 0.0);
    casebase_ = CaseBase(opts_.reuse_threshold, opts_.success_threshold);
    matrix_.add_user(opts_.user_id, opts_.group_id);
    rng_.seed(opts_.seed);
}

std::string Agent::state_of(const Situation& s) const {
    return encode(s, opts_.include_cognitive_in_state);
}

void Agent::ensure_group_model() {
    const std::int64_t epoch_start = (trial_ / opts_.rebuild_every) * opts_.rebuild_every;
    if (cf_built_ && cf_epoch_start_ == epoch_start) return;
    // Only transactions recorded before the epoch's first trial feed the
    // model; bootstrap history is tagged trial -1 and always included.
    ViewOptions opts;
    opts.before_trial = epoch_start;
    RatingMatrix view = matrix_.view(opts_.group_id, opts);
    cf_filled_ = fill_vacant(view, opts_.k_users);
    cf_model_ = build_item_model(cf_filled_, opts_.k_items);
    cf_built_ = true;
    cf_epoch_start_ = epoch_start;
}

std::pair<int, ActionSource> Agent::explore_with_group(const Situation& s) {
    const std::string state = state_of(s);
    // Prefer a model conditioned on the current situation; the view falls
    // back to the whole group history when no transaction matches it.
    bool any_state_match = false;
    for (const Transaction& t : matrix_.transactions()) {
        if (t.state_id == state && matrix_.group_of(t.user) == opts_.group_id) {
            any_state_match = true;
            break;
        }
    }
    if (any_state_match) {
        ViewOptions vopts;
        vopts.state_id = state;
        RatingMatrix view = matrix_.view(opts_.group_id, vopts);
        FilledMatrix filled = fill_vacant(view, opts_.k_users);
        ItemModel model = build_item_model(filled, opts_.k_items);
        return {social_group_action(model, filled, matrix_, opts_.user_id, all_actions_),
                ActionSource::ExploreCf};
    }
    ensure_group_model();
    return {social_group_action(cf_model_, cf_filled_, matrix_, opts_.user_id, all_actions_),
            ActionSource::ExploreCf};
}

std::pair<int, ActionSource> Agent::select_action(const Situation& s) {
    const std::string state = state_of(s);
    if (opts_.variant == Variant::PlainQLearning) {
        if (rng::uniform01(rng_) < opts_.params.epsilon)
            return {all_actions_[rng::uniform_index(rng_, all_actions_.size())],
                    ActionSource::ExploreRandom};
        return {greedy_policy(qtable_, state), ActionSource::ExploitGreedy};
    }
    if (auto hit = casebase_.retrieve(s))
        return {adapt(hit->first, s), ActionSource::CbrReuse};
    if (rng::uniform01(rng_) <= opts_.params.p)
        return {greedy_policy(qtable_, state), ActionSource::ExploitGreedy};
    return explore_with_group(s);
}

StepOutcome Agent::observe(const Situation& s, int action, ActionSource source, double reward,
                           const Situation& next) {
    require(reward == 0.0 || reward == 1.0, "observe: reward must be 0 or 1");
    require(action >= 0 && action < opts_.n_actions, "observe: action out of range");
    const std::string state = state_of(s);
    const std::string next_state = state_of(next);
    StepOutcome out;
    out.situation = s;
    out.action = action;
    out.source = source;
    out.reward = reward;
    out.q_before = qtable_.get(state, action);
    out.q_after = update(qtable_, state, action, reward, next_state, opts_.params);
    if (opts_.variant == Variant::Hyql) {
        casebase_.retain(s, action, reward, trial_);
        // Implicit ratings: only accepted recommendations become visits;
        // rejections leave the cell vacant rather than rating it 0.
        if (reward == 1.0)
            matrix_.rate(opts_.user_id, action, 1.0, state, trial_);
    }
    trial_ += 1;
    return out;
}

StepOutcome Agent::step(const Situation& s, double feedback_reward, const Situation& next) {
    auto [action, source] = select_action(s);
    return observe(s, action, source, feedback_reward, next);
}

void Agent::bootstrap_from_group(const std::vector<Transaction>& transactions) {
    for (const Transaction& t : transactions) {
        require(!t.user.empty(), "bootstrap: empty user id");
        require(t.item >= 0 && t.item < opts_.n_actions, "bootstrap: item out of range");
        require(std::isfinite(t.rating) && t.rating >= 0.0 && t.rating <= 1.0,
                "bootstrap: rating must be in [0, 1]");
    }
    for (const Transaction& t : transactions) {
        matrix_.add_user(t.user, opts_.group_id);
        matrix_.add_transaction(t);
    }
    cf_built_ = false;  // next selection sees the seeded history
}

}  // namespace hyrec
