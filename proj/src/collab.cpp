#include "hyrec/collab.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hyrec {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace

// --- RatingMatrix ------------------------------------------------------------

RatingMatrix::RatingMatrix(int n_items) : n_items_(n_items) {
    require(n_items > 0, "rating matrix: n_items must be positive");
}

void RatingMatrix::add_user(const std::string& user, const std::string& group) {
    require(!user.empty(), "rating matrix: empty user id");
    require(!group.empty(), "rating matrix: empty group id");
    auto it = group_of_.find(user);
    if (it != group_of_.end()) {
        require(it->second == group, "rating matrix: user " + user + " already in group " +
                                         it->second);
        return;
    }
    index_.emplace(user, users_.size());
    users_.push_back(user);
    rows_.emplace_back();
    group_of_.emplace(user, group);
}

bool RatingMatrix::has_user(const std::string& user) const {
    return index_.find(user) != index_.end();
}

const std::string& RatingMatrix::group_of(const std::string& user) const {
    auto it = group_of_.find(user);
    require(it != group_of_.end(), "rating matrix: unknown user " + user);
    return it->second;
}

std::vector<std::string> RatingMatrix::group_members(const std::string& group) const {
    std::vector<std::string> out;
    for (const std::string& u : users_)
        if (group_of_.at(u) == group) out.push_back(u);
    return out;
}

void RatingMatrix::add_transaction(const Transaction& t) {
    require(has_user(t.user), "rating matrix: unknown user " + t.user);
    require(t.item >= 0 && t.item < n_items_, "rating matrix: item out of range");
    require(std::isfinite(t.rating) && t.rating >= 0.0 && t.rating <= 1.0,
            "rating matrix: rating must be in [0, 1]");
    log_.push_back(t);
    if (t.id >= next_id_) next_id_ = t.id + 1;
    auto& row = rows_[index_.at(t.user)];
    auto it = row.find(t.item);
    if (it == row.end())
        row.emplace(t.item, t.rating);
    else
        it->second = std::max(it->second, t.rating);
}

void RatingMatrix::rate(const std::string& user, int item, double rating,
                        const std::string& state_id, std::int64_t trial) {
    add_transaction(Transaction{next_id_, user, item, rating, state_id, trial});
}

std::optional<double> RatingMatrix::entry(const std::string& user, int item) const {
    auto it = index_.find(user);
    require(it != index_.end(), "rating matrix: unknown user " + user);
    require(item >= 0 && item < n_items_, "rating matrix: item out of range");
    const auto& row = rows_[it->second];
    auto cell = row.find(item);
    if (cell == row.end()) return std::nullopt;
    return cell->second;
}

RatingMatrix RatingMatrix::view(const std::string& group, const ViewOptions& opts) const {
    RatingMatrix out(n_items_);
    for (const std::string& u : users_)
        if (group_of_.at(u) == group) out.add_user(u, group);

    std::vector<const Transaction*> eligible;
    for (const Transaction& t : log_) {
        if (group_of_.at(t.user) != group) continue;
        if (opts.before_trial && t.trial >= *opts.before_trial) continue;
        eligible.push_back(&t);
    }
    if (opts.state_id) {
        std::vector<const Transaction*> matching;
        for (const Transaction* t : eligible)
            if (t->state_id == *opts.state_id) matching.push_back(t);
        if (!matching.empty()) eligible = std::move(matching);
    }
    for (const Transaction* t : eligible) out.add_transaction(*t);
    return out;
}

// --- FilledMatrix / ItemModel --------------------------------------------------

double FilledMatrix::at(const std::string& user, int item) const {
    auto it = index.find(user);
    if (it == index.end()) throw std::invalid_argument("filled matrix: unknown user " + user);
    if (item < 0 || item >= n_items)
        throw std::invalid_argument("filled matrix: item out of range");
    return values[it->second][static_cast<std::size_t>(item)];
}

const std::vector<std::pair<int, double>>& ItemModel::neighbors(int item) const {
    if (item < 0 || item >= n_items())
        throw std::invalid_argument("item model: item out of range");
    return lists[static_cast<std::size_t>(item)];
}

// --- Similarity and filling ----------------------------------------------------

double user_similarity(const RatingMatrix& m, const std::string& u, const std::string& v) {
    // Walk u's row in ascending item order so the accumulation order is a
    // function of the data alone, not of user insertion order.
    double dot = 0.0, nu = 0.0, nv = 0.0;
    bool any = false;
    for (int item = 0; item < m.n_items(); ++item) {
        auto ru = m.entry(u, item);
        if (!ru) continue;
        auto rv = m.entry(v, item);
        if (!rv) continue;
        any = true;
        dot += *ru * *rv;
        nu += *ru * *ru;
        nv += *rv * *rv;
    }
    if (!any || nu == 0.0 || nv == 0.0) return 0.0;
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

FilledMatrix fill_vacant(const RatingMatrix& m, int k_users) {
    require(k_users >= 1, "fill_vacant: k_users must be >= 1");
    const auto& users = m.users();
    const std::size_t n_users = users.size();
    const int n_items = m.n_items();

    std::vector<std::vector<double>> sim(n_users, std::vector<double>(n_users, 0.0));
    for (std::size_t i = 0; i < n_users; ++i)
        for (std::size_t j = i + 1; j < n_users; ++j)
            sim[i][j] = sim[j][i] = user_similarity(m, users[i], users[j]);

    FilledMatrix out;
    out.users = users;
    for (std::size_t i = 0; i < n_users; ++i) out.index.emplace(users[i], i);
    out.n_items = n_items;
    out.values.assign(n_users, std::vector<double>(static_cast<std::size_t>(n_items), 0.0));
    out.observed.assign(n_users,
                        std::vector<std::uint8_t>(static_cast<std::size_t>(n_items), 0));

    struct Rater {
        double similarity;
        const std::string* id;
        double rating;
    };
    std::vector<Rater> raters;
    for (std::size_t ui = 0; ui < n_users; ++ui) {
        for (int item = 0; item < n_items; ++item) {
            auto own = m.entry(users[ui], item);
            if (own) {
                out.values[ui][static_cast<std::size_t>(item)] = *own;
                out.observed[ui][static_cast<std::size_t>(item)] = 1;
                continue;
            }
            raters.clear();
            for (std::size_t vi = 0; vi < n_users; ++vi) {
                if (vi == ui || sim[ui][vi] <= 0.0) continue;
                auto rv = m.entry(users[vi], item);
                if (rv) raters.push_back({sim[ui][vi], &users[vi], *rv});
            }
            // Sort by similarity descending, user id ascending: stable under
            // any permutation of the matrix's user order.
            std::sort(raters.begin(), raters.end(), [](const Rater& a, const Rater& b) {
                if (a.similarity != b.similarity) return a.similarity > b.similarity;
                return *a.id < *b.id;
            });
            if (raters.size() > static_cast<std::size_t>(k_users))
                raters.resize(static_cast<std::size_t>(k_users));
            double sum_w = 0.0, sum_wr = 0.0;
            for (const Rater& r : raters) {
                sum_w += r.similarity;
                sum_wr += r.similarity * r.rating;
            }
            double value = sum_w > 0.0 ? sum_wr / sum_w : 0.0;
            value = std::clamp(value, 0.0, 1.0);
            out.values[ui][static_cast<std::size_t>(item)] = value;
        }
    }
    return out;
}

ItemModel build_item_model(const FilledMatrix& filled, int k_items) {
    require(k_items >= 1, "build_item_model: k_items must be >= 1");
    const int n = filled.n_items;
    // Accumulate columns in sorted user-id order so similarities (and thus
    // predictions) do not depend on row order.
    std::vector<std::size_t> perm(filled.users.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
        return filled.users[a] < filled.users[b];
    });

    std::vector<double> norm(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t u : perm) {
            const double x = filled.values[u][static_cast<std::size_t>(i)];
            s += x * x;
        }
        norm[static_cast<std::size_t>(i)] = std::sqrt(s);
    }

    ItemModel model;
    model.k = k_items;
    model.lists.resize(static_cast<std::size_t>(n));
    std::vector<std::pair<int, double>> candidates;
    for (int i = 0; i < n; ++i) {
        if (norm[static_cast<std::size_t>(i)] == 0.0) continue;
        candidates.clear();
        for (int j = 0; j < n; ++j) {
            if (j == i || norm[static_cast<std::size_t>(j)] == 0.0) continue;
            double dot = 0.0;
            for (std::size_t u : perm)
                dot += filled.values[u][static_cast<std::size_t>(i)] *
                       filled.values[u][static_cast<std::size_t>(j)];
            const double s =
                dot / (norm[static_cast<std::size_t>(i)] * norm[static_cast<std::size_t>(j)]);
            if (s > 0.0) candidates.emplace_back(j, s);
        }
        std::sort(candidates.begin(), candidates.end(),
                  [](const std::pair<int, double>& a, const std::pair<int, double>& b) {
                      if (a.second != b.second) return a.second > b.second;
                      return a.first < b.first;
                  });
        if (candidates.size() > static_cast<std::size_t>(k_items))
            candidates.resize(static_cast<std::size_t>(k_items));
        model.lists[static_cast<std::size_t>(i)] = candidates;
    }
    return model;
}

double predict(const ItemModel& model, const FilledMatrix& filled, const std::string& user,
               int item) {
    auto it = filled.index.find(user);
    require(it != filled.index.end(), "predict: unknown user " + user);
    require(item >= 0 && item < filled.n_items, "predict: item out of range");
    require(model.n_items() == filled.n_items, "predict: model/matrix size mismatch");
    double sum_w = 0.0, sum_wr = 0.0;
    for (const auto& [j, s] : model.neighbors(item)) {
        sum_w += s;
        sum_wr += s * filled.values[it->second][static_cast<std::size_t>(j)];
    }
    return sum_w > 0.0 ? sum_wr / sum_w : 0.0;
}

std::vector<std::pair<int, double>> top_n(const ItemModel& model, const FilledMatrix& filled,
                                          const std::string& user, int n) {
    require(n >= 0, "top_n: n must be >= 0");
    std::vector<std::pair<int, double>> ranked;
    ranked.reserve(static_cast<std::size_t>(filled.n_items));
    for (int item = 0; item < filled.n_items; ++item)
        ranked.emplace_back(item, predict(model, filled, user, item));
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const std::pair<int, double>& a, const std::pair<int, double>& b) {
                         return a.second > b.second;  // stable: ties keep id order
                     });
    if (ranked.size() > static_cast<std::size_t>(n)) ranked.resize(static_cast<std::size_t>(n));
    return ranked;
}

int social_group_action(const ItemModel& model, const FilledMatrix& filled,
                        const RatingMatrix& m, const std::string& user,
                        const std::vector<int>& available) {
    require(!available.empty(), "social_group_action: no available actions");
    require(m.has_user(user), "social_group_action: unknown user " + user);
    std::vector<int> sorted = available;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (int a : sorted)
        require(a >= 0 && a < m.n_items(), "social_group_action: action out of range");

    const std::vector<std::string> members = m.group_members(m.group_of(user));

    // An action has group support when some member's filled rating for it is
    // positive. The candidate restriction is what carries the group signal:
    // with implicit 0/1 ratings, prediction values alone cannot separate
    // never-visited items for a user with an empty history.
    std::vector<int> candidates;
    for (int a : sorted) {
        bool support = false;
        for (const std::string& mem : members) {
            if (!filled.has_user(mem)) continue;
            if (filled.at(mem, a) > 0.0) {
                support = true;
                break;
            }
        }
        if (support) candidates.push_back(a);
    }
    if (candidates.empty()) return sorted.front();

    const bool can_predict = filled.has_user(user);
    int best = candidates.front();
    double best_score = can_predict ? predict(model, filled, user, best) : 0.0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double s = can_predict ? predict(model, filled, user, candidates[i]) : 0.0;
        if (s > best_score) {  // strict: ties keep the lowest action id
            best = candidates[i];
            best_score = s;
        }
    }
    return best;
}

}  // namespace hyrec
