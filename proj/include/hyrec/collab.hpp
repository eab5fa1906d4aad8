#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hyrec {

/// One recorded visit. Ratings are implicit: a visit rates the item 1;
/// items never visited stay vacant (they are not rated 0). `state_id` is
/// the encoded situation active at the time, possibly empty. `trial` tags
/// when the visit happened; bootstrap history uses -1.
struct Transaction {
    std::int64_t id = 0;
    std::string user;
    int item = 0;
    double rating = 1.0;  // [0, 1]
    std::string state_id;
    std::int64_t trial = 0;
};

/// Restricts which transactions a view materializes.
struct ViewOptions {
    /// Keep only transactions with trial < before_trial.
    std::optional<std::int64_t> before_trial;
    /// Prefer transactions whose state_id matches; when none match after the
    /// trial cut, fall back to all of them (context conditioning degrades
    /// gracefully instead of starving the model).
    std::optional<std::string> state_id;
};

/// Sparse user-item ratings with group membership and a transaction log.
/// Vacant cells are distinct from zero ratings. User order is insertion
/// order and determines nothing semantic; every operator that could depend
/// on it sorts by user id instead.
class RatingMatrix {
  public:
    RatingMatrix() = default;
    explicit RatingMatrix(int n_items);

    /// Registers a user in a group. Re-adding with the same group is a
    /// no-op; a different group throws std::invalid_argument.
    void add_user(const std::string& user, const std::string& group);
    bool has_user(const std::string& user) const;
    const std::string& group_of(const std::string& user) const;
    std::vector<std::string> group_members(const std::string& group) const;

    /// Records a visit and appends a transaction with the next id.
    /// The user must exist; item must be in [0, n_items); rating in [0, 1].
    /// A repeat visit keeps the cell's maximum rating.
    void rate(const std::string& user, int item, double rating, const std::string& state_id,
              std::int64_t trial);

    /// Replays a transaction verbatim (checkpoint restore and bootstrap).
    /// Same validation as rate(), plus the user of the transaction must
    /// already exist.
    void add_transaction(const Transaction& t);

    std::optional<double> entry(const std::string& user, int item) const;
    const std::vector<std::string>& users() const { return users_; }
    int n_items() const { return n_items_; }
    const std::vector<Transaction>& transactions() const { return log_; }

    /// Matrix rebuilt from this group's transactions under `opts`. All group
    /// members keep a row (possibly vacant). Members are added in this
    /// matrix's user order.
    RatingMatrix view(const std::string& group, const ViewOptions& opts = {}) const;

  private:
    int n_items_ = 0;
    std::vector<std::string> users_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::map<int, double>> rows_;
    std::map<std::string, std::string> group_of_;
    std::vector<Transaction> log_;
    std::int64_t next_id_ = 1;
};

/// Dense matrix after vacancy filling. `observed` marks cells copied from
/// real ratings; the rest were predicted (or defaulted to 0).
struct FilledMatrix {
    std::vector<std::string> users;
    std::map<std::string, std::size_t> index;
    int n_items = 0;
    std::vector<std::vector<double>> values;
    std::vector<std::vector<std::uint8_t>> observed;

    bool has_user(const std::string& user) const { return index.count(user) != 0; }
    double at(const std::string& user, int item) const;
};

/// Item-item neighborhoods: for each item, up to k neighbors with positive
/// cosine similarity, sorted by similarity descending (ties: lower item id).
struct ItemModel {
    int k = 0;
    std::vector<std::vector<std::pair<int, double>>> lists;

    int n_items() const { return static_cast<int>(lists.size()); }
    const std::vector<std::pair<int, double>>& neighbors(int item) const;
};

/// Cosine similarity between two users over co-rated items only. No
/// co-rated items (or a zero vector over them) gives 0. Users must exist.
double user_similarity(const RatingMatrix& m, const std::string& u, const std::string& v);

/// Memory-based stage: predicts each vacant cell as the similarity-weighted
/// mean of its top-k most similar raters (positive similarity only, ties by
/// user id). Cells nobody rated default to 0. Observed cells are copied
/// exactly. k >= 1.
FilledMatrix fill_vacant(const RatingMatrix& m, int k_users);

/// Model-based stage: item-item cosine over the filled matrix's user
/// columns, keeping the top-k positive neighbors per item. k >= 1.
ItemModel build_item_model(const FilledMatrix& filled, int k_items);

/// Neighborhood prediction: similarity-weighted mean of the user's filled
/// ratings over the item's neighbors; 0 when the item has none.
double predict(const ItemModel& model, const FilledMatrix& filled, const std::string& user,
               int item);

/// All items ranked by predicted rating descending (ties: lower item id),
/// truncated to n.
std::vector<std::pair<int, double>> top_n(const ItemModel& model, const FilledMatrix& filled,
                                          const std::string& user, int n);

/// The action a user's social group suggests: among `available` actions,
/// restrict to those some group member has a positive filled rating for,
/// then pick the highest predicted rating (ties: lowest action id). With no
/// group support at all, falls back to the lowest-id available action.
/// `filled`/`model` are expected to be built from a view of `m` that
/// contains the group's rows.
int social_group_action(const ItemModel& model, const FilledMatrix& filled,
                        const RatingMatrix& m, const std::string& user,
                        const std::vector<int>& available);

}  // namespace hyrec
