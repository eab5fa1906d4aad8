#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyrec/collab.hpp"
#include "oracles.hpp"

using hyrec::RatingMatrix;

namespace {

/// Compares the library pipeline against the dense brute-force one on a
/// fixture, demanding bit-exact equality (both sides fix the same
/// accumulation orders).
void check_against_oracle(const oracle::DenseMatrix& dense, int k_users, int k_items) {
    const RatingMatrix m = oracle::to_rating_matrix(dense);
    const auto want_fill = oracle::fill(dense, k_users);
    const auto filled = hyrec::fill_vacant(m, k_users);

    REQUIRE(filled.users.size() == dense.users.size());
    const int n_items = filled.n_items;
    for (std::size_t u = 0; u < dense.users.size(); ++u) {
        const std::size_t row = filled.index.at(dense.users[u]);
        for (int i = 0; i < n_items; ++i) {
            INFO("user ", dense.users[u], " item ", i);
            CHECK(filled.values[row][static_cast<std::size_t>(i)] == want_fill.values[u][static_cast<std::size_t>(i)]);
            CHECK((filled.observed[row][static_cast<std::size_t>(i)] != 0) ==
                  want_fill.observed[u][static_cast<std::size_t>(i)]);
        }
    }

    const auto want_model = oracle::item_model(dense, want_fill, k_items);
    const auto model = hyrec::build_item_model(filled, k_items);
    REQUIRE(model.n_items() == static_cast<int>(want_model.size()));
    for (int i = 0; i < n_items; ++i) {
        const auto& got = model.neighbors(i);
        const auto& want = want_model[static_cast<std::size_t>(i)];
        INFO("item ", i);
        REQUIRE(got.size() == want.size());
        for (std::size_t j = 0; j < want.size(); ++j) {
            CHECK(got[j].first == want[j].first);
            CHECK(got[j].second == want[j].second);
        }
    }

    for (std::size_t u = 0; u < dense.users.size(); ++u)
        for (int i = 0; i < n_items; ++i) {
            INFO("predict user ", dense.users[u], " item ", i);
            CHECK(hyrec::predict(model, filled, dense.users[u], i) ==
                  oracle::predict(want_model, want_fill, u, i));
        }

    const std::vector<std::vector<int>> menus = {
        {0, 1, 2},
        {2, 1, 0, 1},  // duplicates and order must not matter
        {1},
        {0, 2},
    };
    for (const auto& user : dense.users)
        for (const auto& menu : menus) {
            INFO("group action for ", user);
            CHECK(hyrec::social_group_action(model, filled, m, user, menu) ==
                  oracle::group_action(dense, want_model, want_fill, user, menu));
        }
}

}  // namespace

TEST_CASE("matrix bookkeeping: users, groups, cells, transactions") {
    RatingMatrix m(5);
    m.add_user("a", "g1");
    m.add_user("b", "g2");
    m.add_user("a", "g1");  // idempotent
    CHECK_THROWS_AS(m.add_user("a", "g2"), std::invalid_argument);
    CHECK(m.has_user("a"));
    CHECK_FALSE(m.has_user("zz"));
    CHECK(m.group_of("b") == "g2");
    CHECK(m.group_members("g1") == std::vector<std::string>{"a"});

    CHECK(m.entry("a", 0) == std::nullopt);  // vacant, not zero
    m.rate("a", 0, 1.0, "ctx", 3);
    CHECK(m.entry("a", 0) == 1.0);
    m.rate("a", 0, 0.5, "ctx", 4);  // repeat visit keeps the max
    CHECK(m.entry("a", 0) == 1.0);
    CHECK(m.transactions().size() == 2);  // but both visits are logged
    CHECK(m.transactions()[0].id == 1);
    CHECK(m.transactions()[1].id == 2);
    CHECK(m.transactions()[1].rating == 0.5);
    CHECK(m.transactions()[0].state_id == "ctx");
    CHECK(m.transactions()[0].trial == 3);

    CHECK_THROWS_AS(m.rate("zz", 0, 1.0, "", 0), std::invalid_argument);
    CHECK_THROWS_AS(m.rate("a", 5, 1.0, "", 0), std::invalid_argument);
    CHECK_THROWS_AS(m.rate("a", -1, 1.0, "", 0), std::invalid_argument);
    CHECK_THROWS_AS(m.rate("a", 0, 1.5, "", 0), std::invalid_argument);
}

TEST_CASE("user similarity on hand-checkable vectors") {
    RatingMatrix m(3);
    m.add_user("u", "g");
    m.add_user("v", "g");
    m.add_user("w", "g");
    // u = (1, 1, _), v = (1, _, 1): one co-rated item with equal value.
    m.rate("u", 0, 1.0, "", 0);
    m.rate("u", 1, 1.0, "", 0);
    m.rate("v", 0, 1.0, "", 0);
    m.rate("v", 2, 1.0, "", 0);
    CHECK(hyrec::user_similarity(m, "u", "v") == 1.0);
    CHECK(hyrec::user_similarity(m, "v", "u") == 1.0);

    // w rates only item 2; u and w share nothing.
    m.rate("w", 2, 1.0, "", 0);
    CHECK(hyrec::user_similarity(m, "u", "w") == 0.0);

    // Self-similarity: dot/(sqrt(n)*sqrt(n)) is 1 only up to rounding.
    CHECK(hyrec::user_similarity(m, "u", "u") == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(hyrec::user_similarity(m, "u", "zz"), std::invalid_argument);
}

TEST_CASE("similarity is symmetric and bounded on a random fixture") {
    const auto dense = oracle::toy10x20();
    const RatingMatrix m = oracle::to_rating_matrix(dense);
    for (const auto& u : m.users())
        for (const auto& v : m.users()) {
            const double s = hyrec::user_similarity(m, u, v);
            CHECK(s == hyrec::user_similarity(m, v, u));
            CHECK(s >= 0.0);
            CHECK(s <= 1.0 + 1e-12);
        }
}

TEST_CASE("duplicate users have similarity exactly 1") {
    const auto dense = oracle::toy10x20();  // u08 duplicates u07 by construction
    const RatingMatrix m = oracle::to_rating_matrix(dense);
    CHECK(hyrec::user_similarity(m, "u07", "u08") == 1.0);
}

TEST_CASE("fill copies observed cells exactly and only predicts vacancies") {
    const auto dense = oracle::toy10x20();
    const RatingMatrix m = oracle::to_rating_matrix(dense);
    const auto filled = hyrec::fill_vacant(m, 3);
    for (std::size_t u = 0; u < dense.users.size(); ++u) {
        const std::size_t row = filled.index.at(dense.users[u]);
        for (std::size_t i = 0; i < 20; ++i) {
            if (dense.cells[u][i]) {
                CHECK(filled.observed[row][i] != 0);
                CHECK(filled.values[row][i] == *dense.cells[u][i]);
            } else {
                CHECK(filled.observed[row][i] == 0);
            }
            CHECK(filled.values[row][i] >= 0.0);
            CHECK(filled.values[row][i] <= 1.0);
        }
    }
}

TEST_CASE("fill with no vacancies is the identity") {
    RatingMatrix m(2);
    m.add_user("a", "g");
    m.add_user("b", "g");
    for (int i = 0; i < 2; ++i) {
        m.rate("a", i, 1.0, "", 0);
        m.rate("b", i, 0.5, "", 0);
    }
    const auto filled = hyrec::fill_vacant(m, 5);
    CHECK(filled.at("a", 0) == 1.0);
    CHECK(filled.at("b", 1) == 0.5);
    for (const auto& row : filled.observed)
        for (auto o : row) CHECK(o != 0);
}

TEST_CASE("a lone user gets zeros in vacant cells") {
    RatingMatrix m(3);
    m.add_user("solo", "g");
    m.rate("solo", 1, 1.0, "", 0);
    const auto filled = hyrec::fill_vacant(m, 5);
    CHECK(filled.at("solo", 0) == 0.0);
    CHECK(filled.at("solo", 1) == 1.0);
    CHECK(filled.at("solo", 2) == 0.0);
}

TEST_CASE("fill requires a positive neighbor budget") {
    RatingMatrix m(2);
    m.add_user("a", "g");
    CHECK_THROWS_AS(hyrec::fill_vacant(m, 0), std::invalid_argument);
    CHECK_THROWS_AS(hyrec::build_item_model(hyrec::fill_vacant(m, 1), 0),
                    std::invalid_argument);
}

TEST_CASE("worked 3x3 fill example") {
    // u0 = (1, 1, _), u1 = (1, _, 1), u2 = (_, 1, _).
    // sim(u0,u1) = 1 (item 0), sim(u0,u2) = 1 (item 1), sim(u1,u2) = 0.
    // u0 item 2: only rater u1, sim 1 -> fill 1.
    // u1 item 1: raters u0 (sim 1) and u2 (sim 0, dropped) -> fill 1.
    // u2 item 0: rater u0 with sim 1 -> fill 1; rater u1 dropped at sim 0.
    // u2 item 2: only rater u1, sim 0 -> no positive rater, default 0.
    const auto dense = oracle::toy3x3();
    const RatingMatrix m = oracle::to_rating_matrix(dense);
    const auto filled = hyrec::fill_vacant(m, 2);
    CHECK(filled.at("u0", 2) == 1.0);
    CHECK(filled.at("u1", 1) == 1.0);
    CHECK(filled.at("u2", 0) == 1.0);
    CHECK(filled.at("u2", 2) == 0.0);
}

TEST_CASE("toy 3x3 matches the brute-force pipeline exactly") {
    check_against_oracle(oracle::toy3x3(), 2, 2);
}

TEST_CASE("toy 10x20 matches the brute-force pipeline exactly") {
    check_against_oracle(oracle::toy10x20(), 5, 10);
    check_against_oracle(oracle::toy10x20(), 1, 1);  // harsh truncation
    check_against_oracle(oracle::toy10x20(), 10, 20);  // no truncation
}

TEST_CASE("duplicate item columns are mutual top neighbors with similarity 1") {
    const auto dense = oracle::toy10x20();  // items 18 and 19 copy item 17
    const RatingMatrix m = oracle::to_rating_matrix(dense);
    const auto filled = hyrec::fill_vacant(m, 5);
    const auto model = hyrec::build_item_model(filled, 3);
    const auto& n17 = model.neighbors(17);
    REQUIRE(n17.size() >= 2);
    CHECK(n17[0].first == 18);  // tie at sim 1 resolves to the lower id
    CHECK(n17[0].second == 1.0);
    CHECK(n17[1].first == 19);
    CHECK(n17[1].second == 1.0);
}

TEST_CASE("neighbor lists respect the k cap and ordering invariants") {
    const auto dense = oracle::toy10x20();
    const RatingMatrix m = oracle::to_rating_matrix(dense);
    const auto filled = hyrec::fill_vacant(m, 5);
    for (int k : {1, 2, 7}) {
        const auto model = hyrec::build_item_model(filled, k);
        CHECK(model.k == k);
        for (int i = 0; i < model.n_items(); ++i) {
            const auto& list = model.neighbors(i);
            CHECK(list.size() <= static_cast<std::size_t>(k));
            for (std::size_t j = 0; j < list.size(); ++j) {
                CHECK(list[j].second > 0.0);
                CHECK(list[j].first != i);
                if (j > 0) {
                    const bool ordered =
                        list[j - 1].second > list[j].second ||
                        (list[j - 1].second == list[j].second &&
                         list[j - 1].first < list[j].first);
                    CHECK(ordered);
                }
            }
        }
    }
}

TEST_CASE("prediction degenerate cases") {
    RatingMatrix m(4);
    m.add_user("a", "g");
    m.add_user("b", "g");
    // Two identical columns -> mutual neighbors with similarity 1; a user
    // whose filled value on the neighbor is 1 predicts exactly 1.
    m.rate("a", 0, 1.0, "", 0);
    m.rate("a", 1, 1.0, "", 0);
    m.rate("b", 0, 1.0, "", 0);
    m.rate("b", 1, 1.0, "", 0);
    const auto filled = hyrec::fill_vacant(m, 2);
    const auto model = hyrec::build_item_model(filled, 2);
    CHECK(hyrec::predict(model, filled, "a", 0) == 1.0);
    // Item 3 was never rated by anyone: no neighbors, prediction 0.
    CHECK(model.neighbors(3).empty());
    CHECK(hyrec::predict(model, filled, "a", 3) == 0.0);
}

TEST_CASE("top_n ranks by prediction with id tie-breaks and truncates") {
    const auto dense = oracle::toy10x20();
    const RatingMatrix m = oracle::to_rating_matrix(dense);
    const auto filled = hyrec::fill_vacant(m, 5);
    const auto model = hyrec::build_item_model(filled, 10);
    const auto ranked = hyrec::top_n(model, filled, "u00", 5);
    REQUIRE(ranked.size() == 5);
    for (std::size_t i = 1; i < ranked.size(); ++i) {
        const bool ordered = ranked[i - 1].second > ranked[i].second ||
                             (ranked[i - 1].second == ranked[i].second &&
                              ranked[i - 1].first < ranked[i].first);
        CHECK(ordered);
    }
    for (const auto& [item, score] : ranked)
        CHECK(score == hyrec::predict(model, filled, "u00", item));
    CHECK(hyrec::top_n(model, filled, "u00", 1000).size() == 20);
}

TEST_CASE("group action restricts to group-supported items") {
    // g1 visited r7 only; g2 visited r3. For a g1 member every menu
    // containing 7 must pick 7 even if other items predict higher globally.
    RatingMatrix m(10);
    m.add_user("a", "g1");
    m.add_user("b", "g1");
    m.add_user("c", "g2");
    m.rate("b", 7, 1.0, "", 0);
    m.rate("c", 3, 1.0, "", 0);
    const auto filled = hyrec::fill_vacant(m, 5);
    const auto model = hyrec::build_item_model(filled, 5);
    CHECK(hyrec::social_group_action(model, filled, m, "a", {1, 3, 7, 9}) == 7);
    // No overlap between the menu and the group's support: lowest id wins.
    CHECK(hyrec::social_group_action(model, filled, m, "a", {9, 4, 2}) == 2);
    // The g2 member is steered to its own group's item.
    CHECK(hyrec::social_group_action(model, filled, m, "c", {3, 7}) == 3);
}

TEST_CASE("group action with an empty matrix falls back to the lowest id") {
    RatingMatrix m(5);
    m.add_user("a", "g1");
    const auto filled = hyrec::fill_vacant(m, 5);
    const auto model = hyrec::build_item_model(filled, 5);
    CHECK(hyrec::social_group_action(model, filled, m, "a", {4, 2, 3}) == 2);
}

TEST_CASE("group action result is always on the menu") {
    const auto dense = oracle::toy10x20();
    const RatingMatrix m = oracle::to_rating_matrix(dense);
    const auto filled = hyrec::fill_vacant(m, 5);
    const auto model = hyrec::build_item_model(filled, 10);
    hyrec::rng::Engine eng(5);
    for (int round = 0; round < 200; ++round) {
        std::vector<int> menu;
        const std::size_t len = 1 + hyrec::rng::uniform_index(eng, 6);
        for (std::size_t i = 0; i < len; ++i)
            menu.push_back(static_cast<int>(hyrec::rng::uniform_index(eng, 20)));
        const auto& user = m.users()[hyrec::rng::uniform_index(eng, m.users().size())];
        const int a = hyrec::social_group_action(model, filled, m, user, menu);
        CHECK(std::find(menu.begin(), menu.end(), a) != menu.end());
    }
}

TEST_CASE("fill is invariant to user insertion order") {
    const auto dense = oracle::toy10x20();
    const RatingMatrix forward = oracle::to_rating_matrix(dense);

    RatingMatrix reversed(20);
    for (std::size_t u = dense.users.size(); u-- > 0;)
        reversed.add_user(dense.users[u], dense.groups[u]);
    for (std::size_t u = 0; u < dense.users.size(); ++u)
        for (std::size_t i = 0; i < 20; ++i)
            if (dense.cells[u][i])
                reversed.rate(dense.users[u], static_cast<int>(i), *dense.cells[u][i], "", 0);

    const auto f1 = hyrec::fill_vacant(forward, 5);
    const auto f2 = hyrec::fill_vacant(reversed, 5);
    for (const auto& user : dense.users)
        for (int i = 0; i < 20; ++i) CHECK(f1.at(user, i) == f2.at(user, i));

    const auto m1 = hyrec::build_item_model(f1, 5);
    const auto m2 = hyrec::build_item_model(f2, 5);
    for (int i = 0; i < 20; ++i) {
        REQUIRE(m1.neighbors(i).size() == m2.neighbors(i).size());
        for (std::size_t j = 0; j < m1.neighbors(i).size(); ++j) {
            CHECK(m1.neighbors(i)[j].first == m2.neighbors(i)[j].first);
            CHECK(m1.neighbors(i)[j].second == m2.neighbors(i)[j].second);
        }
    }
}

TEST_CASE("views cut by trial and prefer matching states") {
    RatingMatrix m(4);
    m.add_user("a", "g1");
    m.add_user("b", "g1");
    m.add_user("c", "g2");
    m.rate("a", 0, 1.0, "s1", 0);
    m.rate("b", 1, 1.0, "s2", 5);
    m.rate("c", 2, 1.0, "s1", 1);

    // Group restriction: only g1 rows, c's transaction gone.
    const auto g1 = m.view("g1");
    CHECK(g1.users() == std::vector<std::string>{"a", "b"});
    CHECK(g1.entry("a", 0) == 1.0);
    CHECK(g1.entry("b", 1) == 1.0);
    CHECK_FALSE(g1.has_user("c"));

    // Trial cut: b's visit at trial 5 is excluded, the row stays.
    const hyrec::ViewOptions cut{3, std::nullopt};
    const auto early = m.view("g1", cut);
    CHECK(early.entry("a", 0) == 1.0);
    CHECK(early.entry("b", 1) == std::nullopt);
    CHECK(early.users() == std::vector<std::string>{"a", "b"});

    // State preference: s2 matches only b's visit.
    const hyrec::ViewOptions s2{std::nullopt, std::string("s2")};
    const auto only_s2 = m.view("g1", s2);
    CHECK(only_s2.entry("a", 0) == std::nullopt);
    CHECK(only_s2.entry("b", 1) == 1.0);

    // No transaction matches state s9: fall back to every g1 transaction.
    const hyrec::ViewOptions s9{std::nullopt, std::string("s9")};
    const auto fallback = m.view("g1", s9);
    CHECK(fallback.entry("a", 0) == 1.0);
    CHECK(fallback.entry("b", 1) == 1.0);
}

TEST_CASE("add_transaction replays a log verbatim") {
    RatingMatrix src(3);
    src.add_user("a", "g");
    src.add_user("b", "g");
    src.rate("a", 0, 1.0, "s", 2);
    src.rate("b", 2, 0.75, "", 7);

    RatingMatrix dst(3);
    dst.add_user("a", "g");
    dst.add_user("b", "g");
    for (const auto& t : src.transactions()) dst.add_transaction(t);
    CHECK(dst.entry("a", 0) == 1.0);
    CHECK(dst.entry("b", 2) == 0.75);
    REQUIRE(dst.transactions().size() == 2);
    CHECK(dst.transactions()[1].trial == 7);
    CHECK(dst.transactions()[1].state_id.empty());

    hyrec::Transaction bad;
    bad.user = "nobody";
    bad.item = 0;
    CHECK_THROWS_AS(dst.add_transaction(bad), std::invalid_argument);
}
