#include <doctest.h>

#include <map>

#include "cirl/game.hpp"
#include "micro_oracle.hpp"

using namespace cirl;

TEST_CASE("micro games are valid") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) CHECK(validate_game(oracle::random_micro_game(seed)).empty());
}

TEST_CASE("validation lists every broken invariant") {
    auto g = oracle::random_micro_game(1);
    g.transition[0] = {{0, 0.5}, {1, 0.4}};
    g.prior[0] += 0.5;
    g.reward.pop_back();
    const auto v = validate_game(g);
    CHECK(v.size() >= 3);
    CHECK_THROWS_AS(require_valid(g), UsageError);

    auto h = oracle::random_micro_game(2);
    h.horizon = 0;
    CHECK_FALSE(validate_game(h).empty());

    auto k = oracle::random_micro_game(3);
    k.human_legal = {0, 0, 1, 1};
    CHECK_FALSE(validate_game(k).empty());
}

TEST_CASE("step follows the transition measure") {
    const auto g = oracle::random_micro_game(4);
    Rng rng(3);
    std::map<std::size_t, int> counts;
    const int n = 40000;
    for (int i = 0; i < n; ++i) counts[step(g, StateId{0}, HumanActionId{1}, RobotActionId{0}, rng).next.value]++;
    const double p0 = g.row(0, 1, 0)[0].probability;
    CHECK(counts[0] / double(n) == doctest::Approx(p0).epsilon(0.02));
    const auto r = step(g, StateId{1}, HumanActionId{0}, RobotActionId{1}, rng).rewards;
    CHECK(r[0] == g.reward_at(1, 0, 1, 0));
    CHECK(r[1] == g.reward_at(1, 0, 1, 1));
    CHECK_THROWS_AS(step(g, StateId{2}, HumanActionId{0}, RobotActionId{0}, rng), UsageError);
}

TEST_CASE("seeded streams are reproducible and distinct") {
    CHECK(derive_seed(7, 1) == derive_seed(7, 1));
    CHECK(derive_seed(7, 1) != derive_seed(7, 2));
    CHECK(derive_seed(7, 1) != derive_seed(8, 1));
    Rng a(derive_seed(1, 0)), b(derive_seed(1, 0));
    for (int i = 0; i < 10; ++i) CHECK(uniform01(a) == uniform01(b));
}

TEST_CASE("sample_index respects weights") {
    Rng rng(9);
    const std::vector<double> w = {0.0, 3.0, 1.0};
    int ones = 0;
    for (int i = 0; i < 20000; ++i) {
        const auto k = sample_index(w, rng);
        CHECK(k != 0);
        ones += k == 1;
    }
    CHECK(ones / 20000.0 == doctest::Approx(0.75).epsilon(0.03));
}

TEST_CASE("prior marginals") {
    const auto g = oracle::random_micro_game(6);
    const auto m = state_marginal(g);
    CHECK(m[0] + m[1] == doctest::Approx(1.0));
    const auto post = objective_posterior_given_state(g, 0);
    CHECK(post[0] == doctest::Approx(g.prior_at(0, 0) / m[0]));
}
