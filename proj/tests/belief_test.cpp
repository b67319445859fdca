#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bayes_oracle.hpp"
#include "cirl/belief.hpp"

using namespace cirl;

namespace {

std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> w(n);
    for (auto& x : w) x = e(rng);
    const double z = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= z;
    return w;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("boltzmann policy worked example") {
    const std::vector<double> q = {1.0, 0.0};
    const auto p = boltzmann_policy(q, RationalityModel::boltzmann(1.0));
    CHECK(p[0] == doctest::Approx(0.731059).epsilon(1e-6));
    CHECK(p[1] == doctest::Approx(0.268941).epsilon(1e-6));
}

TEST_CASE("boltzmann policy matches a direct softmax and is shift invariant") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 6;
        std::vector<double> q(n);
        for (auto& x : q) x = u(rng);
        const double beta = 0.1 + std::abs(u(rng)) * 3.0;
        const auto model = RationalityModel::boltzmann(beta);
        const auto p = boltzmann_policy(q, model);
        const auto ref = oracle::naive_softmax(q, beta);
        CHECK(std::abs(sum(p) - 1.0) < 1e-12);
        auto shifted = q;
        const double c = u(rng) * 100.0;
        for (auto& x : shifted) x += c;
        const auto ps = boltzmann_policy(shifted, model);
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(std::abs(p[i] - ref[i]) < 1e-12);
            CHECK(std::abs(p[i] - ps[i]) < 1e-12);
        }
        const auto hi = std::max_element(q.begin(), q.end()) - q.begin();
        CHECK(p[hi] == doctest::Approx(*std::max_element(p.begin(), p.end())));
    }
}

TEST_CASE("boltzmann policy stays finite for huge values") {
    const std::vector<double> q = {1e6, 1e6 - 1.0, -1e6};
    const auto p = boltzmann_policy(q, RationalityModel::boltzmann(50.0));
    for (double x : p) CHECK(std::isfinite(x));
    CHECK(p[0] == doctest::Approx(1.0));
}

TEST_CASE("rational model puts the mass on the first maximiser, floored by epsilon") {
    const std::vector<double> q = {0.5, 1.0, 1.0};
    const auto m = RationalityModel::rational(0.0);
    const auto p = boltzmann_policy(q, m);
    CHECK(p == std::vector<double>{0.0, 1.0, 0.0});
    CHECK(tie_broken_argmax(q) == 1);
    const std::vector<double> near = {1.0, 1.0 + 1e-12};
    CHECK(tie_broken_argmax(near) == 0);

    const double eps = 1e-3;
    const auto pf = boltzmann_policy(q, RationalityModel::rational(eps));
    CHECK(pf[0] == doctest::Approx(eps / (1 + 3 * eps)));
    CHECK(pf[1] == doctest::Approx((1 + eps) / (1 + 3 * eps)));
    CHECK(std::abs(sum(pf) - 1.0) < 1e-12);
}

TEST_CASE("model checks reject bad parameters") {
    CHECK_THROWS_AS(RationalityModel::boltzmann(0.0).check(4), UsageError);
    CHECK_THROWS_AS(RationalityModel::boltzmann(INFINITY).check(4), UsageError);
    CHECK_THROWS_AS(RationalityModel::boltzmann(1.0, 0.25).check(4), UsageError);
    CHECK_NOTHROW(RationalityModel::boltzmann(1.0, 0.2).check(4));
    CHECK_THROWS_AS(boltzmann_policy(std::vector<double>{NAN, 0.0}, RationalityModel::boltzmann(1.0)), NumericError);
}

TEST_CASE("bayes update worked example and zero-evidence fallback") {
    const auto post = bayes_update(Belief({0.5, 0.5}), std::vector<double>{0.8, 0.2});
    CHECK(post[0] == doctest::Approx(0.8));
    CHECK(post[1] == doctest::Approx(0.2));

    std::vector<double> out = {9.0, 9.0};
    const std::vector<double> prior = {1.0, 0.0}, lik = {0.0, 1.0};
    CHECK_FALSE(bayes_update_into(prior, lik, out));
    CHECK(out == std::vector<double>{9.0, 9.0});
}

TEST_CASE("bayes update agrees with brute-force enumeration on five objectives") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        const auto prior = random_simplex(5, rng);
        std::vector<double> lik(5);
        for (auto& x : lik) x = u(rng);
        const auto post = bayes_update(Belief(prior), lik);
        const auto ref = oracle::brute_force_posterior(prior, lik);
        CHECK(std::abs(sum(post.vector()) - 1.0) < 1e-12);
        for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(post[i] - ref[i]) < 1e-12);

        const std::vector<double> flat(5, u(rng) + 0.01);
        const auto same = bayes_update(Belief(prior), flat);
        for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(same[i] - prior[i]) < 1e-12);
    }
}

TEST_CASE("sequential updates commute") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    const auto prior = random_simplex(4, rng);
    std::vector<double> l1(4), l2(4);
    for (auto& x : l1) x = u(rng);
    for (auto& x : l2) x = u(rng);
    const auto a = bayes_update(bayes_update(Belief(prior), l1), l2);
    const auto b = bayes_update(bayes_update(Belief(prior), l2), l1);
    for (std::size_t i = 0; i < 4; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("belief invariants") {
    CHECK_THROWS_AS(Belief({0.5, 0.6}), UsageError);
    CHECK_THROWS_AS(Belief({1.5, -0.5}), UsageError);
    CHECK_THROWS_AS(Belief::normalized({0.0, 0.0}), UsageError);
    CHECK(Belief::normalized({1.0, 3.0})[1] == doctest::Approx(0.75));
    CHECK(Belief::uniform(4)[2] == doctest::Approx(0.25));
}

TEST_CASE("belief transition equals bayes with the boltzmann likelihood") {
    const std::vector<double> values = {1.0, 0.0, 0.0, 1.0};  // θ0 prefers a0, θ1 prefers a1
    const HumanValueSlice slice{values, 2};
    const auto model = RationalityModel::boltzmann(2.0);
    const auto b = belief_transition(Belief({0.3, 0.7}), 0, slice, model);
    const double l0 = boltzmann_policy(slice.row(0), model)[0], l1 = boltzmann_policy(slice.row(1), model)[0];
    CHECK(b[0] == doctest::Approx(0.3 * l0 / (0.3 * l0 + 0.7 * l1)));
}

TEST_CASE("grid size, vertices and uniform point") {
    for (std::size_t n = 2; n <= 4; ++n)
        for (std::size_t m : {1u, 2u, 6u, 12u}) {
            const BeliefGrid grid(n, m);
            std::size_t expected = 1;
            for (std::size_t i = 1; i < n; ++i) expected = expected * (m + i) / i;
            CHECK(grid.size() == expected);
            for (std::size_t k = 0; k < n; ++k) {
                const auto v = Belief::point_mass(n, k);
                CHECK(grid.belief(grid.project(v.weights())) == v);
            }
            if (m % n == 0) {
                const auto uni = grid.belief(grid.project(Belief::uniform(n).weights()));
                for (std::size_t k = 0; k < n; ++k) CHECK(uni[k] == doctest::Approx(1.0 / n));
            }
            for (std::size_t g = 0; g < grid.size(); ++g) {
                CHECK(grid.index_of(grid.counts(g)) == g);
                CHECK(grid.project(grid.point(g)) == g);
            }
        }
    CHECK(BeliefGrid::default_resolution(2) == 20);
    CHECK(BeliefGrid::default_resolution(4) == 10);
}

TEST_CASE("projection worked example") {
    const BeliefGrid grid(2, 10);
    const auto b = grid.belief(grid.project(std::vector<double>{0.26, 0.74}));
    CHECK(b[0] == doctest::Approx(0.3));
    CHECK(b[1] == doctest::Approx(0.7));
}

TEST_CASE("projection is the L1-nearest grid point by exhaustive search") {
    std::mt19937_64 rng(21);
    for (std::size_t n : {2u, 3u, 4u}) {
        const BeliefGrid grid(n, 7);
        for (int trial = 0; trial < 300; ++trial) {
            const auto b = random_simplex(n, rng);
            double best = 1e9;
            for (std::size_t g = 0; g < grid.size(); ++g) {
                double d = 0.0;
                for (std::size_t i = 0; i < n; ++i) d += std::abs(grid.point(g)[i] - b[i]);
                best = std::min(best, d);
            }
            const auto chosen = grid.point(grid.project(b));
            double d = 0.0;
            for (std::size_t i = 0; i < n; ++i) d += std::abs(chosen[i] - b[i]);
            CHECK(d <= best + 1e-12);
        }
    }
}

TEST_CASE("projection ties go to the lowest index") {
    const BeliefGrid grid(2, 2);
    // (0.25, 0.75) is equidistant from (0, 1) at index 0 and (0.5, 0.5) at index 1.
    CHECK(grid.project(std::vector<double>{0.25, 0.75}) == 0);
}
