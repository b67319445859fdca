#include <doctest.h>

#include "micro_check.hpp"

using namespace cirl;

TEST_CASE("solve_cirl matches the enumeration oracle on seeded micro games") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        CAPTURE(seed);
        const auto r = oracle::compare_micro_game(seed);
        CAPTURE(r.worst);
        CHECK(r.max_abs_diff < 1e-6);
        CHECK(r.none_flagged);
        CHECK(r.cells > 0);
    }
}
