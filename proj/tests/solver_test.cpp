#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "cirl/chefworld.hpp"
#include "cirl/solver.hpp"
#include "micro_oracle.hpp"

using namespace cirl;

namespace {

std::shared_ptr<const GameSpec> micro(std::uint64_t seed, int horizon = 2, double discount = -1.0) {
    auto g = oracle::random_micro_game(seed);
    g.horizon = horizon;
    if (discount >= 0.0) g.discount = discount;
    return std::make_shared<const GameSpec>(std::move(g));
}

std::shared_ptr<const GameSpec> fig1(int horizon = 4) {
    auto g = build_chefworld(two_recipe_scenario());
    g.horizon = horizon;
    return std::make_shared<const GameSpec>(std::move(g));
}

}  // namespace

TEST_CASE("last turn backs up the immediate reward") {
    const auto spec = micro(3);
    const BeliefGrid grid(2, 4);
    const auto sol = solve_cirl(spec, grid, RationalityModel::boltzmann(2.0));
    const int t = spec->horizon - 1;
    for (std::size_t s = 0; s < 2; ++s)
        for (std::size_t g = 0; g < grid.size(); ++g)
            for (std::size_t a_h = 0; a_h < 2; ++a_h)
                for (std::size_t a_r = 0; a_r < 2; ++a_r)
                    for (std::size_t th = 0; th < 2; ++th)
                        CHECK(sol.q.at(t, s, g, a_h, a_r, th) == doctest::Approx(spec->reward_at(s, a_h, a_r, th)).epsilon(1e-7));
}

TEST_CASE("zero discount reduces every turn to the reward") {
    const auto spec = micro(5, 3, 0.0);
    const BeliefGrid grid(2, 4);
    const auto sol = solve_cirl(spec, grid, RationalityModel::boltzmann(1.0));
    for (int t = 0; t < 3; ++t)
        CHECK(sol.q.at(t, 1, 2, 1, 0, 1) == doctest::Approx(spec->reward_at(1, 1, 0, 1)).epsilon(1e-7));
}

TEST_CASE("a single objective makes the game one of full information") {
    auto g = oracle::random_micro_game(7);
    g.objectives = {"only"};
    std::vector<double> reward;
    for (std::size_t i = 0; i < g.reward.size(); i += 2) reward.push_back(g.reward[i]);
    g.reward = reward;
    g.prior = {0.4, 0.6};
    g.horizon = 3;
    const auto spec = std::make_shared<const GameSpec>(g);
    const auto model = RationalityModel::boltzmann(2.5);
    const BeliefGrid grid(1, 1);
    const auto sol = solve_cirl(spec, grid, model);
    const auto full = solve_full_info(*spec, model);
    for (int t = 0; t < 3; ++t)
        for (std::size_t s = 0; s < 2; ++s)
            for (std::size_t a_h = 0; a_h < 2; ++a_h)
                for (std::size_t a_r = 0; a_r < 2; ++a_r)
                    CHECK(sol.q.at(t, s, 0, a_h, a_r, 0) == doctest::Approx(full.at(t, s, a_h, a_r, 0)).epsilon(1e-7));
}

TEST_CASE("converged cells are fixed points of the backup map") {
    const auto spec = fig1();
    const BeliefGrid grid(2, 20);
    const auto model = RationalityModel::boltzmann(5.0);
    SolverOptions options;
    const auto sol = solve_cirl(spec, grid, model, options);
    const LegalSets legal(*spec);
    const BackupContext ctx{*spec, legal, grid, model, options};
    double worst = 0.0;
    for (int t = 0; t < spec->horizon; ++t) {
        const auto next = t + 1 < spec->horizon ? make_continuation(*spec, legal, grid, model, sol.q, t + 1)
                                                : Continuation::terminal(spec->num_states(), grid.size(), 2);
        for (std::size_t s = 0; s < spec->num_states(); ++s)
            for (std::size_t g = 0; g < grid.size(); ++g) {
                const bool flagged = std::any_of(sol.report.non_converged.begin(), sol.report.non_converged.end(),
                                                 [&](const auto& c) { return c.t == t && c.s == s && c.g == g; });
                if (flagged) continue;
                const auto cell = sol.q.cell(t, s, g);
                const auto mapped = apply_backup_map(ctx, s, g, next, cell);
                for (std::size_t i = 0; i < cell.size(); ++i) worst = std::max(worst, std::abs(mapped[i] - cell[i]));
            }
    }
    CHECK(worst < 2 * options.tol_fp);
}

TEST_CASE("robot policy is the best response to the equilibrium human") {
    const auto spec = fig1();
    const BeliefGrid grid(2, 20);
    const auto model = RationalityModel::boltzmann(2.5);
    const auto sol = solve_cirl(spec, grid, model);
    const LegalSets legal(*spec);
    for (int t = 0; t < spec->horizon; ++t)
        for (std::size_t s = 0; s < spec->num_states(); s += 3)
            for (std::size_t g = 0; g < grid.size(); g += 4) {
                const CellView view{sol.q.cell(t, s, g), 2, spec->num_human_actions(), legal.human[s], legal.robot[s]};
                const auto chosen = sol.robot_action(t, s, g);
                CHECK(spec->robot_action_legal(s, chosen));
                const double v = robot_action_value(view, view, chosen, grid.point(g), model);
                for (auto a_r : legal.robot[s]) CHECK(robot_action_value(view, view, a_r, grid.point(g), model) <= v + 1e-9);
            }
}

TEST_CASE("success-probability values stay in [0, 1]") {
    const auto spec = fig1();
    const BeliefGrid grid(2, 10);
    for (const auto& model : {RationalityModel::boltzmann(1.0), RationalityModel::rational()}) {
        const auto sol = solve_cirl(spec, grid, model);
        const auto [lo, hi] = std::minmax_element(sol.q.values().begin(), sol.q.values().end());
        CHECK(*lo >= -1e-9);
        CHECK(*hi <= 1.0 + 1e-9);
    }
}

TEST_CASE("thread count does not change the tables") {
    const auto spec = fig1();
    const BeliefGrid grid(2, 20);
    const auto model = RationalityModel::boltzmann(5.0);
    SolverOptions one, four;
    one.threads = 1;
    four.threads = 4;
    const auto a = solve_cirl(spec, grid, model, one);
    const auto b = solve_cirl(spec, grid, model, four);
    CHECK(a.q.values() == b.q.values());
    CHECK(a.robot_policy == b.robot_policy);
}

TEST_CASE("single-cell backup matches the sweep") {
    const auto spec = fig1();
    const BeliefGrid grid(2, 20);
    const auto model = RationalityModel::boltzmann(5.0);
    const auto sol = solve_cirl(spec, grid, model);
    const auto cell = backup_cell(1, 0, 7, *spec, grid, model, sol.q);
    const auto ref = sol.q.cell(1, 0, 7);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(cell.values[i] == ref[i]);
}

TEST_CASE("full information values are non-decreasing in the horizon") {
    const auto model = RationalityModel::boltzmann(5.0);
    const auto short_h = solve_full_info(*fig1(3), model);
    const auto long_h = solve_full_info(*fig1(5), model);
    const LegalSets legal(*fig1());
    for (std::size_t th = 0; th < 2; ++th) {
        const auto a = full_info_robot_action(*fig1(3), legal, short_h, model, 0, 0, th);
        const auto b = full_info_robot_action(*fig1(5), legal, long_h, model, 0, 0, th);
        double vs = 0.0, vl = 0.0;
        const auto lh = legal.human[0];
        std::vector<double> rs, rl;
        for (auto h : lh) {
            rs.push_back(short_h.at(0, 0, h, a, th));
            rl.push_back(long_h.at(0, 0, h, b, th));
        }
        const auto ps = boltzmann_policy(rs, model), pl = boltzmann_policy(rl, model);
        for (std::size_t j = 0; j < lh.size(); ++j) {
            vs += ps[j] * rs[j];
            vl += pl[j] * rl[j];
        }
        CHECK(vl >= vs - 1e-9);
    }
}

TEST_CASE("literal robot plans against the full-information human") {
    const auto spec = fig1();
    const BeliefGrid grid(2, 20);
    const auto model = RationalityModel::boltzmann(5.0);
    const auto lit = solve_literal(spec, grid, model);
    const auto full = solve_full_info(*spec, model);
    CHECK(lit.full.values() == full.values());
    const LegalSets legal(*spec);
    // At a point belief the literal robot knows θ, so it acts like the full-information robot.
    const std::size_t vertex = grid.project(std::vector<double>{1.0, 0.0});
    for (std::size_t s = 0; s < spec->num_states(); ++s) {
        const auto a = lit.robot_action(0, s, vertex);
        const CellView fv{full.cell(0, s), 2, spec->num_human_actions(), legal.human[s], legal.robot[s]};
        const double best = robot_action_value(fv, fv, full_info_robot_action(*spec, legal, full, model, 0, s, 0),
                                               std::vector<double>{1.0, 0.0}, model);
        CHECK(robot_action_value(fv, fv, a, std::vector<double>{1.0, 0.0}, model) == doctest::Approx(best).epsilon(1e-9));
    }
}

TEST_CASE("solver rejects mismatched inputs") {
    const auto spec = fig1();
    CHECK_THROWS_AS(solve_cirl(spec, BeliefGrid(3, 4), RationalityModel::boltzmann(1.0)), UsageError);
    CHECK_THROWS_AS(solve_cirl(spec, BeliefGrid(2, 4), RationalityModel::boltzmann(-1.0)), UsageError);
    CHECK_THROWS_AS(solve_cirl(nullptr, BeliefGrid(2, 4), RationalityModel::boltzmann(1.0)), UsageError);
}

TEST_CASE("start value matches the turn-0 table") {
    const auto spec = fig1();
    const BeliefGrid grid(2, 20);
    const auto sol = solve_cirl(spec, grid, RationalityModel::rational());
    const auto v = start_value(sol, 0, Belief({0.3, 0.7}));
    CHECK(v.expected == doctest::Approx(0.3 * v.per_objective[0] + 0.7 * v.per_objective[1]));
    CHECK(v.expected == doctest::Approx(1.0));
}
