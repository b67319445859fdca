#include <doctest.h>

#include <cmath>
#include <memory>

#include "cirl/chefworld.hpp"
#include "cirl/evaluator.hpp"

using namespace cirl;

namespace {

Solutions solve_both(std::shared_ptr<const GameSpec> spec, const RationalityModel& model, std::size_t m = 20) {
    const BeliefGrid grid(spec->num_objectives(), m);
    Solutions s;
    s.spec = spec;
    s.cirl = std::make_shared<const CirlSolution>(solve_cirl(spec, grid, model));
    s.literal = std::make_shared<const LiteralSolution>(solve_literal(spec, grid, model));
    return s;
}

std::shared_ptr<const GameSpec> fig1() { return std::make_shared<const GameSpec>(build_chefworld(two_recipe_scenario())); }

std::vector<std::size_t> fig1_script(const GameSpec& g) {
    return {g.find_human_action("slice bread"), g.find_human_action("wait"), g.find_human_action("wait"),
            g.find_human_action("wait")};
}

}  // namespace

TEST_CASE("exact enumeration accounts for all probability mass") {
    const auto sol = solve_both(fig1(), RationalityModel::boltzmann(2.5));
    for (const auto& c : {Condition::cirl(sol.model()), Condition::irl(sol.model())}) {
        const auto v = expected_value_exact(c, sol);
        CHECK(v.leaf_mass + v.pruned_mass == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(v.pruned_mass < 1e-6);
        CHECK(v.total >= 0.0);
        CHECK(v.total <= 1.0 + 1e-12);
        CHECK(v.total == doctest::Approx(v.success));
    }
}

TEST_CASE("exact value agrees with the solver's own prediction") {
    const auto spec = fig1();
    const auto sol = solve_both(spec, RationalityModel::boltzmann(5.0));
    const auto exact = expected_value_exact(Condition::cirl(sol.model()), sol);
    const auto predicted = start_value(*sol.cirl, 0, Belief({0.3, 0.7}));
    // Equal up to the fixed-point tolerance of the solve.
    CHECK(exact.total == doctest::Approx(predicted.expected).epsilon(1e-7));
}

TEST_CASE("monte carlo agrees with exact enumeration") {
    const auto sol = solve_both(fig1(), RationalityModel::boltzmann(2.5));
    for (const auto& c : {Condition::cirl(sol.model()), Condition::irl(sol.model())}) {
        const auto exact = expected_value_exact(c, sol);
        const auto mc = expected_value_monte_carlo(c, sol, 20000, 42, 1);
        CHECK(std::abs(mc.mean - exact.total) <= 4 * mc.standard_error + 1e-9);
        const auto again = expected_value_monte_carlo(c, sol, 20000, 42, 3);
        CHECK(again.mean == mc.mean);
    }
}

TEST_CASE("episodes are reproducible from the seed") {
    const auto sol = solve_both(fig1(), RationalityModel::boltzmann(1.0));
    const auto c = Condition::cirl(sol.model());
    const auto a = simulate_episode(c, sol, 0, 99);
    const auto b = simulate_episode(c, sol, 0, 99);
    CHECK(a.to_jsonl(*sol.spec) == b.to_jsonl(*sol.spec));
}

TEST_CASE("scripted wait reveals soup to the pragmatic robot but not the literal one") {
    const auto spec = fig1();
    const auto sol = solve_both(spec, RationalityModel::boltzmann(5.0));
    const auto script = fig1_script(*spec);
    const auto soup = spec->find_objective("soup");
    auto pragmatic = Condition::cirl(sol.model());
    pragmatic.human = HumanKind::Scripted;
    auto literal = Condition::irl(sol.model());
    literal.human = HumanKind::Scripted;

    const auto p = simulate_episode(pragmatic, sol, soup, 0, script);
    REQUIRE(p.turns.size() >= 3);
    CHECK(p.turns[2].belief[soup] > 0.5);
    CHECK(p.success);

    const auto l = simulate_episode(literal, sol, soup, 0, script);
    CHECK_FALSE(l.success);
    for (std::size_t i = 1; i < l.turns.size(); ++i) CHECK(l.turns[i].belief[soup] < 0.5);
    CHECK(l.final_belief[soup] < 0.5);
}

TEST_CASE("runner rejects illegal actions without changing state") {
    const auto spec = fig1();
    const auto sol = solve_both(spec, RationalityModel::boltzmann(5.0));
    auto c = Condition::cirl(sol.model());
    c.human = HumanKind::Scripted;
    EpisodeRunner runner(sol, c, 0, 0);
    runner.advance(spec->find_human_action("chop tomatoes"));
    const auto before = runner.trace().turns.size();
    CHECK_THROWS_AS(runner.advance(spec->find_human_action("slice bread") + 100), UsageError);
    CHECK_THROWS_AS(runner.advance(spec->find_human_action("chop tomatoes")), UsageError);
    CHECK(runner.trace().turns.size() == before);
    CHECK(runner.turn() == 1);
}

TEST_CASE("conditions refuse tables solved under another model") {
    const auto sol = solve_both(fig1(), RationalityModel::boltzmann(5.0), 10);
    CHECK_THROWS_AS(expected_value_exact(Condition::cirl(RationalityModel::boltzmann(1.0)), sol), UsageError);
    Solutions only_cirl = sol;
    only_cirl.literal = nullptr;
    CHECK_THROWS_AS(expected_value_exact(Condition::irl(sol.model()), only_cirl), UsageError);
}

TEST_CASE("benchmark report has one cell per robot and model") {
    const auto spec = fig1();
    const std::vector<RationalityModel> models = {RationalityModel::boltzmann(1.0), RationalityModel::rational()};
    BenchmarkOptions options;
    options.grid_resolution = 10;
    const auto report = run_benchmark(spec, models, options);
    CHECK(report.cells.size() == 4);
    CHECK(report.cell(RobotKind::CirlPragmatic, models[1]).exact.total == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(report.to_json() == run_benchmark(spec, models, options).to_json());
    CHECK(report.to_text().find("Rational") != std::string::npos);
}
