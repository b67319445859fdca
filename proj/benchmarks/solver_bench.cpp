#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "cirl/chefworld.hpp"
#include "cirl/evaluator.hpp"

using namespace cirl;

namespace {

std::shared_ptr<const GameSpec> soup_salad() {
    static const auto spec = std::make_shared<const GameSpec>(build_chefworld(two_recipe_scenario()));
    return spec;
}

std::shared_ptr<const GameSpec> four_recipes() {
    static const auto spec = std::make_shared<const GameSpec>(build_chefworld(four_recipe_benchmark()));
    return spec;
}

void BM_SolveSoupSalad(benchmark::State& state) {
    const BeliefGrid grid(2, static_cast<std::size_t>(state.range(0)));
    SolverOptions options;
    options.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(solve_cirl(soup_salad(), grid, RationalityModel::boltzmann(5.0), options));
}
BENCHMARK(BM_SolveSoupSalad)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_SolveFourRecipes(benchmark::State& state) {
    const BeliefGrid grid(4, 10);
    SolverOptions options;
    options.threads = 1;
    for (auto _ : state) benchmark::DoNotOptimize(solve_cirl(four_recipes(), grid, RationalityModel::boltzmann(2.5), options));
}
BENCHMARK(BM_SolveFourRecipes)->Unit(benchmark::kMillisecond)->Iterations(1);

void BM_Project(benchmark::State& state) {
    const BeliefGrid grid(static_cast<std::size_t>(state.range(0)), 10);
    std::mt19937_64 rng(1);
    std::exponential_distribution<double> e(1.0);
    std::vector<std::vector<double>> beliefs(256, std::vector<double>(grid.dimension()));
    for (auto& b : beliefs) {
        double z = 0.0;
        for (auto& x : b) z += (x = e(rng));
        for (auto& x : b) x /= z;
    }
    std::size_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(grid.project(beliefs[i++ % beliefs.size()]));
}
BENCHMARK(BM_Project)->Arg(2)->Arg(4);

void BM_Softmax(benchmark::State& state) {
    std::vector<double> q(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = 0.1 * static_cast<double>(i);
    std::vector<double> out(q.size());
    const auto model = RationalityModel::boltzmann(5.0);
    for (auto _ : state) {
        boltzmann_policy_into(q, model, out);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_Softmax)->Arg(4)->Arg(16);

void BM_BayesUpdate(benchmark::State& state) {
    const std::vector<double> prior = {0.1, 0.2, 0.3, 0.4}, lik = {0.9, 0.5, 0.2, 0.1};
    std::vector<double> out(4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(bayes_update_into(prior, lik, out));
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_BayesUpdate);

void BM_ExactEvaluation(benchmark::State& state) {
    const BeliefGrid grid(2, 20);
    const auto model = RationalityModel::boltzmann(5.0);
    Solutions sol;
    sol.spec = soup_salad();
    sol.cirl = std::make_shared<const CirlSolution>(solve_cirl(sol.spec, grid, model));
    for (auto _ : state) benchmark::DoNotOptimize(expected_value_exact(Condition::cirl(model), sol));
}
BENCHMARK(BM_ExactEvaluation)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
