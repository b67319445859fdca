#include "micro_check.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "cirl/solver.hpp"
#include "micro_oracle.hpp"

namespace cirl::oracle {

MicroComparison compare_micro_game(std::uint64_t seed, std::size_t m) {
    auto spec = std::make_shared<const GameSpec>(random_micro_game(seed));
    const double beta = micro_game_beta(seed);
    const BeliefGrid grid(2, m);
    const auto model = RationalityModel::boltzmann(beta);
    SolverOptions options;
    options.threads = 1;
    const auto sol = solve_cirl(spec, grid, model, options);

    std::vector<std::size_t> grid_of_k(m + 1);
    for (std::size_t g = 0; g < grid.size(); ++g)
        grid_of_k[static_cast<std::size_t>(std::lround(grid.point(g)[0] * static_cast<double>(m)))] = g;

    const auto solver_q = [&](int t, std::size_t s, std::size_t k, std::size_t a_h, std::size_t a_r, std::size_t th) {
        return sol.q.at(t, s, grid_of_k[k], a_h, a_r, th);
    };
    const auto distance = [&](int t, std::size_t s, std::size_t k, std::size_t a_r, const auto& cand) {
        double d = 0.0;
        for (std::size_t th = 0; th < 2; ++th)
            for (std::size_t a = 0; a < 2; ++a) d = std::max(d, std::abs(cand[th][a] - solver_q(t, s, k, a, a_r, th)));
        return d;
    };

    MicroOracle oracle(*spec, m, beta);
    MicroComparison out;
    oracle.solve([&](int t, std::size_t s, std::size_t k, std::size_t a_r, const CellEquilibria& e) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < e.candidates.size(); ++i)
            if (distance(t, s, k, a_r, e.candidates[i]) < distance(t, s, k, a_r, e.candidates[best])) best = i;
        return best;
    });

    for (int t = 0; t < spec->horizon; ++t)
        for (std::size_t s = 0; s < 2; ++s)
            for (std::size_t k = 0; k <= m; ++k)
                for (std::size_t a_r = 0; a_r < 2; ++a_r) {
                    const auto& e = oracle.equilibria(t, s, k, a_r);
                    if (e.candidates.size() > 1) ++out.multiple;
                    if (e.candidates.empty()) {
                        ++out.none;
                        const bool flagged = std::any_of(sol.report.non_converged.begin(), sol.report.non_converged.end(),
                                                         [&](const NonConvergedCell& c) {
                                                             return c.t == t && c.s == s && c.g == grid_of_k[k];
                                                         });
                        out.none_flagged = out.none_flagged && flagged;
                        continue;
                    }
                    ++out.cells;
                    for (std::size_t th = 0; th < 2; ++th)
                        for (std::size_t a = 0; a < 2; ++a) {
                            const double d = std::abs(oracle.q(t, s, k, a, a_r, th) - solver_q(t, s, k, a, a_r, th));
                            if (d > out.max_abs_diff) {
                                out.max_abs_diff = d;
                                out.worst = "t=" + std::to_string(t) + " s=" + std::to_string(s) + " k=" +
                                            std::to_string(k) + " a_R=" + std::to_string(a_r);
                            }
                        }
                }
    return out;
}

}  // namespace cirl::oracle
