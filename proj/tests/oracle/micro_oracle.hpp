#pragma once

#include <cstdint>
#include <vector>

#include "cirl/game.hpp"

namespace cirl::oracle {

/// Random game with 2 states, 2 actions per agent, 2 objectives, horizon 2.
GameSpec random_micro_game(std::uint64_t seed);
double micro_game_beta(std::uint64_t seed);

/// Equilibria of one (t, s, k, a_R) backup, found by enumerating which grid
/// point each human action sends the belief to and keeping the assignments
/// that reproduce themselves. Each entry holds q[θ][a_H].
struct CellEquilibria {
    std::vector<std::vector<std::vector<double>>> candidates;
};

/**
Backward induction over a two-objective lattice with resolution m, written
from the definitions alone. Grid point k is the belief (k/m, 1 − k/m).
`choose` picks which equilibrium the induction continues from when a cell
has several; it receives the candidates and returns an index.
*/
class MicroOracle {
public:
    MicroOracle(const GameSpec& spec, std::size_t m, double beta);

    template <class Choose>
    void solve(Choose&& choose);

    const CellEquilibria& equilibria(int t, std::size_t s, std::size_t k, std::size_t a_r) const {
        return eq_[index(t, s, k, a_r)];
    }
    double q(int t, std::size_t s, std::size_t k, std::size_t a_h, std::size_t a_r, std::size_t theta) const {
        return q_[(index(t, s, k, a_r) * 2 + theta) * 2 + a_h];
    }
    std::size_t project(double b0) const;

private:
    std::size_t index(int t, std::size_t s, std::size_t k, std::size_t a_r) const {
        return ((static_cast<std::size_t>(t) * 2 + s) * (m_ + 1) + k) * 2 + a_r;
    }
    std::vector<double> policy(const std::vector<double>& q_row) const;
    CellEquilibria enumerate(int t, std::size_t s, std::size_t k, std::size_t a_r) const;
    void finish_turn(int t);

    const GameSpec& spec_;
    std::size_t m_;
    double beta_;
    std::vector<CellEquilibria> eq_;
    std::vector<double> q_;      // chosen equilibrium, [t][s][k][a_R][θ][a_H]
    std::vector<double> value_;  // [t][s][k][θ], team value at the start of turn t
};

template <class Choose>
void MicroOracle::solve(Choose&& choose) {
    for (int t = spec_.horizon - 1; t >= 0; --t) {
        for (std::size_t s = 0; s < 2; ++s)
            for (std::size_t k = 0; k <= m_; ++k)
                for (std::size_t a_r = 0; a_r < 2; ++a_r) {
                    auto& e = eq_[index(t, s, k, a_r)];
                    e = enumerate(t, s, k, a_r);
                    if (e.candidates.empty()) continue;
                    const auto& pick = e.candidates[choose(t, s, k, a_r, e)];
                    for (std::size_t th = 0; th < 2; ++th)
                        for (std::size_t a = 0; a < 2; ++a) q_[(index(t, s, k, a_r) * 2 + th) * 2 + a] = pick[th][a];
                }
        finish_turn(t);
    }
}

}  // namespace cirl::oracle
