#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "cirl/belief.hpp"
#include "cirl/game.hpp"

namespace cirl {

struct SolverOptions {
    double tol_fp = 1e-8;
    int max_iter = 200;
    /// Weight kept on the previous iterate: q ← d·q + (1 − d)·F(q).
    double damping = 0.5;
    /// 0 = std::thread::hardware_concurrency().
    unsigned threads = 0;

    nlohmann::json to_json() const;
};

/// Legal action index lists per state, shared by every table over a spec.
struct LegalSets {
    explicit LegalSets(const GameSpec& spec);
    std::vector<std::vector<std::size_t>> human;
    std::vector<std::vector<std::size_t>> robot;
};

/// Dense value table laid out [t][s][g][a_R][θ][a_H]; entries for illegal
/// actions are zero and never read.
class QTable {
public:
    QTable() = default;
    QTable(int horizon, std::size_t states, std::size_t grid_points, std::size_t robot_actions,
           std::size_t objectives, std::size_t human_actions);

    int horizon() const { return horizon_; }
    std::size_t num_states() const { return states_; }
    std::size_t num_grid_points() const { return grid_; }
    std::size_t num_robot_actions() const { return robot_; }
    std::size_t num_objectives() const { return objectives_; }
    std::size_t num_human_actions() const { return human_; }
    std::size_t cell_size() const { return robot_ * objectives_ * human_; }

    std::span<double> cell(int t, std::size_t s, std::size_t g) { return {values_.data() + cell_offset(t, s, g), cell_size()}; }
    std::span<const double> cell(int t, std::size_t s, std::size_t g) const {
        return {values_.data() + cell_offset(t, s, g), cell_size()};
    }
    std::size_t offset_in_cell(std::size_t a_h, std::size_t a_r, std::size_t theta) const {
        return (a_r * objectives_ + theta) * human_ + a_h;
    }
    double at(int t, std::size_t s, std::size_t g, std::size_t a_h, std::size_t a_r, std::size_t theta) const {
        return values_[cell_offset(t, s, g) + offset_in_cell(a_h, a_r, theta)];
    }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

private:
    std::size_t cell_offset(int t, std::size_t s, std::size_t g) const {
        return ((static_cast<std::size_t>(t) * states_ + s) * grid_ + g) * cell_size();
    }

    int horizon_ = 0;
    std::size_t states_ = 0, grid_ = 0, robot_ = 0, objectives_ = 0, human_ = 0;
    std::vector<double> values_;
};

/// Q(t, s, g, a_H, a_R; θ) over the belief grid.
class QFunction : public QTable {
public:
    using QTable::QTable;
};

/// Q_full(t, s, a_H, a_R; θ) of the game where θ is common knowledge.
class FullInfoQ : public QTable {
public:
    FullInfoQ() = default;
    FullInfoQ(int horizon, std::size_t states, std::size_t robot_actions, std::size_t objectives,
              std::size_t human_actions)
        : QTable(horizon, states, 1, robot_actions, objectives, human_actions) {}

    std::span<const double> cell(int t, std::size_t s) const { return QTable::cell(t, s, 0); }
    std::span<double> cell(int t, std::size_t s) { return QTable::cell(t, s, 0); }
    double at(int t, std::size_t s, std::size_t a_h, std::size_t a_r, std::size_t theta) const {
        return QTable::at(t, s, 0, a_h, a_r, theta);
    }
};

/// One (t, s, g) block of a Q table plus the legal actions of s.
struct CellView {
    std::span<const double> values;  // [a_R][θ][a_H], dense over all actions
    std::size_t num_objectives = 0;
    std::size_t num_human_actions = 0;
    std::span<const std::size_t> legal_human;
    std::span<const std::size_t> legal_robot;

    std::span<const double> human_row(std::size_t a_r, std::size_t theta) const {
        return values.subspan((a_r * num_objectives + theta) * num_human_actions, num_human_actions);
    }
};

/// Σ_{a_H, θ} q · π_H(a_H | policy row) · b(θ) for one robot action. The human
/// policy comes from `policy_source`, which is `values` itself for the
/// pragmatic robot and the full-information table for the literal one.
double robot_action_value(const CellView& values, const CellView& policy_source, std::size_t a_r,
                          std::span<const double> belief, const RationalityModel& model);

/// π_R*: argmax over legal a_R of the expected value above, lowest index on ties.
RobotActionId robot_best_response(const CellView& values, const CellView& policy_source, std::span<const double> belief,
                                  const RationalityModel& model);
RobotActionId robot_best_response(const CellView& q_cell, const Belief& b, const RationalityModel& model);

/**
Next-turn quantities needed by a backup at turn t: for each (s', g') the
robot's best response at t + 1 and the per-θ value the team expects from
there on, Σ_{a_H'} π_H(a_H' | ·) Q(t+1, s', g', a_H', a_R'; θ).
*/
struct Continuation {
    std::size_t num_states = 0, num_grid_points = 0, num_objectives = 0;
    std::vector<double> value;                  // [s'][g'][θ]
    std::vector<std::uint32_t> robot_action;    // [s'][g']

    static Continuation terminal(std::size_t states, std::size_t grid_points, std::size_t objectives);
    std::span<const double> at(std::size_t s, std::size_t g) const {
        return {value.data() + (s * num_grid_points + g) * num_objectives, num_objectives};
    }
};

/// Continuation of a belief-indexed table at turn `t`. `policy_source`
/// supplies the human model; null means the table is its own source
/// (pragmatic-pedagogic play).
Continuation make_continuation(const GameSpec& spec, const LegalSets& legal, const BeliefGrid& grid,
                               const RationalityModel& model, const QFunction& q, int t,
                               const FullInfoQ* policy_source = nullptr);

struct CellBackup {
    std::vector<double> values;  // [a_R][θ][a_H]
    double residual = 0.0;       // largest change in the final iteration, over all a_R
    int iterations = 0;          // worst over a_R
    bool converged = true;
};

struct BackupContext {
    const GameSpec& spec;
    const LegalSets& legal;
    const BeliefGrid& grid;
    const RationalityModel& model;
    const SolverOptions& options;
};

/**
Pragmatic-pedagogic Bellman backup of one (t, s, g) cell. For each legal
a_R it solves, by damped iteration from `warm_start`,

  q(a_H; θ) = r(s, a_H, a_R; θ) + γ Σ_{s'} T(s' | s, a_H, a_R) · C(s', g'(a_H); θ)

where g'(a_H) is the projected Bayes posterior of grid point g under the
Boltzmann likelihood of q itself. Non-convergence is reported, not thrown.
*/
CellBackup backup_cell(const BackupContext& ctx, std::size_t s, std::size_t g, const Continuation& next,
                       std::span<const double> warm_start);

/// Same backup with the continuation derived from `next_q` (turn t + 1), or
/// the terminal continuation when t + 1 == horizon, warm-started the way
/// solve_cirl does it.
CellBackup backup_cell(int t, std::size_t s, std::size_t g, const GameSpec& spec, const BeliefGrid& grid,
                       const RationalityModel& model, const QFunction& next_q, const SolverOptions& options = {});

/// Applies the fixed-point map once to `q` (no damping); used to verify
/// converged cells.
std::vector<double> apply_backup_map(const BackupContext& ctx, std::size_t s, std::size_t g, const Continuation& next,
                                     std::span<const double> q);

struct NonConvergedCell {
    int t = 0;
    std::size_t s = 0, g = 0;
    double residual = 0.0;
};

struct SolveReport {
    std::vector<double> sweep_max_residual;       // per turn t
    std::vector<std::uint16_t> iterations;        // [t][s][g]
    std::vector<NonConvergedCell> non_converged;
    double wall_clock_seconds = 0.0;
    nlohmann::json config;

    std::size_t converged_cells() const { return iterations.size() - non_converged.size(); }
    /// Deterministic summary (no wall clock).
    nlohmann::json to_json() const;
};

struct CirlSolution {
    std::shared_ptr<const GameSpec> spec;
    BeliefGrid grid;
    RationalityModel model;
    SolverOptions options;
    QFunction q;
    std::vector<std::uint32_t> robot_policy;  // [t][s][g]
    SolveReport report;

    std::size_t robot_action(int t, std::size_t s, std::size_t g) const {
        return robot_policy[(static_cast<std::size_t>(t) * q.num_states() + s) * grid.size() + g];
    }
};

/// Backward sweep t = horizon−1 … 0 over every (s, g). Each cell's fixed
/// point is iterated from the full-information Q at (t, s), i.e. from a human
/// who plays as if the robot already knew θ. Starting from Q(t + 1) instead
/// lets all-tied rows survive under the rational model, and the tie-broken
/// human then never reveals anything.
CirlSolution solve_cirl(std::shared_ptr<const GameSpec> spec, const BeliefGrid& grid, const RationalityModel& model,
                        const SolverOptions& options = {});

/// Finite-horizon backup with θ known to both agents. With `only` set, the
/// other objectives' slices are left at zero.
FullInfoQ solve_full_info(const GameSpec& spec, const RationalityModel& model);
FullInfoQ solve_full_info(const GameSpec& spec, ObjectiveId only, const RationalityModel& model);

/// Robot best response in the full-information game for objective θ.
std::size_t full_info_robot_action(const GameSpec& spec, const LegalSets& legal, const FullInfoQ& q,
                                   const RationalityModel& model, int t, std::size_t s, std::size_t theta);

/// Literal (standard IRL) robot: plans over its belief, but interprets the
/// human through the exogenous full-information likelihood.
struct LiteralSolution {
    std::shared_ptr<const GameSpec> spec;
    BeliefGrid grid;
    RationalityModel model;
    FullInfoQ full;
    QFunction values;                         // same layout as QFunction
    std::vector<std::uint32_t> robot_policy;  // [t][s][g]
    SolveReport report;

    std::size_t robot_action(int t, std::size_t s, std::size_t g) const {
        return robot_policy[(static_cast<std::size_t>(t) * values.num_states() + s) * grid.size() + g];
    }
};

LiteralSolution literal_robot_policy(std::shared_ptr<const GameSpec> spec, const BeliefGrid& grid,
                                     FullInfoQ full, const RationalityModel& model, const SolverOptions& options = {});

/// Convenience: solve_full_info followed by literal_robot_policy.
LiteralSolution solve_literal(std::shared_ptr<const GameSpec> spec, const BeliefGrid& grid,
                              const RationalityModel& model, const SolverOptions& options = {});

/// Model-predicted value of the team at turn 0 from (s, b): the robot plays
/// its policy at the projected grid point and the human follows the model policy.
/// Per objective, then prior-weighted by `b`.
struct StartValue {
    std::vector<double> per_objective;
    double expected = 0.0;
};
StartValue start_value(const CirlSolution& sol, std::size_t s, const Belief& b);

}  // namespace cirl
