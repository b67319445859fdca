#include "cirl/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>

#include "parallel.hpp"

namespace cirl {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxHumanActions = 64;

/// π_H over the legal human actions of a row.
void legal_policy(std::span<const double> dense_row, std::span<const std::size_t> legal_human,
                  const RationalityModel& model, std::span<double> out) {
    double gathered[kMaxHumanActions];
    for (std::size_t j = 0; j < legal_human.size(); ++j) gathered[j] = dense_row[legal_human[j]];
    boltzmann_policy_into({gathered, legal_human.size()}, model, out);
}

CellView view_of(std::span<const double> cell, const QTable& table, const LegalSets& legal, std::size_t s) {
    return CellView{cell, table.num_objectives(), table.num_human_actions(), legal.human[s], legal.robot[s]};
}

void check_inputs(const GameSpec& spec, const BeliefGrid& grid, const RationalityModel& model) {
    require_valid(spec);
    if (grid.dimension() != spec.num_objectives()) throw UsageError("belief grid dimension differs from |Θ|");
    if (spec.num_human_actions() > kMaxHumanActions) throw UsageError("too many human actions");
    model.check(spec.num_human_actions());
}

/// Evaluates the backup map for one robot action. `policy` holds
/// π_H(a_H_j | θ) as [θ][j]; F receives [θ][j].
void evaluate_map(const BackupContext& ctx, std::size_t s, std::size_t a_r, std::span<const double> belief,
                  const Continuation& next, std::span<const double> policy, std::span<double> F) {
    const auto& legal_h = ctx.legal.human[s];
    const std::size_t nt = ctx.spec.num_objectives(), lh = legal_h.size();
    const double gamma = ctx.spec.discount;
    double lik[kMaxHumanActions], post[kMaxHumanActions];
    std::vector<double> lik_heap, post_heap;
    double* L = lik;
    double* P = post;
    if (nt > kMaxHumanActions) {
        lik_heap.resize(nt);
        post_heap.resize(nt);
        L = lik_heap.data();
        P = post_heap.data();
    }
    for (std::size_t j = 0; j < lh; ++j) {
        const auto a_h = legal_h[j];
        for (std::size_t th = 0; th < nt; ++th) L[th] = policy[th * lh + j];
        std::span<const double> posterior = belief;
        // An action no supported θ would take leaves the belief where it was.
        if (bayes_update_into(belief, {L, nt}, {P, nt})) posterior = {P, nt};
        const auto g_next = ctx.grid.project(posterior);
        const auto& row = ctx.spec.row(s, a_h, a_r);
        for (std::size_t th = 0; th < nt; ++th) {
            double cont = 0.0;
            if (gamma != 0.0)
                for (const auto& o : row) cont += o.probability * next.at(o.next, g_next)[th];
            F[th * lh + j] = ctx.spec.reward_at(s, a_h, a_r, th) + gamma * cont;
        }
    }
}

}  // namespace

json SolverOptions::to_json() const {
    return {{"tol_fp", tol_fp}, {"max_iter", max_iter}, {"damping", damping}};
}

LegalSets::LegalSets(const GameSpec& spec) {
    for (std::size_t s = 0; s < spec.num_states(); ++s) {
        human.push_back(legal_actions(spec, StateId{s}, Actor::Human));
        robot.push_back(legal_actions(spec, StateId{s}, Actor::Robot));
    }
}

QTable::QTable(int horizon, std::size_t states, std::size_t grid_points, std::size_t robot_actions,
               std::size_t objectives, std::size_t human_actions)
    : horizon_(horizon),
      states_(states),
      grid_(grid_points),
      robot_(robot_actions),
      objectives_(objectives),
      human_(human_actions),
      values_(static_cast<std::size_t>(horizon) * states * grid_points * robot_actions * objectives * human_actions,
              0.0) {}

double robot_action_value(const CellView& values, const CellView& policy_source, std::size_t a_r,
                          std::span<const double> belief, const RationalityModel& model) {
    const std::size_t lh = values.legal_human.size();
    double pol[kMaxHumanActions];
    double total = 0.0;
    for (std::size_t th = 0; th < values.num_objectives; ++th) {
        if (belief[th] == 0.0) continue;
        legal_policy(policy_source.human_row(a_r, th), values.legal_human, model, {pol, lh});
        const auto q = values.human_row(a_r, th);
        double inner = 0.0;
        for (std::size_t j = 0; j < lh; ++j) inner += pol[j] * q[values.legal_human[j]];
        total += belief[th] * inner;
    }
    return total;
}

RobotActionId robot_best_response(const CellView& values, const CellView& policy_source, std::span<const double> belief,
                                  const RationalityModel& model) {
    if (values.legal_robot.empty()) throw UsageError("no legal robot action");
    if (values.legal_robot.size() == 1) return RobotActionId{values.legal_robot.front()};
    double scores[kMaxHumanActions * 4];
    std::vector<double> heap;
    double* S = scores;
    if (values.legal_robot.size() > std::size(scores)) {
        heap.resize(values.legal_robot.size());
        S = heap.data();
    }
    for (std::size_t k = 0; k < values.legal_robot.size(); ++k)
        S[k] = robot_action_value(values, policy_source, values.legal_robot[k], belief, model);
    return RobotActionId{values.legal_robot[tie_broken_argmax({S, values.legal_robot.size()})]};
}

RobotActionId robot_best_response(const CellView& q_cell, const Belief& b, const RationalityModel& model) {
    if (b.size() != q_cell.num_objectives) throw UsageError("belief size differs from the cell's objective count");
    return robot_best_response(q_cell, q_cell, b.weights(), model);
}

Continuation Continuation::terminal(std::size_t states, std::size_t grid_points, std::size_t objectives) {
    Continuation c;
    c.num_states = states;
    c.num_grid_points = grid_points;
    c.num_objectives = objectives;
    c.value.assign(states * grid_points * objectives, 0.0);
    c.robot_action.assign(states * grid_points, 0);
    return c;
}

Continuation make_continuation(const GameSpec& spec, const LegalSets& legal, const BeliefGrid& grid,
                               const RationalityModel& model, const QFunction& q, int t, const FullInfoQ* policy_source) {
    const std::size_t ns = spec.num_states(), ng = grid.size(), nt = spec.num_objectives();
    auto c = Continuation::terminal(ns, ng, nt);
    detail::parallel_for(ns * ng, 0, [&](std::size_t idx) {
        const std::size_t s = idx / ng, g = idx % ng;
        const auto values = view_of(q.cell(t, s, g), q, legal, s);
        const auto source = policy_source ? view_of(policy_source->cell(t, s), *policy_source, legal, s) : values;
        const auto a_r = robot_best_response(values, source, grid.point(g), model).value;
        c.robot_action[idx] = static_cast<std::uint32_t>(a_r);
        const auto& lh = legal.human[s];
        double pol[kMaxHumanActions];
        for (std::size_t th = 0; th < nt; ++th) {
            legal_policy(source.human_row(a_r, th), lh, model, {pol, lh.size()});
            const auto row = values.human_row(a_r, th);
            double v = 0.0;
            for (std::size_t j = 0; j < lh.size(); ++j) v += pol[j] * row[lh[j]];
            c.value[idx * nt + th] = v;
        }
    });
    return c;
}

CellBackup backup_cell(const BackupContext& ctx, std::size_t s, std::size_t g, const Continuation& next,
                       std::span<const double> warm_start) {
    const std::size_t nt = ctx.spec.num_objectives(), nh = ctx.spec.num_human_actions();
    const auto& legal_h = ctx.legal.human[s];
    const std::size_t lh = legal_h.size();
    const auto belief = ctx.grid.point(g);
    const double keep = ctx.options.damping;

    CellBackup out;
    out.values.assign(ctx.spec.num_robot_actions() * nt * nh, 0.0);
    std::vector<double> x(nt * lh), F(nt * lh), policy(nt * lh);

    for (auto a_r : ctx.legal.robot[s]) {
        for (std::size_t th = 0; th < nt; ++th)
            for (std::size_t j = 0; j < lh; ++j) x[th * lh + j] = warm_start[(a_r * nt + th) * nh + legal_h[j]];

        int it = 0;
        double delta = 0.0;
        bool converged = false;
        while (it < ctx.options.max_iter) {
            ++it;
            for (std::size_t th = 0; th < nt; ++th)
                boltzmann_policy_into({x.data() + th * lh, lh}, ctx.model, {policy.data() + th * lh, lh});
            evaluate_map(ctx, s, a_r, belief, next, policy, F);
            delta = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double updated = keep * x[i] + (1.0 - keep) * F[i];
                delta = std::max(delta, std::abs(updated - x[i]));
                x[i] = updated;
            }
            if (delta < ctx.options.tol_fp) {
                converged = true;
                break;
            }
        }
        for (std::size_t th = 0; th < nt; ++th)
            for (std::size_t j = 0; j < lh; ++j) out.values[(a_r * nt + th) * nh + legal_h[j]] = x[th * lh + j];
        out.residual = std::max(out.residual, delta);
        out.iterations = std::max(out.iterations, it);
        out.converged = out.converged && converged;
    }
    return out;
}

std::vector<double> apply_backup_map(const BackupContext& ctx, std::size_t s, std::size_t g, const Continuation& next,
                                     std::span<const double> q) {
    const std::size_t nt = ctx.spec.num_objectives(), nh = ctx.spec.num_human_actions();
    const auto& legal_h = ctx.legal.human[s];
    const std::size_t lh = legal_h.size();
    std::vector<double> out(q.begin(), q.end()), x(nt * lh), F(nt * lh), policy(nt * lh);
    for (auto a_r : ctx.legal.robot[s]) {
        for (std::size_t th = 0; th < nt; ++th)
            for (std::size_t j = 0; j < lh; ++j) x[th * lh + j] = q[(a_r * nt + th) * nh + legal_h[j]];
        for (std::size_t th = 0; th < nt; ++th)
            boltzmann_policy_into({x.data() + th * lh, lh}, ctx.model, {policy.data() + th * lh, lh});
        evaluate_map(ctx, s, a_r, ctx.grid.point(g), next, policy, F);
        for (std::size_t th = 0; th < nt; ++th)
            for (std::size_t j = 0; j < lh; ++j) out[(a_r * nt + th) * nh + legal_h[j]] = F[th * lh + j];
    }
    return out;
}

CellBackup backup_cell(int t, std::size_t s, std::size_t g, const GameSpec& spec, const BeliefGrid& grid,
                       const RationalityModel& model, const QFunction& next_q, const SolverOptions& options) {
    check_inputs(spec, grid, model);
    if (t < 0 || t >= spec.horizon) throw UsageError("backup_cell: turn out of range");
    if (s >= spec.num_states() || g >= grid.size()) throw UsageError("backup_cell: cell index out of range");
    const LegalSets legal(spec);
    const BackupContext ctx{spec, legal, grid, model, options};
    const auto next = (t + 1 >= spec.horizon)
                          ? Continuation::terminal(spec.num_states(), grid.size(), spec.num_objectives())
                          : make_continuation(spec, legal, grid, model, next_q, t + 1);
    const auto full = solve_full_info(spec, model);
    return backup_cell(ctx, s, g, next, full.cell(t, s));
}

json SolveReport::to_json() const {
    json nc = json::array();
    for (const auto& c : non_converged) nc.push_back({{"t", c.t}, {"s", c.s}, {"g", c.g}, {"residual", c.residual}});
    std::size_t max_iter = 0, total = 0;
    for (auto it : iterations) {
        max_iter = std::max<std::size_t>(max_iter, it);
        total += it;
    }
    return {{"sweep_max_residual", sweep_max_residual},
            {"cells", iterations.size()},
            {"converged_cells", converged_cells()},
            {"non_converged", nc},
            {"max_iterations", max_iter},
            {"mean_iterations", iterations.empty() ? 0.0 : static_cast<double>(total) / iterations.size()},
            {"config", config}};
}

CirlSolution solve_cirl(std::shared_ptr<const GameSpec> spec_ptr, const BeliefGrid& grid, const RationalityModel& model,
                        const SolverOptions& options) {
    if (!spec_ptr) throw UsageError("solve_cirl: null spec");
    const auto& spec = *spec_ptr;
    check_inputs(spec, grid, model);
    const auto started = std::chrono::steady_clock::now();

    const int H = spec.horizon;
    const std::size_t ns = spec.num_states(), ng = grid.size(), nt = spec.num_objectives();
    const LegalSets legal(spec);
    const BackupContext ctx{spec, legal, grid, model, options};

    CirlSolution sol{spec_ptr, grid, model, options, QFunction(H, ns, ng, spec.num_robot_actions(), nt,
                                                               spec.num_human_actions()),
                     {}, {}};
    sol.robot_policy.assign(static_cast<std::size_t>(H) * ns * ng, 0);
    auto& report = sol.report;
    report.sweep_max_residual.assign(H, 0.0);
    report.iterations.assign(static_cast<std::size_t>(H) * ns * ng, 0);
    report.config = {{"solver", options.to_json()},
                     {"grid_resolution", grid.resolution()},
                     {"model", model.label()},
                     {"epsilon", model.epsilon}};

    const FullInfoQ full = solve_full_info(spec, model);

    auto next = Continuation::terminal(ns, ng, nt);
    std::vector<double> residuals(ns * ng);
    std::vector<std::uint8_t> converged(ns * ng);
    for (int t = H - 1; t >= 0; --t) {
        detail::parallel_for(ns * ng, options.threads, [&](std::size_t idx) {
            const std::size_t s = idx / ng, g = idx % ng;
            auto cell = backup_cell(ctx, s, g, next, full.cell(t, s));
            std::copy(cell.values.begin(), cell.values.end(), sol.q.cell(t, s, g).begin());
            residuals[idx] = cell.residual;
            converged[idx] = cell.converged;
            report.iterations[static_cast<std::size_t>(t) * ns * ng + idx] =
                static_cast<std::uint16_t>(std::min(cell.iterations, 65535));
        });
        double worst = 0.0;
        for (std::size_t idx = 0; idx < ns * ng; ++idx) {
            worst = std::max(worst, residuals[idx]);
            if (!converged[idx]) report.non_converged.push_back({t, idx / ng, idx % ng, residuals[idx]});
        }
        report.sweep_max_residual[t] = worst;
        next = make_continuation(spec, legal, grid, model, sol.q, t);
        std::copy(next.robot_action.begin(), next.robot_action.end(),
                  sol.robot_policy.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(t) * ns * ng));
    }
    report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return sol;
}

std::size_t full_info_robot_action(const GameSpec& spec, const LegalSets& legal, const FullInfoQ& q,
                                   const RationalityModel& model, int t, std::size_t s, std::size_t theta) {
    const auto view = view_of(q.cell(t, s), q, legal, s);
    std::vector<double> point(spec.num_objectives(), 0.0);
    point[theta] = 1.0;
    return robot_best_response(view, view, point, model).value;
}

namespace {

FullInfoQ solve_full_info_impl(const GameSpec& spec, const RationalityModel& model, std::optional<std::size_t> only) {
    require_valid(spec);
    model.check(spec.num_human_actions());
    const int H = spec.horizon;
    const std::size_t ns = spec.num_states(), nt = spec.num_objectives(), nh = spec.num_human_actions(),
                      nr = spec.num_robot_actions();
    const LegalSets legal(spec);
    FullInfoQ q(H, ns, nr, nt, nh);
    std::vector<double> cont(ns * nt, 0.0);  // V(t+1, s'; θ)
    auto wanted = [&](std::size_t th) { return !only || *only == th; };

    for (int t = H - 1; t >= 0; --t) {
        for (std::size_t s = 0; s < ns; ++s) {
            auto cell = q.cell(t, s);
            for (auto ar : legal.robot[s])
                for (auto ah : legal.human[s]) {
                    const auto& row = spec.row(s, ah, ar);
                    for (std::size_t th = 0; th < nt; ++th) {
                        if (!wanted(th)) continue;
                        double c = 0.0;
                        if (spec.discount != 0.0)
                            for (const auto& o : row) c += o.probability * cont[o.next * nt + th];
                        cell[q.offset_in_cell(ah, ar, th)] = spec.reward_at(s, ah, ar, th) + spec.discount * c;
                    }
                }
        }
        for (std::size_t s = 0; s < ns; ++s) {
            const auto view = view_of(q.cell(t, s), q, legal, s);
            const auto& lh = legal.human[s];
            double pol[kMaxHumanActions];
            std::vector<double> point(nt, 0.0);
            for (std::size_t th = 0; th < nt; ++th) {
                if (!wanted(th)) continue;
                std::fill(point.begin(), point.end(), 0.0);
                point[th] = 1.0;
                const auto ar = robot_best_response(view, view, point, model).value;
                legal_policy(view.human_row(ar, th), lh, model, {pol, lh.size()});
                double v = 0.0;
                for (std::size_t j = 0; j < lh.size(); ++j) v += pol[j] * view.human_row(ar, th)[lh[j]];
                cont[s * nt + th] = v;
            }
        }
    }
    return q;
}

}  // namespace

FullInfoQ solve_full_info(const GameSpec& spec, const RationalityModel& model) {
    return solve_full_info_impl(spec, model, std::nullopt);
}

FullInfoQ solve_full_info(const GameSpec& spec, ObjectiveId only, const RationalityModel& model) {
    if (only.value >= spec.num_objectives()) throw UsageError("objective index out of range");
    return solve_full_info_impl(spec, model, only.value);
}

LiteralSolution literal_robot_policy(std::shared_ptr<const GameSpec> spec_ptr, const BeliefGrid& grid, FullInfoQ full,
                                     const RationalityModel& model, const SolverOptions& options) {
    if (!spec_ptr) throw UsageError("literal_robot_policy: null spec");
    const auto& spec = *spec_ptr;
    check_inputs(spec, grid, model);
    if (full.horizon() != spec.horizon || full.num_states() != spec.num_states() ||
        full.num_objectives() != spec.num_objectives())
        throw UsageError("full-information table does not match the spec");
    const auto started = std::chrono::steady_clock::now();

    const int H = spec.horizon;
    const std::size_t ns = spec.num_states(), ng = grid.size(), nt = spec.num_objectives(),
                      nh = spec.num_human_actions();
    const LegalSets legal(spec);
    const BackupContext ctx{spec, legal, grid, model, options};

    LiteralSolution sol{spec_ptr, grid, model, std::move(full),
                        QFunction(H, ns, ng, spec.num_robot_actions(), nt, nh), {}, {}};
    sol.robot_policy.assign(static_cast<std::size_t>(H) * ns * ng, 0);
    sol.report.sweep_max_residual.assign(H, 0.0);
    sol.report.iterations.assign(static_cast<std::size_t>(H) * ns * ng, 1);
    sol.report.config = {{"solver", options.to_json()},
                         {"grid_resolution", grid.resolution()},
                         {"model", model.label()},
                         {"epsilon", model.epsilon},
                         {"robot", "literal"}};

    auto next = Continuation::terminal(ns, ng, nt);
    for (int t = H - 1; t >= 0; --t) {
        detail::parallel_for(ns * ng, options.threads, [&](std::size_t idx) {
            const std::size_t s = idx / ng, g = idx % ng;
            const auto& lh = legal.human[s];
            const auto source = view_of(sol.full.cell(t, s), sol.full, legal, s);
            auto cell = sol.values.cell(t, s, g);
            std::vector<double> policy(nt * lh.size()), F(nt * lh.size());
            for (auto a_r : legal.robot[s]) {
                for (std::size_t th = 0; th < nt; ++th)
                    legal_policy(source.human_row(a_r, th), lh, model, {policy.data() + th * lh.size(), lh.size()});
                evaluate_map(ctx, s, a_r, grid.point(g), next, policy, F);
                for (std::size_t th = 0; th < nt; ++th)
                    for (std::size_t j = 0; j < lh.size(); ++j)
                        cell[sol.values.offset_in_cell(lh[j], a_r, th)] = F[th * lh.size() + j];
            }
        });
        next = make_continuation(spec, legal, grid, model, sol.values, t, &sol.full);
        std::copy(next.robot_action.begin(), next.robot_action.end(),
                  sol.robot_policy.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(t) * ns * ng));
    }
    sol.report.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return sol;
}

LiteralSolution solve_literal(std::shared_ptr<const GameSpec> spec, const BeliefGrid& grid,
                              const RationalityModel& model, const SolverOptions& options) {
    if (!spec) throw UsageError("solve_literal: null spec");
    auto full = solve_full_info(*spec, model);
    return literal_robot_policy(std::move(spec), grid, std::move(full), model, options);
}

StartValue start_value(const CirlSolution& sol, std::size_t s, const Belief& b) {
    const auto& spec = *sol.spec;
    const LegalSets legal(spec);
    const auto g = sol.grid.project(b.weights());
    const auto a_r = sol.robot_action(0, s, g);
    const auto view = view_of(sol.q.cell(0, s, g), sol.q, legal, s);
    const auto& lh = legal.human[s];
    std::vector<double> pol(lh.size());
    StartValue out;
    for (std::size_t th = 0; th < spec.num_objectives(); ++th) {
        legal_policy(view.human_row(a_r, th), lh, sol.model, pol);
        double v = 0.0;
        for (std::size_t j = 0; j < lh.size(); ++j) v += pol[j] * view.human_row(a_r, th)[lh[j]];
        out.per_objective.push_back(v);
        out.expected += b[th] * v;
    }
    return out;
}

}  // namespace cirl
