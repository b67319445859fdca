#include "cirl/evaluator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "cirl/game_io.hpp"
#include "parallel.hpp"

namespace cirl {

using nlohmann::json;

namespace {

constexpr std::uint64_t kWorldStream = 0;
constexpr std::uint64_t kHumanStream = 1;

std::span<const double> table_row(const QTable& q, std::span<const double> cell, std::size_t a_r, std::size_t theta) {
    return cell.subspan(q.offset_in_cell(0, a_r, theta), q.num_human_actions());
}

void gathered_policy(std::span<const double> dense_row, const std::vector<std::size_t>& legal,
                     const RationalityModel& model, std::span<double> out) {
    std::vector<double> q(legal.size());
    for (std::size_t j = 0; j < legal.size(); ++j) q[j] = dense_row[legal[j]];
    boltzmann_policy_into(q, model, out);
}

/// How the robot of a condition acts and interprets.
struct RobotView {
    const Solutions& sol;
    RobotKind kind;

    const BeliefGrid& grid() const {
        return kind == RobotKind::CirlPragmatic ? sol.cirl->grid : sol.literal->grid;
    }

    std::size_t act(int t, std::size_t s, std::span<const double> belief) const {
        const auto g = grid().project(belief);
        return kind == RobotKind::CirlPragmatic ? sol.cirl->robot_action(t, s, g) : sol.literal->robot_action(t, s, g);
    }

    /// likelihood[θ * |legal| + j] = the robot's model of π_H(a_H_j | θ).
    void likelihood(int t, std::size_t s, std::span<const double> belief, std::size_t a_r,
                    const std::vector<std::size_t>& legal, std::vector<double>& out) const {
        const auto& spec = *sol.spec;
        const std::size_t nt = spec.num_objectives(), lh = legal.size();
        out.resize(nt * lh);
        if (kind == RobotKind::CirlPragmatic) {
            const auto g = grid().project(belief);
            const auto cell = sol.cirl->q.cell(t, s, g);
            for (std::size_t th = 0; th < nt; ++th)
                gathered_policy(table_row(sol.cirl->q, cell, a_r, th), legal, sol.cirl->model, {out.data() + th * lh, lh});
        } else {
            const auto& full = sol.literal->full;
            const auto cell = full.cell(t, s);
            for (std::size_t th = 0; th < nt; ++th)
                gathered_policy(table_row(full, cell, a_r, th), legal, sol.literal->model, {out.data() + th * lh, lh});
        }
    }
};

/// Policy of a modelled human who knows θ and sees the robot's belief and action.
std::vector<double> model_human_policy(const Solutions& sol, HumanKind kind, int t, std::size_t s,
                                       std::span<const double> robot_belief, std::size_t a_r, std::size_t theta,
                                       const std::vector<std::size_t>& legal) {
    std::vector<double> p(legal.size());
    if (kind == HumanKind::Pedagogic) {
        const auto& q = sol.cirl->q;
        const auto g = sol.cirl->grid.project(robot_belief);
        gathered_policy(table_row(q, q.cell(t, s, g), a_r, theta), legal, sol.cirl->model, p);
    } else if (kind == HumanKind::Expert) {
        const auto& full = sol.literal->full;
        gathered_policy(table_row(full, full.cell(t, s), a_r, theta), legal, sol.literal->model, p);
    } else {
        throw UsageError("a scripted human has no model policy");
    }
    return p;
}

void update_belief(std::vector<double>& belief, const std::vector<double>& likelihood, std::size_t j, std::size_t lh) {
    const std::size_t nt = belief.size();
    std::vector<double> lik(nt), post(nt);
    for (std::size_t th = 0; th < nt; ++th) lik[th] = likelihood[th * lh + j];
    // Zero-likelihood observations leave the belief in place, as in the solver.
    if (bayes_update_into(belief, lik, post)) belief = std::move(post);
}

json vec_json(const std::vector<double>& v) { return json(v); }

}  // namespace

const char* to_string(RobotKind kind) {
    return kind == RobotKind::CirlPragmatic ? "cirl-pragmatic" : "irl-literal";
}

const char* to_string(HumanKind kind) {
    switch (kind) {
        case HumanKind::Pedagogic: return "pedagogic";
        case HumanKind::Expert: return "expert";
        case HumanKind::Scripted: return "scripted";
    }
    return "scripted";
}

RobotKind robot_kind_from_string(const std::string& s) {
    if (s == "cirl-pragmatic" || s == "cirl") return RobotKind::CirlPragmatic;
    if (s == "irl-literal" || s == "irl") return RobotKind::IrlLiteral;
    throw UsageError("unknown robot kind '" + s + "'");
}

HumanKind human_kind_from_string(const std::string& s) {
    if (s == "pedagogic") return HumanKind::Pedagogic;
    if (s == "expert") return HumanKind::Expert;
    if (s == "scripted") return HumanKind::Scripted;
    throw UsageError("unknown human kind '" + s + "'");
}

json Condition::to_json() const {
    json j = {{"robot", to_string(robot)},
              {"human", to_string(human)},
              {"model", model.label()},
              {"epsilon", model.epsilon},
              {"standard_pairing", standard_pairing()}};
    if (!scenario.empty()) j["scenario"] = scenario;
    return j;
}

const RationalityModel& Solutions::model() const {
    if (cirl) return cirl->model;
    if (literal) return literal->model;
    throw UsageError("no solution tables loaded");
}

void Solutions::require(const Condition& c) const {
    if (!spec) throw UsageError("solutions carry no game spec");
    const bool need_cirl = c.robot == RobotKind::CirlPragmatic || c.human == HumanKind::Pedagogic;
    const bool need_literal = c.robot == RobotKind::IrlLiteral || c.human == HumanKind::Expert;
    if (need_cirl && !cirl) throw UsageError("condition needs the pragmatic-pedagogic solution, which is missing");
    if (need_literal && !literal) throw UsageError("condition needs the literal/full-information solution, which is missing");
    if (cirl && cirl->model != c.model && need_cirl) throw UsageError("pragmatic solution was solved under another model");
    if (literal && literal->model != c.model && need_literal)
        throw UsageError("literal solution was solved under another model");
}

std::string EpisodeTrace::to_jsonl(const GameSpec& spec) const {
    std::ostringstream out;
    json header = {{"type", "header"},
                   {"condition", condition.to_json()},
                   {"seed", seed},
                   {"true_objective", spec.objectives.at(true_objective)},
                   {"objectives", spec.objectives}};
    out << header.dump() << '\n';
    for (const auto& r : turns) {
        json line = {{"type", "turn"},
                     {"t", r.t},
                     {"state", r.state},
                     {"state_label", spec.states.at(r.state)},
                     {"belief", vec_json(r.belief)},
                     {"robot_action", spec.robot_actions.at(r.robot_action)},
                     {"human_action", spec.human_actions.at(r.human_action)},
                     {"rewards", vec_json(r.rewards)}};
        out << line.dump() << '\n';
    }
    json result = {{"type", "result"},
                   {"final_state", spec.states.at(final_state)},
                   {"final_belief", vec_json(final_belief)},
                   {"finished", finished},
                   {"success", success}};
    out << result.dump() << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------

EpisodeRunner::EpisodeRunner(const Solutions& solutions, const Condition& condition, std::size_t true_objective,
                             std::uint64_t seed, bool record_trace)
    : sol_(solutions),
      condition_(condition),
      theta_(true_objective),
      world_rng_(derive_seed(seed, kWorldStream)),
      human_rng_(derive_seed(seed, kHumanStream)),
      record_(record_trace) {
    sol_.require(condition_);
    const auto& spec = *sol_.spec;
    if (theta_ >= spec.num_objectives()) throw UsageError("true objective out of range");

    std::vector<double> w(spec.num_states());
    for (std::size_t s = 0; s < w.size(); ++s) w[s] = spec.prior_at(s, theta_);
    state_ = sample_index(w, world_rng_);
    belief_ = objective_posterior_given_state(spec, state_);

    trace_.condition = condition_;
    trace_.seed = seed;
    trace_.true_objective = theta_;
    trace_.final_state = state_;
    trace_.final_belief = belief_;
    if (spec.is_terminal(state_)) finished_ = trace_.finished = true;
    else propose();
}

void EpisodeRunner::propose() {
    pending_robot_action_ = RobotView{sol_, condition_.robot}.act(t_, state_, belief_);
}

std::vector<std::size_t> EpisodeRunner::legal_human_actions() const {
    return legal_actions(*sol_.spec, StateId{state_}, Actor::Human);
}

std::vector<double> EpisodeRunner::human_policy() const {
    if (finished_) throw UsageError("episode is finished");
    return model_human_policy(sol_, condition_.human, t_, state_, belief_, pending_robot_action_, theta_,
                              legal_human_actions());
}

std::size_t EpisodeRunner::sample_human_action() {
    const auto legal = legal_human_actions();
    const auto p = human_policy();
    return legal[sample_index(p, human_rng_)];
}

void EpisodeRunner::advance(std::size_t a_h) {
    if (finished_) throw UsageError("episode is finished");
    const auto& spec = *sol_.spec;
    const auto legal = legal_human_actions();
    const auto it = std::find(legal.begin(), legal.end(), a_h);
    if (it == legal.end()) throw UsageError("human action is not legal in the current state");
    const std::size_t j = static_cast<std::size_t>(it - legal.begin());
    const std::size_t a_r = pending_robot_action_;

    std::vector<double> likelihood;
    RobotView{sol_, condition_.robot}.likelihood(t_, state_, belief_, a_r, legal, likelihood);

    if (record_) trace_.turns.push_back({t_, state_, belief_, a_r, a_h, {}});
    auto stepped = step(spec, StateId{state_}, HumanActionId{a_h}, RobotActionId{a_r}, world_rng_);
    if (stepped.rewards[theta_] > 0.0) success_ = true;
    if (record_) trace_.turns.back().rewards = std::move(stepped.rewards);

    update_belief(belief_, likelihood, j, legal.size());
    state_ = stepped.next.value;
    ++t_;

    trace_.final_state = state_;
    trace_.final_belief = belief_;
    trace_.success = success_;
    if (t_ >= spec.horizon || spec.is_terminal(state_)) {
        finished_ = trace_.finished = true;
    } else {
        propose();
    }
}

EpisodeTrace simulate_episode(const Condition& condition, const Solutions& solutions, std::size_t true_objective,
                              std::uint64_t seed, std::span<const std::size_t> script) {
    EpisodeRunner runner(solutions, condition, true_objective, seed);
    std::size_t k = 0;
    while (!runner.finished()) {
        if (condition.human == HumanKind::Scripted) {
            if (k >= script.size()) break;
            runner.advance(script[k++]);
        } else {
            runner.advance(runner.sample_human_action());
        }
    }
    return runner.trace();
}

// ---------------------------------------------------------------------------

namespace {

struct Enumerator {
    const Solutions& sol;
    const Condition& cond;
    const LegalSets& legal;
    std::size_t theta;
    double prune;
    double value = 0.0, success = 0.0, leaf_mass = 0.0, pruned = 0.0;

    void visit(int t, std::size_t s, const std::vector<double>& belief, double prob, double ret, double discount_now,
               bool got) {
        const auto& spec = *sol.spec;
        if (t >= spec.horizon || spec.is_terminal(s)) {
            leaf_mass += prob;
            value += prob * ret;
            if (got) success += prob;
            return;
        }
        const RobotView robot{sol, cond.robot};
        const auto a_r = robot.act(t, s, belief);
        const auto& lh = legal.human[s];
        const auto p = model_human_policy(sol, cond.human, t, s, belief, a_r, theta, lh);
        std::vector<double> likelihood;
        robot.likelihood(t, s, belief, a_r, lh, likelihood);
        for (std::size_t j = 0; j < lh.size(); ++j) {
            const double branch = prob * p[j];
            if (branch < prune) {
                pruned += branch;
                continue;
            }
            auto next_belief = belief;
            update_belief(next_belief, likelihood, j, lh.size());
            const auto& row = spec.row(s, lh[j], a_r);
            const double r = spec.reward_at(s, lh[j], a_r, theta);
            visit(t + 1, row.front().next, next_belief, branch, ret + discount_now * r, discount_now * spec.discount,
                  got || r > 0.0);
        }
    }
};

}  // namespace

ExactValue expected_value_exact(const Condition& condition, const Solutions& solutions, double prune_below) {
    solutions.require(condition);
    if (condition.human == HumanKind::Scripted) throw UsageError("exact evaluation needs a modelled human");
    const auto& spec = *solutions.spec;
    if (!spec.is_deterministic())
        throw UsageError("transition measure is stochastic; exact enumeration unavailable, use Monte Carlo");
    const LegalSets legal(spec);
    const std::size_t nt = spec.num_objectives();

    ExactValue out;
    out.per_objective.assign(nt, 0.0);
    out.success_per_objective.assign(nt, 0.0);
    std::vector<ExactValue> partial(nt);
    detail::parallel_for(nt, 0, [&](std::size_t th) {
        double mass = 0.0;
        for (std::size_t s = 0; s < spec.num_states(); ++s) mass += spec.prior_at(s, th);
        if (!(mass > 0.0)) return;
        Enumerator e{solutions, condition, legal, th, prune_below};
        for (std::size_t s = 0; s < spec.num_states(); ++s) {
            const double w = spec.prior_at(s, th);
            if (w <= 0.0) continue;
            e.visit(0, s, objective_posterior_given_state(spec, s), w / mass, 0.0, 1.0, false);
        }
        auto& p = partial[th];
        p.total = e.value;
        p.success = e.success;
        p.leaf_mass = e.leaf_mass;
        p.pruned_mass = e.pruned;
    });
    for (std::size_t th = 0; th < nt; ++th) {
        double mass = 0.0;
        for (std::size_t s = 0; s < spec.num_states(); ++s) mass += spec.prior_at(s, th);
        out.per_objective[th] = partial[th].total;
        out.success_per_objective[th] = partial[th].success;
        out.total += mass * partial[th].total;
        out.success += mass * partial[th].success;
        out.leaf_mass += mass * partial[th].leaf_mass;
        out.pruned_mass += mass * partial[th].pruned_mass;
    }
    return out;
}

MonteCarloValue expected_value_monte_carlo(const Condition& condition, const Solutions& solutions,
                                           std::size_t episodes, std::uint64_t seed, unsigned threads) {
    solutions.require(condition);
    if (condition.human == HumanKind::Scripted) throw UsageError("Monte Carlo evaluation needs a modelled human");
    if (episodes == 0) throw UsageError("need at least one episode");
    const auto& spec = *solutions.spec;
    std::vector<double> theta_weights(spec.num_objectives(), 0.0);
    for (std::size_t s = 0; s < spec.num_states(); ++s)
        for (std::size_t th = 0; th < spec.num_objectives(); ++th) theta_weights[th] += spec.prior_at(s, th);

    std::vector<double> returns(episodes);
    detail::parallel_for(episodes, threads, [&](std::size_t i) {
        const auto episode_seed = derive_seed(seed, i);
        Rng pick(derive_seed(episode_seed, 7));
        const auto theta = sample_index(theta_weights, pick);
        EpisodeRunner runner(solutions, condition, theta, episode_seed, false);
        double ret = 0.0, disc = 1.0;
        while (!runner.finished()) {
            const auto s = runner.state();
            const auto a_r = runner.robot_action();
            const auto a_h = runner.sample_human_action();
            ret += disc * spec.reward_at(s, a_h, a_r, theta);
            disc *= spec.discount;
            runner.advance(a_h);
        }
        returns[i] = ret;
    });

    // Pairwise summation keeps the aggregate independent of episode order.
    auto pairwise = [](auto&& self, std::span<const double> v) -> double {
        if (v.size() <= 8) {
            double s = 0.0;
            for (double x : v) s += x;
            return s;
        }
        const auto half = v.size() / 2;
        return self(self, v.first(half)) + self(self, v.subspan(half));
    };
    MonteCarloValue mc;
    mc.episodes = episodes;
    mc.mean = pairwise(pairwise, returns) / static_cast<double>(episodes);
    std::vector<double> sq(episodes);
    for (std::size_t i = 0; i < episodes; ++i) sq[i] = (returns[i] - mc.mean) * (returns[i] - mc.mean);
    mc.sample_variance = episodes > 1 ? pairwise(pairwise, sq) / static_cast<double>(episodes - 1) : 0.0;
    mc.standard_error = std::sqrt(mc.sample_variance / static_cast<double>(episodes));
    return mc;
}

// ---------------------------------------------------------------------------

const BenchmarkCell& BenchmarkReport::cell(RobotKind robot, const RationalityModel& model) const {
    for (const auto& c : cells)
        if (c.condition.robot == robot && c.condition.model == model) return c;
    throw UsageError("benchmark has no cell for " + std::string(to_string(robot)) + " / " + model.label());
}

json BenchmarkReport::to_json() const {
    json rows = json::array();
    for (auto robot : {RobotKind::IrlLiteral, RobotKind::CirlPragmatic}) {
        json row = {{"robot", to_string(robot)}, {"cells", json::array()}};
        bool any = false;
        for (const auto& c : cells) {
            if (c.condition.robot != robot) continue;
            any = true;
            json jc = {{"condition", c.condition.to_json()},
                       {"value", c.exact.total},
                       {"success_probability", c.exact.success},
                       {"per_objective", c.exact.per_objective},
                       {"pruned_mass", c.exact.pruned_mass},
                       {"non_converged_cells", c.non_converged_cells}};
            if (c.monte_carlo)
                jc["monte_carlo"] = {{"mean", c.monte_carlo->mean},
                                     {"standard_error", c.monte_carlo->standard_error},
                                     {"episodes", c.monte_carlo->episodes}};
            row["cells"].push_back(std::move(jc));
        }
        if (any) rows.push_back(std::move(row));
    }
    json cols = json::array();
    for (const auto& m : models) cols.push_back(m.label());
    return {{"format_version", 1}, {"columns", cols}, {"rows", rows}, {"config", config}};
}

std::string BenchmarkReport::to_text() const {
    std::ostringstream out;
    out << std::left << std::setw(16) << "";
    for (const auto& m : models) out << std::right << std::setw(14) << (m.is_rational() ? "Rational" : m.label());
    out << '\n';
    for (auto robot : {RobotKind::IrlLiteral, RobotKind::CirlPragmatic}) {
        bool any = std::any_of(cells.begin(), cells.end(), [&](const auto& c) { return c.condition.robot == robot; });
        if (!any) continue;
        out << std::left << std::setw(16) << (robot == RobotKind::IrlLiteral ? "IRL" : "CIRL");
        for (const auto& m : models) {
            std::ostringstream v;
            v << std::fixed << std::setprecision(4) << cell(robot, m).exact.total;
            out << std::right << std::setw(14) << v.str();
        }
        out << '\n';
    }
    if (config.contains("grid_resolution"))
        out << "grid m=" << config["grid_resolution"] << ", horizon=" << config.value("horizon", 0)
            << ", config " << config.value("hash", std::string{}) << '\n';
    return out.str();
}

BenchmarkReport run_benchmark(std::shared_ptr<const GameSpec> spec, const std::vector<RationalityModel>& models,
                              const BenchmarkOptions& options) {
    if (!spec) throw UsageError("run_benchmark: null spec");
    require_valid(*spec);
    const auto m = options.grid_resolution ? options.grid_resolution
                                           : BeliefGrid::default_resolution(spec->num_objectives());
    const BeliefGrid grid(spec->num_objectives(), m);

    BenchmarkReport report;
    report.models = models;
    json model_labels = json::array();
    for (const auto& md : models) model_labels.push_back({{"model", md.label()}, {"epsilon", md.epsilon}});
    report.config = {{"grid_resolution", m},
                     {"horizon", spec->horizon},
                     {"discount", spec->discount},
                     {"models", model_labels},
                     {"solver", options.solver.to_json()},
                     {"monte_carlo_episodes", options.monte_carlo_episodes},
                     {"seed", options.seed}};
    report.config["hash"] = json_hash(report.config);

    std::vector<BenchmarkCell> irl_cells, cirl_cells;
    for (const auto& model : models) {
        auto t0 = std::chrono::steady_clock::now();
        Solutions sol{spec,
                      std::make_shared<const CirlSolution>(solve_cirl(spec, grid, model, options.solver)),
                      nullptr};
        const double cirl_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        t0 = std::chrono::steady_clock::now();
        sol.literal = std::make_shared<const LiteralSolution>(solve_literal(spec, grid, model, options.solver));
        const double irl_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        for (auto robot : {RobotKind::IrlLiteral, RobotKind::CirlPragmatic}) {
            BenchmarkCell cell;
            cell.condition = robot == RobotKind::CirlPragmatic ? Condition::cirl(model) : Condition::irl(model);
            cell.exact = expected_value_exact(cell.condition, sol);
            if (options.monte_carlo_episodes > 0)
                cell.monte_carlo = expected_value_monte_carlo(cell.condition, sol, options.monte_carlo_episodes,
                                                              options.seed, options.solver.threads);
            cell.non_converged_cells = robot == RobotKind::CirlPragmatic ? sol.cirl->report.non_converged.size()
                                                                         : sol.literal->report.non_converged.size();
            cell.solve_seconds = robot == RobotKind::CirlPragmatic ? cirl_secs : irl_secs;
            (robot == RobotKind::CirlPragmatic ? cirl_cells : irl_cells).push_back(std::move(cell));
        }
    }
    for (auto& c : irl_cells) report.cells.push_back(std::move(c));
    for (auto& c : cirl_cells) report.cells.push_back(std::move(c));
    return report;
}

std::vector<std::string> check_expected_ordering(const BenchmarkReport& report) {
    std::vector<std::string> failures;
    auto fmt = [](double v) {
        std::ostringstream os;
        os << std::setprecision(6) << v;
        return os.str();
    };
    std::optional<double> prev_cirl;
    std::string prev_label;
    for (const auto& model : report.models) {
        const double cirl = report.cell(RobotKind::CirlPragmatic, model).exact.total;
        const double irl = report.cell(RobotKind::IrlLiteral, model).exact.total;
        if (model.is_rational()) {
            if (std::abs(cirl - 1.0) > 1e-6) failures.push_back("rational CIRL value " + fmt(cirl) + " is not 1");
            if (!(irl < 1.0)) failures.push_back("rational IRL value " + fmt(irl) + " is not below 1");
        } else {
            if (cirl < irl) failures.push_back(model.label() + ": CIRL " + fmt(cirl) + " < IRL " + fmt(irl));
            if (model.beta >= 2.5 && cirl - irl < 0.05)
                failures.push_back(model.label() + ": CIRL margin " + fmt(cirl - irl) + " below 0.05");
        }
        if (prev_cirl && cirl < *prev_cirl)
            failures.push_back("CIRL decreases from " + prev_label + " to " + model.label());
        prev_cirl = cirl;
        prev_label = model.label();
    }
    return failures;
}

}  // namespace cirl
