#include "cirl/game.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cirl {

namespace {

constexpr double kSumTolerance = 1e-9;

std::size_t find_label(const std::vector<std::string>& labels, const std::string& name, const char* what) {
    auto it = std::find(labels.begin(), labels.end(), name);
    if (it == labels.end()) throw UsageError(std::string("unknown ") + what + " '" + name + "'");
    return static_cast<std::size_t>(it - labels.begin());
}

}  // namespace

bool GameSpec::is_deterministic() const {
    return std::all_of(transition.begin(), transition.end(), [](const std::vector<Outcome>& row) {
        return row.size() == 1 && row.front().probability == 1.0;
    });
}

std::size_t GameSpec::find_state(const std::string& name) const { return find_label(states, name, "state"); }
std::size_t GameSpec::find_human_action(const std::string& name) const {
    return find_label(human_actions, name, "human action");
}
std::size_t GameSpec::find_robot_action(const std::string& name) const {
    return find_label(robot_actions, name, "robot action");
}
std::size_t GameSpec::find_objective(const std::string& name) const {
    return find_label(objectives, name, "objective");
}

std::vector<Violation> validate_game(const GameSpec& spec) {
    std::vector<Violation> out;
    auto add = [&out](std::string where, std::string what) { out.push_back({std::move(where), std::move(what)}); };

    const std::size_t ns = spec.num_states(), nh = spec.num_human_actions(), nr = spec.num_robot_actions(),
                      nt = spec.num_objectives();
    if (ns == 0) add("states", "must be non-empty");
    if (nh == 0) add("human_actions", "must be non-empty");
    if (nr == 0) add("robot_actions", "must be non-empty");
    if (nt == 0) add("objectives", "must be non-empty");
    if (!(spec.discount >= 0.0 && spec.discount <= 1.0)) add("discount", "must lie in [0, 1]");
    if (spec.horizon < 1) add("horizon", "must be at least 1");
    if (!out.empty()) return out;

    const std::size_t joint = ns * nh * nr;
    if (spec.transition.size() != joint) {
        add("transition", "expected " + std::to_string(joint) + " rows, found " +
                              std::to_string(spec.transition.size()));
    } else {
        for (std::size_t s = 0; s < ns; ++s)
            for (std::size_t ah = 0; ah < nh; ++ah)
                for (std::size_t ar = 0; ar < nr; ++ar) {
                    const auto& row = spec.row(s, ah, ar);
                    std::ostringstream where;
                    where << "transition[s=" << spec.states[s] << ", a_H=" << spec.human_actions[ah]
                          << ", a_R=" << spec.robot_actions[ar] << "]";
                    double sum = 0.0;
                    bool bad_entry = false;
                    for (const auto& o : row) {
                        if (o.next >= ns) {
                            add(where.str(), "next state index " + std::to_string(o.next) + " out of range");
                            bad_entry = true;
                        }
                        if (!(o.probability >= 0.0) || !std::isfinite(o.probability)) {
                            add(where.str(), "negative or non-finite probability");
                            bad_entry = true;
                        }
                        sum += o.probability;
                    }
                    if (!bad_entry && std::abs(sum - 1.0) > kSumTolerance) {
                        std::ostringstream msg;
                        msg.precision(12);
                        msg << "row sums to " << sum << ", expected 1";
                        add(where.str(), msg.str());
                    }
                }
    }

    if (spec.reward.size() != joint * nt) {
        add("reward", "expected " + std::to_string(joint * nt) + " entries, found " +
                          std::to_string(spec.reward.size()));
    } else if (std::any_of(spec.reward.begin(), spec.reward.end(), [](double r) { return !std::isfinite(r); })) {
        add("reward", "non-finite entry");
    }

    if (spec.prior.size() != ns * nt) {
        add("prior", "expected " + std::to_string(ns * nt) + " entries, found " + std::to_string(spec.prior.size()));
    } else {
        double sum = 0.0;
        for (std::size_t i = 0; i < spec.prior.size(); ++i) {
            if (!(spec.prior[i] >= 0.0)) add("prior[" + std::to_string(i) + "]", "negative or NaN probability");
            sum += spec.prior[i];
        }
        if (std::abs(sum - 1.0) > kSumTolerance) add("prior", "sums to " + std::to_string(sum) + ", expected 1");
    }

    if (!spec.human_legal.empty()) {
        if (spec.human_legal.size() != ns * nh) {
            add("human_legal", "expected " + std::to_string(ns * nh) + " entries");
        } else {
            for (std::size_t s = 0; s < ns; ++s) {
                bool any = false;
                for (std::size_t a = 0; a < nh; ++a) any = any || spec.human_action_legal(s, a);
                if (!any) add("human_legal[" + spec.states[s] + "]", "no legal human action");
            }
        }
    }
    if (!spec.robot_legal.empty()) {
        if (spec.robot_legal.size() != ns * nr) {
            add("robot_legal", "expected " + std::to_string(ns * nr) + " entries");
        } else {
            for (std::size_t s = 0; s < ns; ++s) {
                bool any = false;
                for (std::size_t a = 0; a < nr; ++a) any = any || spec.robot_action_legal(s, a);
                if (!any) add("robot_legal[" + spec.states[s] + "]", "no legal robot action");
            }
        }
    }
    if (!spec.terminal.empty() && spec.terminal.size() != ns) add("terminal", "expected one flag per state");
    return out;
}

void require_valid(const GameSpec& spec) {
    auto violations = validate_game(spec);
    if (violations.empty()) return;
    std::ostringstream msg;
    msg << "invalid game spec (" << violations.size() << " violation" << (violations.size() == 1 ? "" : "s") << ")";
    for (std::size_t i = 0; i < violations.size() && i < 5; ++i)
        msg << "\n  " << violations[i].location << ": " << violations[i].message;
    throw UsageError(msg.str());
}

std::size_t sample_index(std::span<const double> weights, Rng& rng) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw NumericError("cannot sample from an all-zero weight vector");
    const double u = uniform01(rng) * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        acc += weights[i];
        last_positive = i;
        if (u < acc) return i;
    }
    return last_positive;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finaliser over (seed, stream)
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

StepResult step(const GameSpec& spec, StateId s, HumanActionId a_h, RobotActionId a_r, Rng& rng) {
    if (s.value >= spec.num_states()) throw UsageError("step: state index out of range");
    if (a_h.value >= spec.num_human_actions()) throw UsageError("step: human action index out of range");
    if (a_r.value >= spec.num_robot_actions()) throw UsageError("step: robot action index out of range");

    const auto& row = spec.row(s.value, a_h.value, a_r.value);
    StepResult result;
    if (row.size() == 1) {
        result.next = StateId{row.front().next};
    } else {
        std::vector<double> w(row.size());
        for (std::size_t i = 0; i < row.size(); ++i) w[i] = row[i].probability;
        result.next = StateId{row[sample_index(w, rng)].next};
    }
    auto r = spec.rewards(s.value, a_h.value, a_r.value);
    result.rewards.assign(r.begin(), r.end());
    return result;
}

std::vector<std::size_t> legal_actions(const GameSpec& spec, StateId s, Actor actor) {
    if (s.value >= spec.num_states()) throw UsageError("legal_actions: state index out of range");
    std::vector<std::size_t> out;
    if (actor == Actor::Human) {
        for (std::size_t a = 0; a < spec.num_human_actions(); ++a)
            if (spec.human_action_legal(s.value, a)) out.push_back(a);
    } else {
        for (std::size_t a = 0; a < spec.num_robot_actions(); ++a)
            if (spec.robot_action_legal(s.value, a)) out.push_back(a);
    }
    return out;
}

std::vector<HumanActionId> legal_human_actions(const GameSpec& spec, StateId s) {
    std::vector<HumanActionId> out;
    for (auto a : legal_actions(spec, s, Actor::Human)) out.push_back(HumanActionId{a});
    return out;
}

std::vector<RobotActionId> legal_robot_actions(const GameSpec& spec, StateId s) {
    std::vector<RobotActionId> out;
    for (auto a : legal_actions(spec, s, Actor::Robot)) out.push_back(RobotActionId{a});
    return out;
}

std::vector<double> objective_posterior_given_state(const GameSpec& spec, std::size_t s) {
    if (s >= spec.num_states()) throw UsageError("state index out of range");
    std::vector<double> b(spec.num_objectives());
    double total = 0.0;
    for (std::size_t th = 0; th < b.size(); ++th) total += b[th] = spec.prior_at(s, th);
    if (!(total > 0.0)) throw UsageError("state '" + spec.states[s] + "' has zero prior mass");
    for (double& x : b) x /= total;
    return b;
}

std::vector<double> state_marginal(const GameSpec& spec) {
    std::vector<double> m(spec.num_states(), 0.0);
    for (std::size_t s = 0; s < m.size(); ++s)
        for (std::size_t th = 0; th < spec.num_objectives(); ++th) m[s] += spec.prior_at(s, th);
    return m;
}

}  // namespace cirl
