#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cirl {

/// Caller passed an index or argument outside the declared sets.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <class Tag>
struct Id {
    std::size_t value = 0;
    constexpr auto operator<=>(const Id&) const = default;
};

using StateId = Id<struct StateTag>;
using HumanActionId = Id<struct HumanActionTag>;
using RobotActionId = Id<struct RobotActionTag>;
using ObjectiveId = Id<struct ObjectiveTag>;

enum class Actor { Human, Robot };

/// Within a turn the robot's action is revealed before the human commits to an action.
/// The transition still consumes the joint action; this only governs who
/// conditions on what.
struct TurnStructure {
    static constexpr Actor first_mover = Actor::Robot;
    static constexpr Actor second_mover = Actor::Human;
};

struct Outcome {
    std::size_t next = 0;
    double probability = 0.0;
};

/**
Declarative form of a finite CIRL game: states, asymmetric action sets,
transition measure, objective-parameterised reward, joint prior over
(state, objective), discount and horizon.

Tables are dense and row-major. Legality masks restrict which actions the
solver and simulator ever consider in a state; an illegal joint action is
still encoded (as a zero-reward self-loop) so the flat form stays total.
*/
struct GameSpec {
    std::vector<std::string> states;
    std::vector<std::string> human_actions;
    std::vector<std::string> robot_actions;
    std::vector<std::string> objectives;

    /// [(s * |A_H| + a_H) * |A_R| + a_R] -> sparse row over s'.
    std::vector<std::vector<Outcome>> transition;
    /// [((s * |A_H| + a_H) * |A_R| + a_R) * |Θ| + θ]
    std::vector<double> reward;
    /// [s * |Θ| + θ]
    std::vector<double> prior;
    /// [s * |A_H| + a_H], nonzero = legal. Empty means everything is legal.
    std::vector<std::uint8_t> human_legal;
    /// [s * |A_R| + a_R]
    std::vector<std::uint8_t> robot_legal;
    /// Episodes stop on entering a terminal state. Empty means none.
    std::vector<std::uint8_t> terminal;

    double discount = 1.0;
    int horizon = 1;

    std::size_t num_states() const { return states.size(); }
    std::size_t num_human_actions() const { return human_actions.size(); }
    std::size_t num_robot_actions() const { return robot_actions.size(); }
    std::size_t num_objectives() const { return objectives.size(); }

    std::size_t joint_index(std::size_t s, std::size_t a_h, std::size_t a_r) const {
        return (s * num_human_actions() + a_h) * num_robot_actions() + a_r;
    }

    const std::vector<Outcome>& row(std::size_t s, std::size_t a_h, std::size_t a_r) const {
        return transition[joint_index(s, a_h, a_r)];
    }

    std::span<const double> rewards(std::size_t s, std::size_t a_h, std::size_t a_r) const {
        return {reward.data() + joint_index(s, a_h, a_r) * num_objectives(), num_objectives()};
    }

    double reward_at(std::size_t s, std::size_t a_h, std::size_t a_r, std::size_t theta) const {
        return reward[joint_index(s, a_h, a_r) * num_objectives() + theta];
    }

    double prior_at(std::size_t s, std::size_t theta) const { return prior[s * num_objectives() + theta]; }

    bool human_action_legal(std::size_t s, std::size_t a_h) const {
        return human_legal.empty() || human_legal[s * num_human_actions() + a_h] != 0;
    }

    bool robot_action_legal(std::size_t s, std::size_t a_r) const {
        return robot_legal.empty() || robot_legal[s * num_robot_actions() + a_r] != 0;
    }

    bool is_terminal(std::size_t s) const { return !terminal.empty() && terminal[s] != 0; }

    /// Every transition row has exactly one unit entry.
    bool is_deterministic() const;

    std::size_t find_state(const std::string& name) const;
    std::size_t find_human_action(const std::string& name) const;
    std::size_t find_robot_action(const std::string& name) const;
    std::size_t find_objective(const std::string& name) const;
};

struct Violation {
    std::string location;
    std::string message;
};

/// Every invariant violation of `spec`; empty iff the spec is well formed.
std::vector<Violation> validate_game(const GameSpec& spec);

/// Throws UsageError listing the first few violations.
void require_valid(const GameSpec& spec);

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits, so results do not
/// depend on the standard library's distribution implementations.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Index drawn from an unnormalised non-negative weight vector.
std::size_t sample_index(std::span<const double> weights, Rng& rng);

/// Derives an independent stream seed from a base seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct StepResult {
    StateId next;
    /// r(s, a_H, a_R; θ) for every θ.
    std::vector<double> rewards;
};

StepResult step(const GameSpec& spec, StateId s, HumanActionId a_h, RobotActionId a_r, Rng& rng);

std::vector<HumanActionId> legal_human_actions(const GameSpec& spec, StateId s);
std::vector<RobotActionId> legal_robot_actions(const GameSpec& spec, StateId s);

/// Indices of legal actions for `actor` in `s`, as plain indices.
std::vector<std::size_t> legal_actions(const GameSpec& spec, StateId s, Actor actor);

/// P0(θ | s); throws UsageError when s has zero prior mass.
std::vector<double> objective_posterior_given_state(const GameSpec& spec, std::size_t s);

/// P0 marginal over states.
std::vector<double> state_marginal(const GameSpec& spec);

}  // namespace cirl
