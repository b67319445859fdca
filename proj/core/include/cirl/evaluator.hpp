#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cirl/belief.hpp"
#include "cirl/game.hpp"
#include "cirl/solver.hpp"

namespace cirl {

enum class RobotKind { CirlPragmatic, IrlLiteral };
/// Pedagogic samples from the equilibrium-Q Boltzmann policy, expert from
/// the full-information one, scripted replays a fixed action list.
enum class HumanKind { Pedagogic, Expert, Scripted };

const char* to_string(RobotKind kind);
const char* to_string(HumanKind kind);
RobotKind robot_kind_from_string(const std::string& s);
HumanKind human_kind_from_string(const std::string& s);

struct Condition {
    RobotKind robot = RobotKind::CirlPragmatic;
    HumanKind human = HumanKind::Pedagogic;
    RationalityModel model;
    std::string scenario;

    /// (pragmatic, pedagogic) and (literal, expert) are the paired settings;
    /// anything else is a cross-pairing.
    bool standard_pairing() const {
        return (robot == RobotKind::CirlPragmatic && human == HumanKind::Pedagogic) ||
               (robot == RobotKind::IrlLiteral && human == HumanKind::Expert);
    }
    nlohmann::json to_json() const;

    static Condition cirl(const RationalityModel& m, std::string scenario = {}) {
        return {RobotKind::CirlPragmatic, HumanKind::Pedagogic, m, std::move(scenario)};
    }
    static Condition irl(const RationalityModel& m, std::string scenario = {}) {
        return {RobotKind::IrlLiteral, HumanKind::Expert, m, std::move(scenario)};
    }
};

/// Solved tables a condition may need. Either side may be absent.
struct Solutions {
    std::shared_ptr<const GameSpec> spec;
    std::shared_ptr<const CirlSolution> cirl;
    std::shared_ptr<const LiteralSolution> literal;

    const RationalityModel& model() const;
    /// Throws UsageError when a table required by `c` is missing or was
    /// solved under a different rationality model.
    void require(const Condition& c) const;
};

struct TurnRecord {
    int t = 0;
    std::size_t state = 0;
    std::vector<double> belief;  // robot belief before the turn's update
    std::size_t robot_action = 0;
    std::size_t human_action = 0;
    std::vector<double> rewards;  // per θ
};

struct EpisodeTrace {
    Condition condition;
    std::uint64_t seed = 0;
    std::size_t true_objective = 0;
    std::vector<TurnRecord> turns;
    std::size_t final_state = 0;
    std::vector<double> final_belief;
    bool success = false;
    bool finished = false;

    /// Line-delimited JSON: a header line, one line per turn, a result line.
    std::string to_jsonl(const GameSpec& spec) const;
};

/**
Steps one episode turn by turn. The robot proposes its action first; the
human's action is then supplied (sampled or scripted) and the joint action
is applied. The robot's belief is tracked exactly and projected onto the
grid only to look up its policy. The true objective never reaches the
robot's code path.
*/
class EpisodeRunner {
public:
    EpisodeRunner(const Solutions& solutions, const Condition& condition, std::size_t true_objective,
                  std::uint64_t seed, bool record_trace = true);

    int turn() const { return t_; }
    std::size_t state() const { return state_; }
    std::span<const double> belief() const { return belief_; }
    bool finished() const { return finished_; }
    bool success() const { return success_; }
    /// Robot action proposed for the current turn.
    std::size_t robot_action() const { return pending_robot_action_; }
    std::vector<std::size_t> legal_human_actions() const;
    /// Model policy of the condition's human over legal_human_actions();
    /// throws for scripted humans.
    std::vector<double> human_policy() const;
    /// Samples from human_policy() with the episode's human stream.
    std::size_t sample_human_action();

    /// Applies (robot_action(), a_h). Throws UsageError on illegal actions or
    /// a finished episode; the runner is unchanged in that case.
    void advance(std::size_t a_h);

    const EpisodeTrace& trace() const { return trace_; }

private:
    void propose();

    const Solutions& sol_;
    Condition condition_;
    std::size_t theta_;
    Rng world_rng_;
    Rng human_rng_;
    bool record_;
    int t_ = 0;
    std::size_t state_ = 0;
    std::vector<double> belief_;
    std::size_t pending_robot_action_ = 0;
    bool finished_ = false;
    bool success_ = false;
    EpisodeTrace trace_;
};

/// Runs an episode to the horizon or absorption. With HumanKind::Scripted
/// the episode stops early if the script runs out.
EpisodeTrace simulate_episode(const Condition& condition, const Solutions& solutions, std::size_t true_objective,
                              std::uint64_t seed, std::span<const std::size_t> script = {});

struct ExactValue {
    std::vector<double> per_objective;        // expected return given θ
    std::vector<double> success_per_objective;
    double total = 0.0;                       // P0-weighted
    double success = 0.0;
    double leaf_mass = 0.0;
    double pruned_mass = 0.0;
};

inline constexpr double kEnumerationPruneThreshold = 1e-12;

/// Exact forward enumeration over the human's action distribution. Needs a
/// deterministic transition measure; throws UsageError ("use Monte Carlo")
/// otherwise.
ExactValue expected_value_exact(const Condition& condition, const Solutions& solutions,
                                double prune_below = kEnumerationPruneThreshold);

struct MonteCarloValue {
    double mean = 0.0;
    double standard_error = 0.0;
    double sample_variance = 0.0;
    std::size_t episodes = 0;
};

/// θ and s0 drawn from P0; episode i uses derive_seed(seed, i).
MonteCarloValue expected_value_monte_carlo(const Condition& condition, const Solutions& solutions,
                                           std::size_t episodes, std::uint64_t seed, unsigned threads = 0);

struct BenchmarkOptions {
    std::size_t grid_resolution = 0;  // 0 = BeliefGrid::default_resolution
    SolverOptions solver;
    std::size_t monte_carlo_episodes = 0;  // 0 = skip the cross-check
    std::uint64_t seed = 0;
};

struct BenchmarkCell {
    Condition condition;
    ExactValue exact;
    std::optional<MonteCarloValue> monte_carlo;
    std::size_t non_converged_cells = 0;
    double solve_seconds = 0.0;
};

struct BenchmarkReport {
    std::vector<RationalityModel> models;
    std::vector<BenchmarkCell> cells;  // robot-kind major, model minor
    nlohmann::json config;

    const BenchmarkCell& cell(RobotKind robot, const RationalityModel& model) const;
    /// Machine-readable; excludes timings so identical configs give identical bytes.
    nlohmann::json to_json() const;
    /// Table with one row per robot kind and one column per model.
    std::string to_text() const;
};

/// Solves both robots for each model and evaluates the paired conditions.
BenchmarkReport run_benchmark(std::shared_ptr<const GameSpec> spec, const std::vector<RationalityModel>& models,
                              const BenchmarkOptions& options = {});

/// Orderings the benchmark is expected to show; one message per failed check.
std::vector<std::string> check_expected_ordering(const BenchmarkReport& report);

}  // namespace cirl
