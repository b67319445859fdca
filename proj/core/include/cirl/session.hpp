#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cirl/evaluator.hpp"
#include "cirl/game.hpp"
#include "cirl/solver.hpp"

namespace cirl {

inline constexpr int kSessionFormatVersion = 1;

/// Error surfaced to service clients as {code, message, legal_actions?}.
class ServiceError : public std::runtime_error {
public:
    ServiceError(int status, std::string code, const std::string& message, std::vector<std::string> legal = {})
        : std::runtime_error(message), status_(status), code_(std::move(code)), legal_(std::move(legal)) {}

    int http_status() const { return status_; }
    const std::string& code() const { return code_; }
    const std::vector<std::string>& legal_actions() const { return legal_; }
    nlohmann::json to_json() const;

private:
    int status_;
    std::string code_;
    std::vector<std::string> legal_;
};

struct Scenario {
    std::string id;
    std::string description;
    std::shared_ptr<const GameSpec> spec;
    std::size_t grid_resolution = 0;  // 0 = default for |Θ|
    SolverOptions solver;
};

/// "chefworld2" (soup vs. salad, wrong-way prior) and "chefworld4".
std::vector<Scenario> builtin_scenarios();

struct CreateRequest {
    std::string scenario;
    RobotKind mode = RobotKind::CirlPragmatic;
    RationalityModel model = RationalityModel::boltzmann(5.0);
    std::string true_objective = "random";  // objective name or "random"
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
    /// Throws ServiceError (400) on malformed or unknown fields.
    static CreateRequest from_json(const nlohmann::json& j);
};

/**
Owns scenarios, their solved tables and the live sessions. Tables are
solved on first use and then shared read-only. Mutations of one session
are serialised: a submission that finds the session busy, or names a turn
other than the current one, gets a 409 conflict instead of waiting.

Session summaries are JSON objects with the fields
  format_version, id, scenario, mode, model, seed, status (active |
  succeeded | failed-horizon), turn, horizon, state {index, label},
  objectives, belief, robot_action {index, label} | null,
  legal_actions [{index, label}], true_objective, last_reward;
the full view from get_session adds trace.
*/
class SessionManager {
public:
    /// With a journal path every create/action event is appended to that
    /// file; replay_journal rebuilds sessions from such a file.
    explicit SessionManager(std::optional<std::filesystem::path> journal = std::nullopt);
    ~SessionManager();
    SessionManager(const SessionManager&) = delete;
    SessionManager& operator=(const SessionManager&) = delete;

    void add_scenario(Scenario scenario);
    /// Registers pre-solved tables (from an archive) for a scenario.
    void add_solutions(const std::string& scenario, const Solutions& solutions);

    nlohmann::json scenarios() const;
    nlohmann::json create_session(const CreateRequest& request);
    /// `action` is a human action label or index; `expected_turn`, when
    /// given, must equal the session's current turn.
    nlohmann::json submit_human_action(const std::string& id, const nlohmann::json& action,
                                       std::optional<int> expected_turn = std::nullopt);
    nlohmann::json get_session(const std::string& id) const;

    /// Number of events applied.
    std::size_t replay_journal(const std::filesystem::path& path);

    /// The runner behind a session, for replay checks.
    EpisodeTrace session_trace(const std::string& id) const;

private:
    struct Session;
    struct ScenarioEntry;

    const ScenarioEntry& scenario(const std::string& id) const;
    Solutions solutions_for(const std::string& scenario, RobotKind mode, const RationalityModel& model);
    std::shared_ptr<Session> find(const std::string& id) const;
    nlohmann::json create_locked(const CreateRequest& request, const std::string& id);
    void journal(const nlohmann::json& event);

    std::map<std::string, std::unique_ptr<ScenarioEntry>> scenarios_;
    mutable std::shared_mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t next_id_ = 1;
    std::mutex solve_mutex_;
    std::mutex journal_mutex_;
    std::optional<std::ofstream> journal_;
    bool replaying_ = false;
};

}  // namespace cirl
