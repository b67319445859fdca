#include "cirl/session.hpp"

#include <algorithm>

#include "cirl/archive.hpp"
#include "cirl/chefworld.hpp"
#include "cirl/game_io.hpp"
#include "cirl/run_config.hpp"

namespace cirl {

using nlohmann::json;

namespace {

constexpr std::uint64_t kObjectiveStream = 2;

json labelled(std::size_t index, const std::string& label) { return {{"index", index}, {"label", label}}; }

std::vector<double> objective_marginal(const GameSpec& spec) {
    std::vector<double> w(spec.num_objectives(), 0.0);
    for (std::size_t s = 0; s < spec.num_states(); ++s)
        for (std::size_t th = 0; th < w.size(); ++th) w[th] += spec.prior_at(s, th);
    return w;
}

std::string cache_key(RobotKind mode, const RationalityModel& model) {
    return std::string(to_string(mode)) + "/" + model_to_json(model).dump();
}

ServiceError bad_request(const std::string& message) { return {400, "bad-request", message}; }

}  // namespace

json ServiceError::to_json() const {
    json j = {{"code", code_}, {"message", what()}};
    if (!legal_.empty()) j["legal_actions"] = legal_;
    return j;
}

std::vector<Scenario> builtin_scenarios() {
    std::vector<Scenario> out;
    out.push_back({"chefworld2", "Soup or salad; the robot starts out believing salad",
                   std::make_shared<const GameSpec>(build_chefworld(two_recipe_scenario())), 0, {}});
    out.push_back({"chefworld4", "Four recipes, uniform prior",
                   std::make_shared<const GameSpec>(build_chefworld(four_recipe_benchmark())), 0, {}});
    return out;
}

json CreateRequest::to_json() const {
    return {{"scenario", scenario},
            {"mode", mode == RobotKind::CirlPragmatic ? "cirl" : "irl"},
            {"model", model_to_json(model)},
            {"true_objective", true_objective},
            {"seed", seed}};
}

CreateRequest CreateRequest::from_json(const json& j) {
    if (!j.is_object()) throw bad_request("request body must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (key != "scenario" && key != "mode" && key != "model" && key != "true_objective" && key != "seed")
            throw bad_request("unknown field '" + key + "'");
    CreateRequest r;
    try {
        r.scenario = j.at("scenario").get<std::string>();
        if (j.contains("mode")) r.mode = robot_kind_from_string(j.at("mode").get<std::string>());
        if (j.contains("model")) {
            const auto& m = j.at("model");
            r.model = m.is_string() ? parse_model(m.get<std::string>()) : model_from_json(m);
        }
        r.true_objective = j.value("true_objective", r.true_objective);
        r.seed = j.value("seed", r.seed);
    } catch (const json::exception& e) {
        throw bad_request(std::string("malformed request: ") + e.what());
    } catch (const std::exception& e) {
        throw bad_request(e.what());
    }
    return r;
}

struct SessionManager::ScenarioEntry {
    Scenario scenario;
    std::map<std::string, Solutions> cache;
};

struct SessionManager::Session {
    std::string id;
    CreateRequest request;
    Solutions solutions;
    Condition condition;
    std::size_t theta = 0;
    std::unique_ptr<EpisodeRunner> runner;
    double last_reward = 0.0;
    mutable std::mutex mutex;

    std::string status() const {
        if (!runner->finished()) return "active";
        return runner->success() ? "succeeded" : "failed-horizon";
    }

    json summary(bool full) const {
        const auto& spec = *solutions.spec;
        const auto& r = *runner;
        json legal = json::array();
        json robot = nullptr;
        if (!r.finished()) {
            for (auto a : r.legal_human_actions()) legal.push_back(labelled(a, spec.human_actions[a]));
            robot = labelled(r.robot_action(), spec.robot_actions[r.robot_action()]);
        }
        json j = {{"format_version", kSessionFormatVersion},
                  {"id", id},
                  {"scenario", request.scenario},
                  {"mode", request.mode == RobotKind::CirlPragmatic ? "cirl" : "irl"},
                  {"model", request.model.label()},
                  {"seed", request.seed},
                  {"status", status()},
                  {"turn", r.turn()},
                  {"horizon", spec.horizon},
                  {"state", labelled(r.state(), spec.states[r.state()])},
                  {"objectives", spec.objectives},
                  {"belief", std::vector<double>(r.belief().begin(), r.belief().end())},
                  {"robot_action", robot},
                  {"legal_actions", legal},
                  {"true_objective", spec.objectives[theta]},
                  {"last_reward", last_reward}};
        if (full) {
            json trace = json::array();
            for (const auto& t : r.trace().turns)
                trace.push_back({{"turn", t.t},
                                 {"state", labelled(t.state, spec.states[t.state])},
                                 {"belief", t.belief},
                                 {"robot_action", labelled(t.robot_action, spec.robot_actions[t.robot_action])},
                                 {"human_action", labelled(t.human_action, spec.human_actions[t.human_action])},
                                 {"reward", t.rewards.at(theta)}});
            j["trace"] = std::move(trace);
        }
        return j;
    }
};

SessionManager::SessionManager(std::optional<std::filesystem::path> journal) {
    if (journal) {
        if (journal->has_parent_path()) std::filesystem::create_directories(journal->parent_path());
        journal_.emplace(*journal, std::ios::app);
        if (!*journal_) throw std::runtime_error("cannot open session journal " + journal->string());
    }
}

SessionManager::~SessionManager() = default;

void SessionManager::add_scenario(Scenario scenario) {
    if (!scenario.spec) throw UsageError("scenario without a game");
    require_valid(*scenario.spec);
    auto id = scenario.id;
    scenarios_[id] = std::make_unique<ScenarioEntry>(ScenarioEntry{std::move(scenario), {}});
}

void SessionManager::add_solutions(const std::string& id, const Solutions& solutions) {
    if (!solutions.spec) throw UsageError("solutions without a game");
    auto it = scenarios_.find(id);
    if (it == scenarios_.end()) {
        const auto resolution = solutions.cirl ? solutions.cirl->grid.resolution() : solutions.literal->grid.resolution();
        add_scenario({id, "loaded from archive", solutions.spec, resolution, {}});
        it = scenarios_.find(id);
    } else if (game_to_json(*it->second->scenario.spec) != game_to_json(*solutions.spec)) {
        throw UsageError("archive game differs from scenario '" + id + "'");
    }
    std::lock_guard lock(solve_mutex_);
    if (solutions.cirl) it->second->cache[cache_key(RobotKind::CirlPragmatic, solutions.cirl->model)] = solutions;
    if (solutions.literal) it->second->cache[cache_key(RobotKind::IrlLiteral, solutions.literal->model)] = solutions;
}

const SessionManager::ScenarioEntry& SessionManager::scenario(const std::string& id) const {
    const auto it = scenarios_.find(id);
    if (it == scenarios_.end()) throw ServiceError(404, "unknown-scenario", "no scenario '" + id + "'");
    return *it->second;
}

json SessionManager::scenarios() const {
    json out = json::array();
    for (const auto& [id, entry] : scenarios_) {
        const auto& spec = *entry->scenario.spec;
        const auto prior = objective_marginal(spec);
        out.push_back({{"id", id},
                       {"description", entry->scenario.description},
                       {"objectives", spec.objectives},
                       {"prior", prior},
                       {"horizon", spec.horizon},
                       {"human_actions", spec.human_actions},
                       {"robot_actions", spec.robot_actions},
                       {"modes", {"cirl", "irl"}}});
    }
    return out;
}

Solutions SessionManager::solutions_for(const std::string& id, RobotKind mode, const RationalityModel& model) {
    scenario(id);
    auto& entry = *scenarios_.at(id);
    std::lock_guard lock(solve_mutex_);
    const auto key = cache_key(mode, model);
    if (auto it = entry.cache.find(key); it != entry.cache.end()) return it->second;
    const auto& sc = entry.scenario;
    const BeliefGrid grid(sc.spec->num_objectives(), sc.grid_resolution ? sc.grid_resolution
                                                                        : BeliefGrid::default_resolution(sc.spec->num_objectives()));
    Solutions sol{sc.spec, nullptr, nullptr};
    if (mode == RobotKind::CirlPragmatic)
        sol.cirl = std::make_shared<const CirlSolution>(solve_cirl(sc.spec, grid, model, sc.solver));
    else
        sol.literal = std::make_shared<const LiteralSolution>(solve_literal(sc.spec, grid, model, sc.solver));
    entry.cache[key] = sol;
    return sol;
}

json SessionManager::create_session(const CreateRequest& request) {
    std::string id;
    {
        std::unique_lock lock(sessions_mutex_);
        id = "s" + std::to_string(next_id_++);
    }
    return create_locked(request, id);
}

json SessionManager::create_locked(const CreateRequest& request, const std::string& id) {
    const auto& spec = *scenario(request.scenario).scenario.spec;
    try {
        request.model.check(spec.num_human_actions());
    } catch (const UsageError& e) {
        throw bad_request(e.what());
    }

    std::size_t theta = 0;
    if (request.true_objective == "random") {
        Rng rng(derive_seed(request.seed, kObjectiveStream));
        theta = sample_index(objective_marginal(spec), rng);
    } else {
        const auto it = std::find(spec.objectives.begin(), spec.objectives.end(), request.true_objective);
        if (it == spec.objectives.end())
            throw ServiceError(400, "unknown-objective", "no objective '" + request.true_objective + "'", spec.objectives);
        theta = static_cast<std::size_t>(it - spec.objectives.begin());
    }

    auto session = std::make_shared<Session>();
    session->id = id;
    session->request = request;
    session->solutions = solutions_for(request.scenario, request.mode, request.model);
    session->condition = {request.mode, HumanKind::Scripted, request.model, request.scenario};
    session->theta = theta;
    session->runner = std::make_unique<EpisodeRunner>(session->solutions, session->condition, theta, request.seed);

    json summary = session->summary(false);
    {
        std::unique_lock lock(sessions_mutex_);
        if (sessions_.contains(id)) throw ServiceError(409, "duplicate-session", "session '" + id + "' exists");
        sessions_[id] = session;
        if (id.size() > 1 && id[0] == 's') {
            try {
                next_id_ = std::max<std::uint64_t>(next_id_, std::stoull(id.substr(1)) + 1);
            } catch (const std::exception&) {
            }
        }
    }
    journal({{"event", "create"}, {"id", id}, {"request", request.to_json()}});
    return summary;
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
    std::shared_lock lock(sessions_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(404, "unknown-session", "no session '" + id + "'");
    return it->second;
}

json SessionManager::submit_human_action(const std::string& id, const json& action, std::optional<int> expected_turn) {
    const auto session = find(id);
    std::unique_lock lock(session->mutex, std::try_to_lock);
    if (!lock.owns_lock())
        throw ServiceError(409, "conflict", "another action for session '" + id + "' is being applied");
    auto& runner = *session->runner;
    const auto& spec = *session->solutions.spec;
    if (runner.finished()) throw ServiceError(409, "session-finished", "session '" + id + "' has finished");
    if (expected_turn && *expected_turn != runner.turn())
        throw ServiceError(409, "stale-turn",
                           "action was for turn " + std::to_string(*expected_turn) + " but the session is at turn " +
                               std::to_string(runner.turn()));

    const auto legal = runner.legal_human_actions();
    std::vector<std::string> legal_labels;
    for (auto a : legal) legal_labels.push_back(spec.human_actions[a]);

    std::optional<std::size_t> chosen;
    if (action.is_string()) {
        const auto label = action.get<std::string>();
        for (auto a : legal)
            if (spec.human_actions[a] == label) chosen = a;
    } else if (action.is_number_integer()) {
        const auto index = action.get<std::int64_t>();
        if (index >= 0 && std::find(legal.begin(), legal.end(), static_cast<std::size_t>(index)) != legal.end())
            chosen = static_cast<std::size_t>(index);
    } else {
        throw ServiceError(400, "bad-request", "action must be a label or an index", legal_labels);
    }
    if (!chosen) throw ServiceError(422, "illegal-action", "action " + action.dump() + " is not legal now", legal_labels);

    const int turn = runner.turn();
    runner.advance(*chosen);
    session->last_reward = runner.trace().turns.back().rewards.at(session->theta);
    journal({{"event", "action"}, {"id", id}, {"turn", turn}, {"action", spec.human_actions[*chosen]}});
    return session->summary(false);
}

json SessionManager::get_session(const std::string& id) const {
    const auto session = find(id);
    std::lock_guard lock(session->mutex);
    return session->summary(true);
}

EpisodeTrace SessionManager::session_trace(const std::string& id) const {
    const auto session = find(id);
    std::lock_guard lock(session->mutex);
    return session->runner->trace();
}

void SessionManager::journal(const json& event) {
    if (!journal_ || replaying_) return;
    std::lock_guard lock(journal_mutex_);
    *journal_ << event.dump() << '\n';
    journal_->flush();
}

std::size_t SessionManager::replay_journal(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open journal " + path.string());
    replaying_ = true;
    std::size_t applied = 0;
    std::string line;
    try {
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto event = json::parse(line);
            const auto kind = event.at("event").get<std::string>();
            const auto id = event.at("id").get<std::string>();
            if (kind == "create") {
                create_locked(CreateRequest::from_json(event.at("request")), id);
            } else if (kind == "action") {
                submit_human_action(id, event.at("action"), event.at("turn").get<int>());
            } else {
                throw FormatError("unknown journal event '" + kind + "'");
            }
            ++applied;
        }
    } catch (const json::exception& e) {
        replaying_ = false;
        throw FormatError(path.string() + ": bad journal line: " + e.what());
    } catch (...) {
        replaying_ = false;
        throw;
    }
    replaying_ = false;
    return applied;
}

}  // namespace cirl
