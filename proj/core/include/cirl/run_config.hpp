#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "cirl/belief.hpp"
#include "cirl/evaluator.hpp"
#include "cirl/game.hpp"
#include "cirl/solver.hpp"

namespace cirl {

/// Settings of one solve / simulate / benchmark run. The JSON form is echoed
/// into every artifact, and its hash identifies the run.
struct RunConfig {
    std::string domain;
    RobotKind mode = RobotKind::CirlPragmatic;
    RationalityModel model = RationalityModel::boltzmann(5.0);
    std::size_t grid_resolution = 0;  // 0 = default for |Θ|
    std::optional<int> horizon;
    std::optional<double> discount;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    SolverOptions solver;

    nlohmann::json to_json() const;
    /// Rejects unknown fields and malformed values with UsageError.
    static RunConfig from_json(const nlohmann::json& j);
    std::string hash() const;

    /// Loads the domain and applies the horizon/discount overrides. The
    /// names "chefworld2" and "chefworld4" fall back to the built-in
    /// scenarios when no such file exists.
    GameSpec load_game() const;
    std::size_t resolution_for(const GameSpec& spec) const;
};

/// "rational", "beta=2.5" or a bare number.
RationalityModel parse_model(const std::string& text);

}  // namespace cirl
