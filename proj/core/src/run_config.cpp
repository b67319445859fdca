#include "cirl/run_config.hpp"

#include <charconv>
#include <set>

#include "cirl/archive.hpp"
#include "cirl/chefworld.hpp"
#include "cirl/game_io.hpp"

namespace cirl {

using nlohmann::json;

namespace {

double parse_double(const std::string& text, const std::string& what) {
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) throw UsageError("cannot parse " + what + " '" + text + "'");
    return v;
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (!known.contains(key)) throw UsageError("unknown field '" + key + "' in " + where);
}

}  // namespace

RationalityModel parse_model(const std::string& text) {
    if (text == "rational") return RationalityModel::rational();
    const std::string number = text.starts_with("beta=") ? text.substr(5) : text;
    const double beta = parse_double(number, "rationality model");
    if (!(beta > 0.0)) throw UsageError("beta must be positive");
    return RationalityModel::boltzmann(beta);
}

json RunConfig::to_json() const {
    return {{"domain", domain},
            {"mode", mode == RobotKind::CirlPragmatic ? "cirl" : "irl"},
            {"model", model_to_json(model)},
            {"grid_resolution", grid_resolution},
            {"horizon", horizon ? json(*horizon) : json(nullptr)},
            {"discount", discount ? json(*discount) : json(nullptr)},
            {"seed", seed},
            {"output_dir", output_dir},
            {"solver", solver.to_json()}};
}

RunConfig RunConfig::from_json(const json& j) {
    if (!j.is_object()) throw UsageError("run config must be a JSON object");
    reject_unknown(j, {"domain", "mode", "model", "grid_resolution", "horizon", "discount", "seed", "output_dir", "solver"},
                   "run config");
    RunConfig c;
    try {
        c.domain = j.value("domain", c.domain);
        if (j.contains("mode")) c.mode = robot_kind_from_string(j.at("mode").get<std::string>());
        if (j.contains("model")) {
            const auto& m = j.at("model");
            if (m.is_string()) {
                c.model = parse_model(m.get<std::string>());
            } else {
                reject_unknown(m, {"kind", "beta", "epsilon"}, "model");
                c.model = model_from_json(m);
            }
        }
        c.grid_resolution = j.value("grid_resolution", c.grid_resolution);
        if (j.contains("horizon") && !j.at("horizon").is_null()) c.horizon = j.at("horizon").get<int>();
        if (j.contains("discount") && !j.at("discount").is_null()) c.discount = j.at("discount").get<double>();
        c.seed = j.value("seed", c.seed);
        c.output_dir = j.value("output_dir", c.output_dir);
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            reject_unknown(s, {"tol_fp", "max_iter", "damping"}, "solver");
            c.solver.tol_fp = s.value("tol_fp", c.solver.tol_fp);
            c.solver.max_iter = s.value("max_iter", c.solver.max_iter);
            c.solver.damping = s.value("damping", c.solver.damping);
        }
    } catch (const json::exception& e) {
        throw UsageError(std::string("malformed run config: ") + e.what());
    } catch (const FormatError& e) {
        throw UsageError(e.what());
    }
    if (c.horizon && *c.horizon < 1) throw UsageError("horizon must be at least 1");
    if (c.discount && !(*c.discount >= 0.0 && *c.discount <= 1.0)) throw UsageError("discount must lie in [0, 1]");
    if (!(c.solver.tol_fp > 0.0) || c.solver.max_iter < 1 || !(c.solver.damping >= 0.0 && c.solver.damping < 1.0))
        throw UsageError("solver needs tol_fp > 0, max_iter >= 1 and damping in [0, 1)");
    return c;
}

std::string RunConfig::hash() const { return json_hash(to_json()); }

GameSpec RunConfig::load_game() const {
    if (domain.empty()) throw UsageError("no domain file given");
    GameSpec spec;
    if (!std::filesystem::exists(domain) && domain == "chefworld2")
        spec = build_chefworld(two_recipe_scenario());
    else if (!std::filesystem::exists(domain) && domain == "chefworld4")
        spec = build_chefworld(four_recipe_benchmark());
    else
        spec = load_game_file(domain);
    if (horizon) spec.horizon = *horizon;
    if (discount) spec.discount = *discount;
    return spec;
}

std::size_t RunConfig::resolution_for(const GameSpec& spec) const {
    return grid_resolution ? grid_resolution : BeliefGrid::default_resolution(spec.num_objectives());
}

}  // namespace cirl
