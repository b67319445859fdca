#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <memory>

#include "cirl/archive.hpp"
#include "cirl/chefworld.hpp"
#include "cirl/game_io.hpp"
#include "cirl/run_config.hpp"
#include "micro_oracle.hpp"

using namespace cirl;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    const auto dir = fs::temp_directory_path() / "cirl_io_test";
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("flat game json round trip") {
    const auto g = oracle::random_micro_game(3);
    const auto j = game_to_json(g);
    const auto back = game_from_json(j);
    CHECK(back.transition.size() == g.transition.size());
    CHECK(back.reward == g.reward);
    CHECK(back.prior == g.prior);
    CHECK(game_to_json(back) == j);

    const auto kitchen = build_chefworld(two_recipe_scenario());
    CHECK(game_to_json(game_from_json(game_to_json(kitchen))) == game_to_json(kitchen));
}

TEST_CASE("malformed game documents throw FormatError") {
    auto j = game_to_json(oracle::random_micro_game(3));
    j["format_version"] = 99;
    CHECK_THROWS_AS(game_from_json(j), FormatError);
    auto k = game_to_json(oracle::random_micro_game(3));
    k.erase("states");
    CHECK_THROWS_AS(game_from_json(k), FormatError);
    CHECK_THROWS_AS(game_from_json(nlohmann::json::array()), FormatError);
}

TEST_CASE("json hash ignores key order") {
    const auto a = nlohmann::json::parse(R"({"x":1,"y":[1,2]})");
    const auto b = nlohmann::json::parse(R"({"y":[1,2],"x":1})");
    CHECK(json_hash(a) == json_hash(b));
    CHECK(json_hash(a) != json_hash(nlohmann::json::parse(R"({"x":2,"y":[1,2]})")));
    CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
}

TEST_CASE("cirl archive round trip") {
    const auto spec = std::make_shared<const GameSpec>(build_chefworld(two_recipe_scenario()));
    const auto sol = solve_cirl(spec, BeliefGrid(2, 10), RationalityModel::boltzmann(2.5));
    const auto path = scratch_dir() / "cirl.bin";
    const nlohmann::json config = {{"seed", 3}};
    write_archive(path, sol, config);
    const auto loaded = read_archive(path);
    CHECK(loaded.kind == "cirl");
    CHECK(loaded.header.at("config") == config);
    CHECK(loaded.header.at("config_hash") == json_hash(config));
    REQUIRE(loaded.solutions.cirl);
    CHECK(loaded.solutions.cirl->q.values() == sol.q.values());
    CHECK(loaded.solutions.cirl->robot_policy == sol.robot_policy);
    CHECK(loaded.solutions.cirl->model == sol.model);
    CHECK(loaded.solutions.cirl->report.iterations == sol.report.iterations);
    CHECK(game_to_json(*loaded.solutions.spec) == game_to_json(*spec));

    const auto again = scratch_dir() / "cirl2.bin";
    write_archive(again, *loaded.solutions.cirl, config);
    CHECK(slurp(path) == slurp(again));
}

TEST_CASE("literal archive round trip") {
    const auto spec = std::make_shared<const GameSpec>(build_chefworld(two_recipe_scenario()));
    const auto sol = solve_literal(spec, BeliefGrid(2, 10), RationalityModel::rational());
    const auto path = scratch_dir() / "irl.bin";
    write_archive(path, sol);
    const auto loaded = read_archive(path);
    CHECK(loaded.kind == "irl");
    REQUIRE(loaded.solutions.literal);
    CHECK(loaded.solutions.literal->full.values() == sol.full.values());
    CHECK(loaded.solutions.literal->values.values() == sol.values.values());
    CHECK(loaded.solutions.literal->robot_policy == sol.robot_policy);
    CHECK(loaded.solutions.literal->model == sol.model);
}

TEST_CASE("corrupt archives are rejected") {
    const auto spec = std::make_shared<const GameSpec>(oracle::random_micro_game(1));
    const auto sol = solve_cirl(spec, BeliefGrid(2, 4), RationalityModel::boltzmann(1.0));
    const auto path = scratch_dir() / "bad.bin";
    write_archive(path, sol);
    const auto bytes = slurp(path);
    const auto write = [&](const std::string& b) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << b;
    };
    write("XIRLSOL1" + bytes.substr(8));
    CHECK_THROWS_AS(read_archive(path), FormatError);
    write(bytes.substr(0, bytes.size() - 5));
    CHECK_THROWS_AS(read_archive(path), FormatError);
    write(bytes + "x");
    CHECK_THROWS_AS(read_archive(path), FormatError);
    CHECK_THROWS_AS(read_archive(scratch_dir() / "missing.bin"), FormatError);
}

TEST_CASE("model json round trip") {
    for (const auto& m : {RationalityModel::boltzmann(2.5), RationalityModel::boltzmann(1.0, 0.01),
                          RationalityModel::rational()})
        CHECK(model_from_json(model_to_json(m)) == m);
}

TEST_CASE("run config round trip and validation") {
    RunConfig c;
    c.domain = "chefworld2";
    c.mode = RobotKind::IrlLiteral;
    c.model = RationalityModel::rational();
    c.horizon = 5;
    c.seed = 12;
    const auto back = RunConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(back.hash() == c.hash());
    CHECK(back.load_game().horizon == 5);

    auto j = c.to_json();
    j["betta"] = 3;
    CHECK_THROWS_AS(RunConfig::from_json(j), UsageError);
    auto k = c.to_json();
    k["solver"]["tolerance"] = 1e-3;
    CHECK_THROWS_AS(RunConfig::from_json(k), UsageError);
    auto h = c.to_json();
    h["horizon"] = 0;
    CHECK_THROWS_AS(RunConfig::from_json(h), UsageError);
    auto m = c.to_json();
    m["model"] = "beta=-2";
    CHECK_THROWS_AS(RunConfig::from_json(m), UsageError);
}

TEST_CASE("model strings") {
    CHECK(parse_model("rational").is_rational());
    CHECK(parse_model("beta=2.5").beta == 2.5);
    CHECK(parse_model("5").beta == 5.0);
    CHECK_THROWS_AS(parse_model("fast"), UsageError);
    CHECK(RationalityModel::boltzmann(2.5).label() == "beta=2.5");
}
