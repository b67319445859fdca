// cirl: validate, compile, solve, simulate, benchmark and play CIRL games.
//
// Exit codes: 0 ok, 1 runtime failure (including failed --assert-ordering),
// 2 invalid input. CIRL_OUTPUT_DIR overrides the output directory unless --out
// is given.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "cirl/archive.hpp"
#include "cirl/chefworld.hpp"
#include "cirl/evaluator.hpp"
#include "cirl/game_io.hpp"
#include "cirl/play_server.hpp"
#include "cirl/run_config.hpp"
#include "cirl/session.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace cirl;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitInput = 2;

/// Raised by subcommands that have already printed their diagnosis.
struct Exit {
    int code;
};

/// Flags shared by every subcommand that solves something.
struct RunFlags {
    std::string config_file;
    std::string domain;
    std::string mode;
    std::optional<double> beta;
    bool rational = false;
    std::optional<double> epsilon;
    std::optional<std::size_t> grid;
    std::optional<int> horizon;
    std::optional<double> discount;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<double> tol;
    std::optional<int> max_iter;
    std::optional<double> damping;
    unsigned threads = 0;

    void add_to(CLI::App& app, bool single_model = true) {
        app.add_option("--config", config_file, "JSON run config; flags override its fields");
        app.add_option("--domain", domain, "domain file, or chefworld2 / chefworld4");
        if (single_model) {
            app.add_option("--mode", mode, "cirl | irl")->check(CLI::IsMember({"cirl", "irl"}));
            app.add_option("--beta", beta, "Boltzmann rationality coefficient");
        }
        app.add_flag("--rational", rational, "perfectly rational human (argmax with a likelihood floor)");
        app.add_option("--epsilon", epsilon, "likelihood floor");
        app.add_option("--grid", grid, "belief grid resolution m");
        app.add_option("--horizon", horizon, "override the domain horizon");
        app.add_option("--discount", discount, "override the domain discount");
        app.add_option("--seed", seed, "random seed (default 0)");
        app.add_option("--out", out, "output directory");
        app.add_option("--tol", tol, "fixed-point tolerance");
        app.add_option("--max-iter", max_iter, "fixed-point iteration cap");
        app.add_option("--damping", damping, "fixed-point damping in [0, 1)");
        app.add_option("--threads", threads, "worker threads (0 = all cores)");
    }

    RunConfig resolve() const {
        RunConfig c;
        if (!config_file.empty()) c = RunConfig::from_json(read_json_file(config_file));
        if (!domain.empty()) c.domain = domain;
        if (!mode.empty()) c.mode = robot_kind_from_string(mode);
        if (beta && rational) throw UsageError("--beta and --rational are mutually exclusive");
        if (beta) c.model = RationalityModel::boltzmann(*beta, c.model.is_rational() ? 0.0 : c.model.epsilon);
        if (rational) c.model = RationalityModel::rational();
        if (epsilon) c.model.epsilon = *epsilon;
        if (grid) c.grid_resolution = *grid;
        if (horizon) c.horizon = *horizon;
        if (discount) c.discount = *discount;
        if (seed) c.seed = *seed;
        if (tol) c.solver.tol_fp = *tol;
        if (max_iter) c.solver.max_iter = *max_iter;
        if (damping) c.solver.damping = *damping;
        if (!out.empty()) {
            c.output_dir = out;
        } else if (const char* env = std::getenv("CIRL_OUTPUT_DIR"); env && *env) {
            c.output_dir = env;
        }
        // Round-trip through JSON so flag values get the same validation as files.
        return RunConfig::from_json(c.to_json());
    }

    SolverOptions solver(const RunConfig& c) const {
        auto o = c.solver;
        o.threads = threads;
        return o;
    }
};

std::string fixed(double v, int digits = 3) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

std::string belief_text(const GameSpec& spec, std::span<const double> b) {
    std::string out;
    for (std::size_t th = 0; th < b.size(); ++th) {
        if (th) out += "  ";
        out += spec.objectives[th] + " " + fixed(b[th]);
    }
    return out;
}

Solutions solve_for(const RunConfig& c, const RunFlags& flags, std::shared_ptr<const GameSpec> spec, bool both) {
    const BeliefGrid grid(spec->num_objectives(), c.resolution_for(*spec));
    Solutions sol{spec, nullptr, nullptr};
    const auto opts = flags.solver(c);
    if (both || c.mode == RobotKind::CirlPragmatic)
        sol.cirl = std::make_shared<const CirlSolution>(solve_cirl(spec, grid, c.model, opts));
    if (both || c.mode == RobotKind::IrlLiteral)
        sol.literal = std::make_shared<const LiteralSolution>(solve_literal(spec, grid, c.model, opts));
    return sol;
}

std::shared_ptr<const GameSpec> load_spec(const RunConfig& c) {
    auto spec = std::make_shared<const GameSpec>(c.load_game());
    const auto violations = validate_game(*spec);
    if (!violations.empty()) {
        std::cerr << c.domain << ": invalid game\n";
        for (const auto& v : violations) std::cerr << "  " << v.location << ": " << v.message << '\n';
        throw Exit{kExitInput};
    }
    return spec;
}

std::vector<std::size_t> parse_script(const GameSpec& spec, const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        const auto e = item.find_last_not_of(' ');
        if (b == std::string::npos) continue;
        out.push_back(spec.find_human_action(item.substr(b, e - b + 1)));
    }
    return out;
}

std::size_t pick_objective(const GameSpec& spec, const std::string& name, std::uint64_t seed) {
    if (name != "random") return spec.find_objective(name);
    std::vector<double> w(spec.num_objectives(), 0.0);
    for (std::size_t s = 0; s < spec.num_states(); ++s)
        for (std::size_t th = 0; th < w.size(); ++th) w[th] += spec.prior_at(s, th);
    Rng rng(derive_seed(seed, 2));
    return sample_index(w, rng);
}

// --- validate / compile ----------------------------------------------------

int cmd_validate(const std::string& path) {
    GameSpec spec;
    try {
        RunConfig c;
        c.domain = path;
        spec = c.load_game();
    } catch (const FormatError& e) {
        std::cerr << path << ": " << e.what() << '\n';
        return kExitInput;
    } catch (const BuildError& e) {
        std::cerr << path << ": " << e.what() << '\n';
        return kExitInput;
    }
    const auto violations = validate_game(spec);
    if (!violations.empty()) {
        std::cerr << path << ": " << violations.size() << " violation(s)\n";
        for (const auto& v : violations) std::cerr << "  " << v.location << ": " << v.message << '\n';
        return kExitInput;
    }
    std::cout << path << ": ok (" << spec.num_states() << " states, " << spec.num_human_actions() << " human actions, "
              << spec.num_robot_actions() << " robot actions, " << spec.num_objectives() << " objectives, horizon "
              << spec.horizon << ")\n";
    return 0;
}

int cmd_compile(const std::string& path, const std::string& out) {
    RunConfig c;
    c.domain = path;
    const auto spec = load_spec(c);
    const auto text = game_to_json(*spec).dump(1) + "\n";
    if (out.empty() || out == "-") std::cout << text;
    else write_text_file(out, text);
    return 0;
}

// --- solve ------------------------------------------------------------------

int cmd_solve(const RunFlags& flags) {
    const auto c = flags.resolve();
    const auto spec = load_spec(c);
    const auto sol = solve_for(c, flags, spec, false);
    const fs::path dir = c.output_dir;
    const auto cfg = c.to_json();

    const SolveReport& report = sol.cirl ? sol.cirl->report : sol.literal->report;
    const fs::path archive = dir / (c.mode == RobotKind::CirlPragmatic ? "solution_cirl.bin" : "solution_irl.bin");
    if (sol.cirl) write_archive(archive, *sol.cirl, cfg);
    else write_archive(archive, *sol.literal, cfg);

    json report_doc = {{"config", cfg}, {"config_hash", c.hash()}, {"report", report.to_json()}};
    if (sol.cirl) {
        const auto v = start_value(*sol.cirl, 0, Belief::normalized(objective_posterior_given_state(*spec, 0)));
        report_doc["start_value"] = {{"per_objective", v.per_objective}, {"expected", v.expected}};
    }
    write_text_file(dir / "solve_report.json", report_doc.dump(2) + "\n");

    std::cout << "solved " << c.domain << " (" << (c.mode == RobotKind::CirlPragmatic ? "cirl" : "irl") << ", "
              << c.model.label() << ", m=" << c.resolution_for(*spec) << ") in " << fixed(report.wall_clock_seconds, 2)
              << " s\n"
              << "  cells: " << report.iterations.size() << ", non-converged: " << report.non_converged.size() << '\n'
              << "  archive: " << archive.string() << "\n  report:  " << (dir / "solve_report.json").string() << '\n';
    return 0;
}

// --- simulate ---------------------------------------------------------------

struct SimulateFlags {
    std::string archive;
    std::string human = "pedagogic";
    std::string true_recipe = "random";
    std::string script;
};

int cmd_simulate(const RunFlags& flags, const SimulateFlags& sf) {
    auto c = flags.resolve();
    Solutions sol;
    if (!sf.archive.empty()) {
        auto loaded = read_archive(sf.archive);
        sol = loaded.solutions;
        c.model = sol.model();
        c.mode = sol.cirl ? RobotKind::CirlPragmatic : RobotKind::IrlLiteral;
    }
    HumanKind human = sf.script.empty() ? human_kind_from_string(sf.human) : HumanKind::Scripted;
    if (sf.archive.empty()) {
        const auto spec = load_spec(c);
        const bool need_both = (c.mode == RobotKind::CirlPragmatic) != (human == HumanKind::Pedagogic) &&
                               human != HumanKind::Scripted;
        sol = solve_for(c, flags, spec, need_both);
    }
    const auto& spec = *sol.spec;
    const Condition cond{c.mode, human, c.model, c.domain};
    const auto theta = pick_objective(spec, sf.true_recipe, c.seed);
    const auto script = parse_script(spec, sf.script);
    const auto trace = simulate_episode(cond, sol, theta, c.seed, script);

    std::cout << "true objective: " << spec.objectives[theta] << '\n';
    for (const auto& t : trace.turns)
        std::cout << "turn " << t.t + 1 << ": belief [" << belief_text(spec, t.belief) << "]  robot "
                  << spec.robot_actions[t.robot_action] << ", human " << spec.human_actions[t.human_action] << '\n';
    std::cout << "final: " << spec.states[trace.final_state] << "  belief [" << belief_text(spec, trace.final_belief)
              << "]  " << (trace.success ? "success" : "failure") << '\n';

    const fs::path out = fs::path(c.output_dir) / "trace.jsonl";
    json header = {{"type", "config"}, {"config", c.to_json()}, {"config_hash", c.hash()}};
    write_text_file(out, header.dump() + "\n" + trace.to_jsonl(spec));
    std::cout << "trace: " << out.string() << '\n';
    return 0;
}

// --- benchmark --------------------------------------------------------------

struct BenchmarkFlags {
    std::vector<double> betas;
    bool assert_ordering = false;
    std::size_t monte_carlo = 0;
};

int cmd_benchmark(RunFlags flags, const BenchmarkFlags& bf) {
    if (flags.domain.empty() && flags.config_file.empty()) flags.domain = "chefworld4";
    const bool rational = flags.rational;
    flags.rational = false;
    const auto c = flags.resolve();
    const auto spec = load_spec(c);

    std::vector<RationalityModel> models;
    for (double b : bf.betas) models.push_back(RationalityModel::boltzmann(b));
    if (rational) models.push_back(RationalityModel::rational(flags.epsilon.value_or(RationalityModel::kDefaultRationalEpsilon)));
    if (models.empty())
        models = {RationalityModel::boltzmann(1.0), RationalityModel::boltzmann(2.5), RationalityModel::boltzmann(5.0),
                  RationalityModel::rational()};

    BenchmarkOptions opts;
    opts.grid_resolution = c.resolution_for(*spec);
    opts.solver = flags.solver(c);
    opts.monte_carlo_episodes = bf.monte_carlo;
    opts.seed = c.seed;
    auto report = run_benchmark(spec, models, opts);
    report.config["run"] = c.to_json();
    report.config["run_hash"] = c.hash();

    const fs::path dir = c.output_dir;
    write_text_file(dir / "benchmark.json", report.to_json().dump(2) + "\n");
    write_text_file(dir / "benchmark.txt", report.to_text());
    std::cout << report.to_text();
    double total = 0.0;
    for (const auto& cell : report.cells) total += cell.solve_seconds;
    std::cout << "solve time " << fixed(total, 2) << " s; report: " << (dir / "benchmark.json").string() << '\n';

    if (bf.assert_ordering) {
        const auto failures = check_expected_ordering(report);
        for (const auto& f : failures) std::cerr << "ordering check failed: " << f << '\n';
        if (!failures.empty()) return kExitRuntime;
        std::cout << "ordering checks passed\n";
    }
    return 0;
}

// --- play -------------------------------------------------------------------

struct PlayFlags {
    std::string archive;
    std::string true_recipe = "random";
    bool serve = false;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string journal;
};

PlayServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

int serve(const RunFlags& flags, const PlayFlags& pf) {
    std::optional<fs::path> journal;
    if (!pf.journal.empty()) journal = pf.journal;
    const bool resume = journal && fs::exists(*journal);
    SessionManager live(journal);
    for (auto& sc : builtin_scenarios()) live.add_scenario(std::move(sc));
    if (!flags.domain.empty()) {
        const auto c = flags.resolve();
        live.add_scenario({fs::path(c.domain).stem().string(), c.domain, load_spec(c), c.grid_resolution, flags.solver(c)});
    }
    if (!pf.archive.empty()) live.add_solutions(fs::path(pf.archive).stem().string(), read_archive(pf.archive).solutions);
    if (resume) std::cout << "replayed " << live.replay_journal(*journal) << " journal events\n";

    PlayServer server(live);
    const int port = server.bind(pf.host, pf.port);
    if (port < 0) {
        std::cerr << "cannot bind " << pf.host << ':' << pf.port << '\n';
        return kExitRuntime;
    }
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "play service listening on http://" << pf.host << ':' << port << std::endl;
    server.serve();
    g_server = nullptr;
    return 0;
}

int cmd_play(const RunFlags& flags, const PlayFlags& pf) {
    if (pf.serve) return serve(flags, pf);

    auto c = flags.resolve();
    Solutions sol;
    if (!pf.archive.empty()) {
        sol = read_archive(pf.archive).solutions;
        c.model = sol.model();
        c.mode = sol.cirl ? RobotKind::CirlPragmatic : RobotKind::IrlLiteral;
    } else {
        if (c.domain.empty()) c.domain = "chefworld2";
        sol = solve_for(c, flags, load_spec(c), false);
    }
    const auto& spec = *sol.spec;
    const auto theta = pick_objective(spec, pf.true_recipe, c.seed);
    const Condition cond{c.mode, HumanKind::Scripted, c.model, c.domain};
    EpisodeRunner runner(sol, cond, theta, c.seed);

    std::cout << "you want: " << spec.objectives[theta] << "  (robot: "
              << (c.mode == RobotKind::CirlPragmatic ? "pragmatic" : "literal") << ", " << c.model.label() << ")\n";
    bool closed = false;
    while (!runner.finished()) {
        std::cout << "\nturn " << runner.turn() + 1 << '/' << spec.horizon << "  " << spec.states[runner.state()] << '\n'
                  << "robot belief: " << belief_text(spec, runner.belief()) << '\n'
                  << "robot action: " << spec.robot_actions[runner.robot_action()] << '\n'
                  << "your actions:";
        const auto legal = runner.legal_human_actions();
        for (auto a : legal) std::cout << "  [" << a << "] " << spec.human_actions[a];
        std::cout << "\n> " << std::flush;

        std::string line;
        if (!std::getline(std::cin, line)) {
            closed = true;
            break;
        }
        const auto b = line.find_first_not_of(" \t\r");
        const auto e = line.find_last_not_of(" \t\r");
        const std::string input = b == std::string::npos ? "" : line.substr(b, e - b + 1);
        std::optional<std::size_t> chosen;
        for (auto a : legal)
            if (spec.human_actions[a] == input || std::to_string(a) == input) chosen = a;
        if (!chosen) {
            std::cout << "'" << input << "' is not a legal action here; pick one of the listed actions\n";
            continue;
        }
        runner.advance(*chosen);
        std::cout << "robot belief after your move: " << belief_text(spec, runner.belief()) << '\n';
    }

    const auto& trace = runner.trace();
    if (closed) {
        std::cout << "\ninput closed after " << trace.turns.size() << " turn(s)\n";
    } else {
        std::cout << "\nfinal kitchen: " << spec.states[trace.final_state] << '\n'
                  << (trace.success ? "success: " + spec.objectives[theta] + " is ready" : "failure: no " + spec.objectives[theta])
                  << '\n';
    }
    const fs::path out = fs::path(c.output_dir) / "play_trace.jsonl";
    json header = {{"type", "config"}, {"config", c.to_json()}, {"config_hash", c.hash()}};
    write_text_file(out, header.dump() + "\n" + trace.to_jsonl(spec));
    std::cout << "trace saved to " << out.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cooperative inverse reinforcement learning: solver, simulator, benchmark and play service"};
    app.require_subcommand(1);
    int rc = 0;

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "check a domain file");
    validate->add_option("domain", validate_path, "domain file")->required();
    validate->callback([&] { rc = cmd_validate(validate_path); });

    std::string compile_path, compile_out;
    auto* compile = app.add_subcommand("compile", "expand a domain into the flat game format");
    compile->add_option("domain", compile_path, "domain file")->required();
    compile->add_option("-o,--output", compile_out, "output file (default stdout)");
    compile->callback([&] { rc = cmd_compile(compile_path, compile_out); });

    RunFlags solve_flags;
    auto* solve = app.add_subcommand("solve", "solve a game and write a solution archive");
    solve_flags.add_to(*solve);
    solve->callback([&] { rc = cmd_solve(solve_flags); });

    RunFlags sim_flags;
    SimulateFlags sim_extra;
    auto* simulate = app.add_subcommand("simulate", "run one episode and write its trace");
    sim_flags.add_to(*simulate);
    simulate->add_option("--archive", sim_extra.archive, "solution archive to use instead of solving");
    simulate->add_option("--human", sim_extra.human, "pedagogic | expert")->check(CLI::IsMember({"pedagogic", "expert"}));
    simulate->add_option("--true-recipe", sim_extra.true_recipe, "objective name or 'random'");
    simulate->add_option("--script", sim_extra.script, "comma-separated human actions (scripted human)");
    simulate->callback([&] { rc = cmd_simulate(sim_flags, sim_extra); });

    RunFlags bench_flags;
    BenchmarkFlags bench_extra;
    auto* bench = app.add_subcommand("benchmark", "IRL vs. CIRL success table");
    bench_flags.add_to(*bench, false);
    bench->add_option("--beta", bench_extra.betas, "Boltzmann β column (repeatable)");
    bench->add_flag("--assert-ordering,--assert-paper-ordering", bench_extra.assert_ordering, "exit 1 unless the expected orderings hold");
    bench->add_option("--monte-carlo", bench_extra.monte_carlo, "episodes for the Monte Carlo cross-check");
    bench->callback([&] { rc = cmd_benchmark(bench_flags, bench_extra); });

    RunFlags play_flags;
    PlayFlags play_extra;
    auto* play = app.add_subcommand("play", "take the human role in the terminal, or serve the HTTP play service");
    play_flags.add_to(*play);
    play->add_option("--archive", play_extra.archive, "solution archive");
    play->add_option("--true-recipe", play_extra.true_recipe, "objective name or 'random'");
    play->add_flag("--serve", play_extra.serve, "run the HTTP play service");
    play->add_option("--host", play_extra.host, "service host");
    play->add_option("--port", play_extra.port, "service port (0 = any)");
    play->add_option("--journal", play_extra.journal, "append-only session journal");
    play->callback([&] { rc = cmd_play(play_flags, play_extra); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    } catch (const Exit& e) {
        return e.code;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const BuildError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return rc;
}
