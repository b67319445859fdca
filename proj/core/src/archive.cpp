#include "cirl/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <functional>

#include "cirl/game_io.hpp"

namespace cirl {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'C', 'I', 'R', 'L', 'S', 'O', 'L', '1'};

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

template <class T>
void put(std::ofstream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
void put_table(std::ofstream& out, const std::vector<T>& v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T>
T get(std::ifstream& in, const std::filesystem::path& path) {
    T value{};
    if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw FormatError(path.string() + ": truncated archive");
    return value;
}

template <class T>
void get_table(std::ifstream& in, std::vector<T>& v, std::size_t n, const std::filesystem::path& path) {
    v.resize(n);
    if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T))))
        throw FormatError(path.string() + ": truncated archive payload");
}

json dims_json(const QTable& q) {
    return {{"horizon", q.horizon()},
            {"states", q.num_states()},
            {"grid_points", q.num_grid_points()},
            {"robot_actions", q.num_robot_actions()},
            {"objectives", q.num_objectives()},
            {"human_actions", q.num_human_actions()}};
}

json report_json(const SolveReport& r) {
    json nc = json::array();
    for (const auto& c : r.non_converged) nc.push_back({c.t, c.s, c.g, c.residual});
    return {{"sweep_max_residual", r.sweep_max_residual}, {"non_converged", nc}, {"config", r.config}};
}

SolveReport report_from_json(const json& j) {
    SolveReport r;
    r.sweep_max_residual = j.at("sweep_max_residual").get<std::vector<double>>();
    for (const auto& c : j.at("non_converged"))
        r.non_converged.push_back({c.at(0).get<int>(), c.at(1).get<std::size_t>(), c.at(2).get<std::size_t>(),
                                   c.at(3).get<double>()});
    r.config = j.at("config");
    return r;
}

json base_header(const char* kind, const GameSpec& spec, const BeliefGrid& grid, const RationalityModel& model,
                 const SolverOptions& options, const json& config) {
    return {{"kind", kind},
            {"config", config},
            {"config_hash", json_hash(config)},
            {"game", game_to_json(spec)},
            {"grid", {{"objectives", grid.dimension()}, {"resolution", grid.resolution()}}},
            {"model", model_to_json(model)},
            {"solver", options.to_json()}};
}

void write_file(const std::filesystem::path& path, const json& header,
                const std::function<void(std::ofstream&)>& payload) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const std::string text = header.dump();
    out.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kArchiveFormatVersion);
    put<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    payload(out);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

SolverOptions options_from_json(const json& j) {
    SolverOptions o;
    o.tol_fp = j.at("tol_fp").get<double>();
    o.max_iter = j.at("max_iter").get<int>();
    o.damping = j.at("damping").get<double>();
    return o;
}

void check_dims(const QTable& q, const json& dims, const std::filesystem::path& path) {
    if (dims_json(q) != dims) throw FormatError(path.string() + ": table dimensions do not match the embedded game");
}

}  // namespace

json model_to_json(const RationalityModel& model) {
    if (model.is_rational()) return {{"kind", "rational"}, {"epsilon", model.epsilon}};
    return {{"kind", "boltzmann"}, {"beta", model.beta}, {"epsilon", model.epsilon}};
}

RationalityModel model_from_json(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "rational") return RationalityModel::rational(j.value("epsilon", RationalityModel::kDefaultRationalEpsilon));
    if (kind == "boltzmann") return RationalityModel::boltzmann(j.at("beta").get<double>(), j.value("epsilon", 0.0));
    throw FormatError("unknown rationality model kind '" + kind + "'");
}

void write_archive(const std::filesystem::path& path, const CirlSolution& sol, const json& config) {
    auto header = base_header("cirl", *sol.spec, sol.grid, sol.model, sol.options, config);
    header["dims"] = dims_json(sol.q);
    header["report"] = report_json(sol.report);
    header["tables"] = {"q:f64", "robot_policy:u32", "iterations:u16"};
    write_file(path, header, [&](std::ofstream& out) {
        put_table(out, sol.q.values());
        put_table(out, sol.robot_policy);
        put_table(out, sol.report.iterations);
    });
}

void write_archive(const std::filesystem::path& path, const LiteralSolution& sol, const json& config) {
    auto header = base_header("irl", *sol.spec, sol.grid, sol.model, SolverOptions{}, config);
    header["solver"] = sol.report.config.value("solver", SolverOptions{}.to_json());
    header["dims"] = dims_json(sol.values);
    header["report"] = report_json(sol.report);
    header["tables"] = {"full:f64", "values:f64", "robot_policy:u32", "iterations:u16"};
    write_file(path, header, [&](std::ofstream& out) {
        put_table(out, sol.full.values());
        put_table(out, sol.values.values());
        put_table(out, sol.robot_policy);
        put_table(out, sol.report.iterations);
    });
}

LoadedArchive read_archive(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open archive " + path.string());
    char magic[sizeof kMagic];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw FormatError(path.string() + ": not a solution archive");
    const auto version = get<std::uint32_t>(in, path);
    if (version != kArchiveFormatVersion)
        throw FormatError(path.string() + ": unsupported archive version " + std::to_string(version));
    const auto header_len = get<std::uint64_t>(in, path);
    if (header_len > (1ull << 31)) throw FormatError(path.string() + ": implausible header length");
    std::string text(header_len, '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(header_len))) throw FormatError(path.string() + ": truncated header");

    LoadedArchive a;
    try {
        a.header = json::parse(text);
        a.kind = a.header.at("kind").get<std::string>();
        auto spec = std::make_shared<const GameSpec>(game_from_json(a.header.at("game")));
        require_valid(*spec);
        const BeliefGrid grid(a.header.at("grid").at("objectives").get<std::size_t>(),
                              a.header.at("grid").at("resolution").get<std::size_t>());
        const auto model = model_from_json(a.header.at("model"));
        const auto options = options_from_json(a.header.at("solver"));
        const auto& dims = a.header.at("dims");
        const int H = spec->horizon;
        const std::size_t ns = spec->num_states(), ng = grid.size();
        const std::size_t cells = static_cast<std::size_t>(H) * ns * ng;
        a.solutions.spec = spec;

        if (a.kind == "cirl") {
            auto sol = std::make_shared<CirlSolution>(CirlSolution{
                spec, grid, model, options,
                QFunction(H, ns, ng, spec->num_robot_actions(), spec->num_objectives(), spec->num_human_actions()),
                {}, report_from_json(a.header.at("report"))});
            check_dims(sol->q, dims, path);
            get_table(in, sol->q.values(), sol->q.values().size(), path);
            get_table(in, sol->robot_policy, cells, path);
            get_table(in, sol->report.iterations, cells, path);
            a.solutions.cirl = std::move(sol);
        } else if (a.kind == "irl") {
            auto sol = std::make_shared<LiteralSolution>(LiteralSolution{
                spec, grid, model,
                FullInfoQ(H, ns, spec->num_robot_actions(), spec->num_objectives(), spec->num_human_actions()),
                QFunction(H, ns, ng, spec->num_robot_actions(), spec->num_objectives(), spec->num_human_actions()),
                {}, report_from_json(a.header.at("report"))});
            check_dims(sol->values, dims, path);
            get_table(in, sol->full.values(), sol->full.values().size(), path);
            get_table(in, sol->values.values(), sol->values.values().size(), path);
            get_table(in, sol->robot_policy, cells, path);
            get_table(in, sol->report.iterations, cells, path);
            a.solutions.literal = std::move(sol);
        } else {
            throw FormatError(path.string() + ": unknown archive kind '" + a.kind + "'");
        }
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": bad archive header: " + e.what());
    }
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError(path.string() + ": trailing bytes after payload");
    return a;
}

}  // namespace cirl
