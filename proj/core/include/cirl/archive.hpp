#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "cirl/evaluator.hpp"
#include "cirl/solver.hpp"

namespace cirl {

inline constexpr int kArchiveFormatVersion = 1;

/// Binary solution file:
///
///   8 bytes   magic "CIRLSOL1"
///   u32       format version
///   u64       header length n
///   n bytes   header JSON: kind ("cirl" | "irl"), config, config_hash, game,
///             grid, model, solver, dims, report
///   payload   little-endian tables in the order listed under header.tables
///
/// The header embeds the full game, so an archive reloads without its
/// domain file.
struct LoadedArchive {
    std::string kind;
    nlohmann::json header;
    Solutions solutions;
};

void write_archive(const std::filesystem::path& path, const CirlSolution& sol, const nlohmann::json& config = {});
void write_archive(const std::filesystem::path& path, const LiteralSolution& sol, const nlohmann::json& config = {});

/// Throws FormatError on a bad magic, version, header or truncated payload.
LoadedArchive read_archive(const std::filesystem::path& path);

nlohmann::json model_to_json(const RationalityModel& model);
RationalityModel model_from_json(const nlohmann::json& j);

}  // namespace cirl
