#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "cirl/game.hpp"

namespace cirl {

inline constexpr int kGameFormatVersion = 1;

/// Malformed document (bad JSON, missing fields, wrong format_version).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat game document:
///
///   { "format_version": 1, "kind": "flat",
///     "states": [...], "human_actions": [...], "robot_actions": [...], "objectives": [...],
///     "transitions": [[s, a_H, a_R, [[s', p], ...]], ...],     // every joint action
///     "rewards":     [[s, a_H, a_R, θ, r], ...],                // nonzero entries only
///     "prior":       [[s, θ, p], ...],                          // nonzero entries only
///     "human_legal": [[a_H, ...] per state]  (optional),
///     "robot_legal": [[a_R, ...] per state]  (optional),
///     "terminal_states": [s, ...]            (optional),
///     "discount": γ, "horizon": n }
///
/// Structural errors throw FormatError; semantic problems (rows not summing
/// to one, and so on) are left for validate_game.
GameSpec game_from_json(const nlohmann::json& doc);
nlohmann::json game_to_json(const GameSpec& spec);

/// Loads either a flat game or a factored chefworld domain, dispatching on "kind".
GameSpec load_game_file(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// FNV-1a 64 over bytes.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

/// Hash of the canonical (sorted-key, compact) serialisation.
std::string json_hash(const nlohmann::json& doc);

}  // namespace cirl
