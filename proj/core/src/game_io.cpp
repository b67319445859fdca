#include "cirl/game_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cirl/chefworld.hpp"

namespace cirl {

using nlohmann::json;

namespace {

const json& require(const json& doc, const char* key) {
    if (!doc.is_object() || !doc.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
    return doc.at(key);
}

std::vector<std::string> string_list(const json& doc, const char* key) {
    const auto& arr = require(doc, key);
    if (!arr.is_array()) throw FormatError(std::string("field '") + key + "' must be an array");
    std::vector<std::string> out;
    for (const auto& v : arr) out.push_back(v.get<std::string>());
    return out;
}

std::size_t checked_index(const json& v, std::size_t bound, const char* what) {
    if (!v.is_number_integer() || v.get<long long>() < 0 || static_cast<std::size_t>(v.get<long long>()) >= bound)
        throw FormatError(std::string(what) + " index out of range: " + v.dump());
    return v.get<std::size_t>();
}

std::vector<std::uint8_t> legal_mask(const json& doc, const char* key, std::size_t ns, std::size_t na) {
    if (!doc.contains(key)) return {};
    const auto& arr = doc.at(key);
    if (!arr.is_array() || arr.size() != ns) throw FormatError(std::string("'") + key + "' needs one list per state");
    std::vector<std::uint8_t> mask(ns * na, 0);
    for (std::size_t s = 0; s < ns; ++s)
        for (const auto& a : arr[s]) mask[s * na + checked_index(a, na, key)] = 1;
    return mask;
}

}  // namespace

GameSpec game_from_json(const json& doc) {
    try {
        if (require(doc, "format_version").get<int>() != kGameFormatVersion)
            throw FormatError("unsupported format_version " + doc.at("format_version").dump());
        if (doc.contains("kind") && doc.at("kind") != "flat")
            throw FormatError("expected kind 'flat', found " + doc.at("kind").dump());

        GameSpec spec;
        spec.states = string_list(doc, "states");
        spec.human_actions = string_list(doc, "human_actions");
        spec.robot_actions = string_list(doc, "robot_actions");
        spec.objectives = string_list(doc, "objectives");
        spec.discount = require(doc, "discount").get<double>();
        spec.horizon = require(doc, "horizon").get<int>();

        const std::size_t ns = spec.num_states(), nh = spec.num_human_actions(), nr = spec.num_robot_actions(),
                          nt = spec.num_objectives();
        spec.transition.assign(ns * nh * nr, {});
        spec.reward.assign(ns * nh * nr * nt, 0.0);
        spec.prior.assign(ns * nt, 0.0);

        std::vector<std::uint8_t> seen(ns * nh * nr, 0);
        for (const auto& entry : require(doc, "transitions")) {
            if (!entry.is_array() || entry.size() != 4) throw FormatError("transition entry must be [s, a_H, a_R, row]");
            const auto s = checked_index(entry[0], ns, "state");
            const auto ah = checked_index(entry[1], nh, "human action");
            const auto ar = checked_index(entry[2], nr, "robot action");
            const auto j = spec.joint_index(s, ah, ar);
            if (seen[j]) throw FormatError("duplicate transition entry " + entry.dump());
            seen[j] = 1;
            for (const auto& o : entry[3]) {
                if (!o.is_array() || o.size() != 2) throw FormatError("transition outcome must be [s', p]");
                spec.transition[j].push_back({checked_index(o[0], ns, "next state"), o[1].get<double>()});
            }
        }
        for (const auto& entry : doc.value("rewards", json::array())) {
            if (!entry.is_array() || entry.size() != 5) throw FormatError("reward entry must be [s, a_H, a_R, θ, r]");
            const auto j = spec.joint_index(checked_index(entry[0], ns, "state"), checked_index(entry[1], nh, "human action"),
                                            checked_index(entry[2], nr, "robot action"));
            spec.reward[j * nt + checked_index(entry[3], nt, "objective")] = entry[4].get<double>();
        }
        for (const auto& entry : require(doc, "prior")) {
            if (!entry.is_array() || entry.size() != 3) throw FormatError("prior entry must be [s, θ, p]");
            spec.prior[checked_index(entry[0], ns, "state") * nt + checked_index(entry[1], nt, "objective")] =
                entry[2].get<double>();
        }
        spec.human_legal = legal_mask(doc, "human_legal", ns, nh);
        spec.robot_legal = legal_mask(doc, "robot_legal", ns, nr);
        if (doc.contains("terminal_states")) {
            spec.terminal.assign(ns, 0);
            for (const auto& s : doc.at("terminal_states")) spec.terminal[checked_index(s, ns, "terminal state")] = 1;
        }
        return spec;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed game document: ") + e.what());
    }
}

json game_to_json(const GameSpec& spec) {
    const std::size_t ns = spec.num_states(), nh = spec.num_human_actions(), nr = spec.num_robot_actions(),
                      nt = spec.num_objectives();
    json doc;
    doc["format_version"] = kGameFormatVersion;
    doc["kind"] = "flat";
    doc["states"] = spec.states;
    doc["human_actions"] = spec.human_actions;
    doc["robot_actions"] = spec.robot_actions;
    doc["objectives"] = spec.objectives;
    doc["discount"] = spec.discount;
    doc["horizon"] = spec.horizon;

    json transitions = json::array(), rewards = json::array(), prior = json::array();
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t ah = 0; ah < nh; ++ah)
            for (std::size_t ar = 0; ar < nr; ++ar) {
                json row = json::array();
                for (const auto& o : spec.row(s, ah, ar)) row.push_back({o.next, o.probability});
                transitions.push_back({s, ah, ar, row});
                for (std::size_t th = 0; th < nt; ++th) {
                    const double r = spec.reward_at(s, ah, ar, th);
                    if (r != 0.0) rewards.push_back({s, ah, ar, th, r});
                }
            }
    for (std::size_t s = 0; s < ns; ++s)
        for (std::size_t th = 0; th < nt; ++th)
            if (spec.prior_at(s, th) != 0.0) prior.push_back({s, th, spec.prior_at(s, th)});
    doc["transitions"] = std::move(transitions);
    doc["rewards"] = std::move(rewards);
    doc["prior"] = std::move(prior);

    auto mask = [&](bool human) {
        json arr = json::array();
        for (std::size_t s = 0; s < ns; ++s)
            arr.push_back(legal_actions(spec, StateId{s}, human ? Actor::Human : Actor::Robot));
        return arr;
    };
    if (!spec.human_legal.empty()) doc["human_legal"] = mask(true);
    if (!spec.robot_legal.empty()) doc["robot_legal"] = mask(false);
    if (!spec.terminal.empty()) {
        json t = json::array();
        for (std::size_t s = 0; s < ns; ++s)
            if (spec.is_terminal(s)) t.push_back(s);
        doc["terminal_states"] = std::move(t);
    }
    return doc;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

GameSpec load_game_file(const std::filesystem::path& path) {
    auto doc = read_json_file(path);
    const std::string kind = doc.is_object() ? doc.value("kind", "flat") : "flat";
    if (kind == "chefworld") return build_chefworld(chefworld_domain_from_json(doc));
    return game_from_json(doc);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string json_hash(const json& doc) { return hex64(fnv1a64(doc.dump())); }

}  // namespace cirl
