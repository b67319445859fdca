#include "cirl/chefworld.hpp"

#include <algorithm>
#include <numeric>

#include "cirl/game_io.hpp"

namespace cirl {

using nlohmann::json;

namespace {

struct ActionEffect {
    std::size_t ingredient = 0;
    std::size_t from_level = 0;  // effect moves from_level -> from_level + 1
    bool is_wait = true;
};

bool permits(Permission p, Actor actor) {
    if (p == Permission::Both) return true;
    return (p == Permission::HumanOnly) == (actor == Actor::Human);
}

std::vector<std::pair<std::string, ActionEffect>> action_table(const ChefWorldDomain& d, Actor actor) {
    std::vector<std::pair<std::string, ActionEffect>> out;
    for (std::size_t i = 0; i < d.ingredients.size(); ++i) {
        const auto& ing = d.ingredients[i];
        for (std::size_t k = 0; k < ing.steps.size(); ++k)
            if (permits(ing.steps[k].who, actor))
                out.push_back({ing.steps[k].verb + " " + ing.name, ActionEffect{i, k, false}});
    }
    out.push_back({kWaitLabel, ActionEffect{}});
    return out;
}

std::size_t ingredient_index(const ChefWorldDomain& d, const std::string& name) {
    for (std::size_t i = 0; i < d.ingredients.size(); ++i)
        if (d.ingredients[i].name == name) return i;
    throw BuildError("unknown ingredient '" + name + "'");
}

std::size_t level_index(const Ingredient& ing, const std::string& state) {
    auto it = std::find(ing.states.begin(), ing.states.end(), state);
    if (it == ing.states.end()) throw BuildError("ingredient '" + ing.name + "' has no state '" + state + "'");
    return static_cast<std::size_t>(it - ing.states.begin());
}

void check_domain(const ChefWorldDomain& d) {
    if (d.ingredients.empty()) throw BuildError("chefworld needs at least one ingredient");
    if (d.recipes.empty()) throw BuildError("chefworld needs at least one recipe");
    for (const auto& ing : d.ingredients) {
        if (ing.states.size() < 2) throw BuildError("ingredient '" + ing.name + "' needs at least 2 states");
        if (ing.steps.size() != ing.states.size() - 1)
            throw BuildError("ingredient '" + ing.name + "' needs one preparation per adjacent state pair");
    }
    for (std::size_t i = 0; i < d.ingredients.size(); ++i)
        for (std::size_t j = i + 1; j < d.ingredients.size(); ++j)
            if (d.ingredients[i].name == d.ingredients[j].name)
                throw BuildError("duplicate ingredient '" + d.ingredients[i].name + "'");
    if (d.horizon < 1) throw BuildError("horizon must be at least 1");
}

std::string kitchen_label(const ChefWorldDomain& d, const KitchenState& k) {
    if (k.served) return kServedLabel;
    std::string label;
    for (std::size_t i = 0; i < d.ingredients.size(); ++i) {
        if (i) label += ' ';
        label += d.ingredients[i].name + "=" + d.ingredients[i].states[k.levels[i]];
    }
    return label;
}

const char* permission_name(Permission p) {
    switch (p) {
        case Permission::HumanOnly: return "human";
        case Permission::RobotOnly: return "robot";
        case Permission::Both: return "both";
    }
    return "both";
}

Permission permission_from(const std::string& s) {
    if (s == "human" || s == "H") return Permission::HumanOnly;
    if (s == "robot" || s == "R") return Permission::RobotOnly;
    if (s == "both") return Permission::Both;
    throw BuildError("unknown permission '" + s + "' (expected human, robot or both)");
}

}  // namespace

std::size_t num_kitchen_states(const ChefWorldDomain& d) {
    std::size_t n = 1;
    for (const auto& ing : d.ingredients) n *= ing.states.size();
    return n;
}

std::size_t encode_kitchen(const ChefWorldDomain& d, const KitchenState& k) {
    if (k.served) return num_kitchen_states(d);
    if (k.levels.size() != d.ingredients.size()) throw UsageError("kitchen state has wrong number of ingredients");
    std::size_t idx = 0;
    for (std::size_t i = 0; i < d.ingredients.size(); ++i) {
        if (k.levels[i] >= d.ingredients[i].states.size()) throw UsageError("ingredient level out of range");
        idx = idx * d.ingredients[i].states.size() + k.levels[i];
    }
    return idx;
}

KitchenState decode_kitchen(const ChefWorldDomain& d, std::size_t state) {
    const std::size_t n = num_kitchen_states(d);
    if (state > n) throw UsageError("kitchen state index out of range");
    KitchenState k;
    k.levels.assign(d.ingredients.size(), 0);
    if (state == n) {
        k.served = true;
        return k;
    }
    for (std::size_t i = d.ingredients.size(); i-- > 0;) {
        const auto card = d.ingredients[i].states.size();
        k.levels[i] = state % card;
        state /= card;
    }
    return k;
}

std::vector<std::vector<std::size_t>> recipe_targets(const ChefWorldDomain& d) {
    std::vector<std::vector<std::size_t>> out;
    for (const auto& recipe : d.recipes) {
        std::vector<std::size_t> target(d.ingredients.size(), 0);
        for (const auto& [ing_name, state] : recipe.targets) {
            const auto i = ingredient_index(d, ing_name);
            target[i] = level_index(d.ingredients[i], state);
        }
        out.push_back(std::move(target));
    }
    return out;
}

GameSpec build_chefworld(const ChefWorldDomain& d) {
    check_domain(d);
    const auto targets = recipe_targets(d);
    const auto human = action_table(d, Actor::Human);
    const auto robot = action_table(d, Actor::Robot);

    GameSpec spec;
    const std::size_t kitchens = num_kitchen_states(d);
    const std::size_t served = kitchens;
    for (std::size_t s = 0; s <= kitchens; ++s) spec.states.push_back(kitchen_label(d, decode_kitchen(d, s)));
    for (const auto& [label, effect] : human) spec.human_actions.push_back(label);
    for (const auto& [label, effect] : robot) spec.robot_actions.push_back(label);
    for (const auto& r : d.recipes) spec.objectives.push_back(r.name);
    spec.discount = d.discount;
    spec.horizon = d.horizon;

    const std::size_t ns = spec.num_states(), nh = human.size(), nr = robot.size(), nt = d.recipes.size();
    spec.transition.assign(ns * nh * nr, {});
    spec.reward.assign(ns * nh * nr * nt, 0.0);
    spec.human_legal.assign(ns * nh, 0);
    spec.robot_legal.assign(ns * nr, 0);
    spec.terminal.assign(ns, 0);
    spec.terminal[served] = 1;

    auto legal = [](const ActionEffect& e, const KitchenState& k) {
        return e.is_wait || (!k.served && k.levels[e.ingredient] == e.from_level);
    };

    for (std::size_t s = 0; s < ns; ++s) {
        const auto k = decode_kitchen(d, s);
        for (std::size_t a = 0; a < nh; ++a) spec.human_legal[s * nh + a] = legal(human[a].second, k);
        for (std::size_t a = 0; a < nr; ++a) spec.robot_legal[s * nr + a] = legal(robot[a].second, k);

        for (std::size_t ah = 0; ah < nh; ++ah)
            for (std::size_t ar = 0; ar < nr; ++ar) {
                const auto j = spec.joint_index(s, ah, ar);
                const auto& eh = human[ah].second;
                const auto& er = robot[ar].second;
                if (k.served || !legal(eh, k) || !legal(er, k)) {
                    spec.transition[j] = {{s, 1.0}};
                    continue;
                }
                auto next = k;
                // Both agents performing the same preparation apply it once.
                if (!eh.is_wait) next.levels[eh.ingredient] = eh.from_level + 1;
                if (!er.is_wait) next.levels[er.ingredient] = er.from_level + 1;

                bool matched = false;
                for (std::size_t th = 0; th < nt; ++th)
                    if (next.levels == targets[th] && next.levels != k.levels) {
                        spec.reward[j * nt + th] = 1.0;
                        matched = true;
                    }
                spec.transition[j] = {{matched ? served : encode_kitchen(d, next), 1.0}};
            }
    }

    KitchenState start;
    start.levels.assign(d.ingredients.size(), 0);
    for (const auto& [ing_name, state] : d.initial_state) {
        const auto i = ingredient_index(d, ing_name);
        start.levels[i] = level_index(d.ingredients[i], state);
    }

    std::vector<double> weights(nt, 1.0);
    if (!d.prior.empty()) {
        std::fill(weights.begin(), weights.end(), 0.0);
        for (const auto& [name, w] : d.prior) {
            auto it = std::find_if(d.recipes.begin(), d.recipes.end(), [&](const Recipe& r) { return r.name == name; });
            if (it == d.recipes.end()) throw BuildError("prior references unknown recipe '" + name + "'");
            if (!(w >= 0.0)) throw BuildError("prior weight for '" + name + "' must be non-negative");
            weights[static_cast<std::size_t>(it - d.recipes.begin())] = w;
        }
    }
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw BuildError("prior has no mass");
    spec.prior.assign(ns * nt, 0.0);
    const auto s0 = encode_kitchen(d, start);
    for (std::size_t th = 0; th < nt; ++th) spec.prior[s0 * nt + th] = weights[th] / total;
    return spec;
}

ChefWorldDomain chefworld_domain_from_json(const json& doc) {
    try {
        if (doc.at("format_version").get<int>() != kGameFormatVersion)
            throw FormatError("unsupported format_version " + doc.at("format_version").dump());
        if (doc.value("kind", "") != "chefworld") throw FormatError("expected kind 'chefworld'");
        ChefWorldDomain d;
        for (const auto& jing : doc.at("ingredients")) {
            Ingredient ing;
            ing.name = jing.at("name").get<std::string>();
            ing.states = jing.at("states").get<std::vector<std::string>>();
            for (const auto& jstep : jing.at("steps"))
                ing.steps.push_back({jstep.at("verb").get<std::string>(), permission_from(jstep.at("who").get<std::string>())});
            d.ingredients.push_back(std::move(ing));
        }
        for (const auto& jr : doc.at("recipes")) {
            Recipe r;
            r.name = jr.at("name").get<std::string>();
            r.targets = jr.at("targets").get<std::map<std::string, std::string>>();
            d.recipes.push_back(std::move(r));
        }
        d.horizon = doc.value("horizon", d.horizon);
        d.discount = doc.value("discount", d.discount);
        if (doc.contains("initial_state"))
            d.initial_state = doc.at("initial_state").get<std::map<std::string, std::string>>();
        if (doc.contains("prior")) d.prior = doc.at("prior").get<std::map<std::string, double>>();
        return d;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed chefworld document: ") + e.what());
    }
}

json chefworld_domain_to_json(const ChefWorldDomain& d) {
    json doc;
    doc["format_version"] = kGameFormatVersion;
    doc["kind"] = "chefworld";
    json ings = json::array();
    for (const auto& ing : d.ingredients) {
        json steps = json::array();
        for (const auto& st : ing.steps) steps.push_back({{"verb", st.verb}, {"who", permission_name(st.who)}});
        ings.push_back({{"name", ing.name}, {"states", ing.states}, {"steps", steps}});
    }
    doc["ingredients"] = std::move(ings);
    json recipes = json::array();
    for (const auto& r : d.recipes) recipes.push_back({{"name", r.name}, {"targets", r.targets}});
    doc["recipes"] = std::move(recipes);
    doc["horizon"] = d.horizon;
    doc["discount"] = d.discount;
    if (!d.initial_state.empty()) doc["initial_state"] = d.initial_state;
    if (!d.prior.empty()) doc["prior"] = d.prior;
    return doc;
}

std::vector<Ingredient> kitchen_ingredients() {
    return {
        {"spinach", {"absent", "chopped"}, {{"chop", Permission::Both}}},
        {"tomatoes", {"absent", "chopped", "pureed"}, {{"chop", Permission::Both}, {"puree", Permission::RobotOnly}}},
        {"bread", {"absent", "sliced", "toasted"}, {{"slice", Permission::Both}, {"toast", Permission::RobotOnly}}},
    };
}

Recipe soup_recipe() { return {"soup", {{"spinach", "absent"}, {"tomatoes", "pureed"}, {"bread", "toasted"}}}; }
Recipe salad_recipe() { return {"salad", {{"spinach", "chopped"}, {"tomatoes", "chopped"}, {"bread", "toasted"}}}; }
Recipe toast_plate_recipe() {
    return {"toast_plate", {{"spinach", "absent"}, {"tomatoes", "absent"}, {"bread", "toasted"}}};
}
Recipe tomato_salad_recipe() {
    return {"tomato_salad", {{"spinach", "chopped"}, {"tomatoes", "pureed"}, {"bread", "sliced"}}};
}

ChefWorldDomain two_recipe_scenario() {
    ChefWorldDomain d;
    d.ingredients = kitchen_ingredients();
    d.recipes = {soup_recipe(), salad_recipe()};
    d.horizon = 4;
    d.discount = 1.0;
    d.prior = {{"soup", 0.3}, {"salad", 0.7}};
    return d;
}

ChefWorldDomain four_recipe_benchmark() {
    ChefWorldDomain d;
    d.ingredients = kitchen_ingredients();
    d.recipes = {soup_recipe(), salad_recipe(), toast_plate_recipe(), tomato_salad_recipe()};
    d.horizon = 10;
    d.discount = 1.0;
    return d;
}

}  // namespace cirl
