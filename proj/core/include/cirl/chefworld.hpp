#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cirl/game.hpp"

namespace cirl {

class BuildError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Permission { HumanOnly, RobotOnly, Both };

/// Advances an ingredient from states[i] to states[i + 1].
struct Preparation {
    std::string verb;
    Permission who = Permission::Both;
};

struct Ingredient {
    std::string name;
    /// Ordered, first one is the untouched state ("absent").
    std::vector<std::string> states;
    /// One per adjacent pair of states.
    std::vector<Preparation> steps;
};

struct Recipe {
    std::string name;
    /// Ingredient name -> required state. Ingredients left out must stay in
    /// their first state.
    std::map<std::string, std::string> targets;
};

struct ChefWorldDomain {
    std::vector<Ingredient> ingredients;
    std::vector<Recipe> recipes;
    int horizon = 10;
    double discount = 1.0;
    /// State name per ingredient; empty = all ingredients in their first state.
    std::map<std::string, std::string> initial_state;
    /// Recipe name -> prior weight; empty = uniform.
    std::map<std::string, double> prior;
};

/// Per-ingredient preparation level, or the absorbing "served" state that is
/// entered as soon as the kitchen matches any recipe.
struct KitchenState {
    std::vector<std::size_t> levels;
    bool served = false;

    bool operator==(const KitchenState&) const = default;
};

inline constexpr const char* kServedLabel = "served";
inline constexpr const char* kWaitLabel = "wait";

/// Compiles the factored domain: S = product of ingredient states plus one
/// absorbing served state; A_H / A_R = permitted preparations plus wait;
/// deterministic T; r = 1 on the turn the kitchen first matches recipe θ.
/// Throws BuildError on dangling recipe references or malformed ingredients.
GameSpec build_chefworld(const ChefWorldDomain& domain);

/// Ingredient configurations, not counting the served state.
std::size_t num_kitchen_states(const ChefWorldDomain& domain);
std::size_t encode_kitchen(const ChefWorldDomain& domain, const KitchenState& k);
KitchenState decode_kitchen(const ChefWorldDomain& domain, std::size_t state);
/// Target levels of every recipe, in recipe order.
std::vector<std::vector<std::size_t>> recipe_targets(const ChefWorldDomain& domain);

ChefWorldDomain chefworld_domain_from_json(const nlohmann::json& doc);
nlohmann::json chefworld_domain_to_json(const ChefWorldDomain& domain);

/// Spinach (absent, chopped), tomatoes (absent, chopped, pureed), bread
/// (absent, sliced, toasted). Either agent chops or slices; only the robot
/// purees or toasts.
std::vector<Ingredient> kitchen_ingredients();

Recipe soup_recipe();
Recipe salad_recipe();
Recipe toast_plate_recipe();
Recipe tomato_salad_recipe();

/// Soup vs. salad, horizon 4, robot starting with 0.7 on salad.
ChefWorldDomain two_recipe_scenario();
/// Soup, salad, toast plate, tomato salad; horizon 10; uniform prior.
ChefWorldDomain four_recipe_benchmark();

}  // namespace cirl
