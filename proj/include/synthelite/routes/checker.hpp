#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthelite/routes/route.hpp"

namespace synthelite::routes {

/// Where in the route a rule looks. Steps are counted forward: the final
/// step forms the target (tree depth 1), the first step is the deepest.
struct Position {
    enum class Kind { Any, FinalStep, FirstStep, WithinLastN };
    Kind kind = Kind::Any;
    int n = 0;

    friend bool operator==(const Position&, const Position&) = default;
};

struct CheckRule {
    std::string id;
    std::string smirks;      ///< forward reactants>>product; empty when predicate is set
    std::string predicate;   ///< name of a registered plugin
    Position position;
    bool negate = false;
    std::optional<std::string> before; ///< this rule's step happens earlier than that rule's
    std::optional<std::string> after;
};

struct ConstraintChecker {
    std::string id;
    std::vector<CheckRule> rules;
};

/// Parses and validates a checker. Throws SchemaError, PatternError.
ConstraintChecker checker_from_json(const nlohmann::json& j);
ConstraintChecker load_checker(const std::filesystem::path& path);
nlohmann::json to_json(const ConstraintChecker& checker);

/// True when every rule holds.
bool check_constraint(const Route& route, const ConstraintChecker& checker);

using RoutePredicate = std::function<bool(const Route&)>;
/// Registers a bespoke predicate usable as {"predicate": name}.
void register_predicate(const std::string& name, RoutePredicate predicate);

} // namespace synthelite::routes
