#include "synthelite/routes/checker.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include "synthelite/chem/smarts.hpp"
#include "synthelite/error.hpp"
#include "synthelite/util/io.hpp"

namespace synthelite::routes {

using nlohmann::json;

namespace {

std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}

std::map<std::string, RoutePredicate>& registry() {
    static std::map<std::string, RoutePredicate> r;
    return r;
}

RoutePredicate lookup_predicate(const std::string& name) {
    std::lock_guard lock(registry_mutex());
    const auto it = registry().find(name);
    if (it == registry().end()) throw SchemaError("unknown predicate '" + name + "'");
    return it->second;
}

Position position_from_json(const json& j) {
    if (j.is_null()) return {};
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "any") return {};
        if (s == "final_step") return {Position::Kind::FinalStep, 0};
        if (s == "first_step") return {Position::Kind::FirstStep, 0};
        throw SchemaError("unknown position '" + s + "'");
    }
    if (j.is_object() && j.size() == 1 && j.contains("within_last_n") && j["within_last_n"].is_number_integer()) {
        const int n = j["within_last_n"].get<int>();
        if (n < 1) throw SchemaError("within_last_n must be at least 1");
        return {Position::Kind::WithinLastN, n};
    }
    throw SchemaError("malformed position " + j.dump());
}

json position_to_json(const Position& p) {
    switch (p.kind) {
    case Position::Kind::Any: return "any";
    case Position::Kind::FinalStep: return "final_step";
    case Position::Kind::FirstStep: return "first_step";
    case Position::Kind::WithinLastN: return json{{"within_last_n", p.n}};
    }
    return "any";
}

void check_smirks(const std::string& smirks) {
    const auto arrow = smirks.find(">>");
    if (smirks.empty() || arrow == std::string::npos) throw PatternError("SMIRKS needs reactants>>product: '" + smirks + "'");
    chem::parse_smarts(smirks.substr(0, arrow));
    chem::parse_smarts(smirks.substr(arrow + 2));
}

struct Step {
    chem::RetroReaction reaction;
    int depth; ///< 1 for the reaction forming the target
};

void collect(const MoleculeNode& m, int depth, std::vector<Step>& out) {
    for (const auto& r : m.children) {
        auto parsed = chem::parse_retro_smiles(r.retro_smiles);
        parsed.template_id = r.template_id;
        parsed.site = r.site;
        out.push_back({std::move(parsed), depth});
        for (const auto& c : r.children) collect(c, depth + 1, out);
    }
}

bool at_position(const Step& s, const Position& p, int max_depth) {
    switch (p.kind) {
    case Position::Kind::Any: return true;
    case Position::Kind::FinalStep: return s.depth == 1;
    case Position::Kind::FirstStep: return s.depth == max_depth;
    case Position::Kind::WithinLastN: return s.depth <= p.n;
    }
    return false;
}

} // namespace

void register_predicate(const std::string& name, RoutePredicate predicate) {
    std::lock_guard lock(registry_mutex());
    registry()[name] = std::move(predicate);
}

ConstraintChecker checker_from_json(const json& j) {
    if (!j.is_object()) throw SchemaError("checker must be a JSON object");
    ConstraintChecker c;
    c.id = j.value("id", "");
    const auto rules = j.find("rules");
    if (rules != j.end() && !rules->is_array()) throw SchemaError("rules must be a list");
    std::size_t i = 0;
    for (const auto& rj : rules == j.end() ? json::array() : *rules) {
        if (!rj.is_object()) throw SchemaError("rule must be an object");
        CheckRule r;
        r.id = rj.value("id", "rule" + std::to_string(i++));
        r.smirks = rj.value("smirks", "");
        r.predicate = rj.value("predicate", "");
        if (r.smirks.empty() == r.predicate.empty()) throw SchemaError("rule " + r.id + " needs exactly one of smirks, predicate");
        if (!r.smirks.empty()) check_smirks(r.smirks);
        r.position = position_from_json(rj.value("position", json()));
        r.negate = rj.value("negate", false);
        if (rj.contains("before")) r.before = rj["before"].get<std::string>();
        if (rj.contains("after")) r.after = rj["after"].get<std::string>();
        if (!r.predicate.empty() && (r.before || r.after)) throw SchemaError("predicate rules cannot be ordered");
        c.rules.push_back(std::move(r));
    }
    for (const auto& r : c.rules) {
        for (const auto& ref : {r.before, r.after}) {
            if (!ref) continue;
            const auto it = std::find_if(c.rules.begin(), c.rules.end(), [&](const CheckRule& o) { return o.id == *ref; });
            if (it == c.rules.end() || it->smirks.empty()) throw SchemaError("rule " + r.id + " orders against unknown rule " + *ref);
        }
    }
    return c;
}

ConstraintChecker load_checker(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(util::read_file(path));
    } catch (const json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
    return checker_from_json(j);
}

json to_json(const ConstraintChecker& checker) {
    json rules = json::array();
    for (const auto& r : checker.rules) {
        json rj{{"id", r.id}, {"position", position_to_json(r.position)}, {"negate", r.negate}};
        if (!r.smirks.empty()) rj["smirks"] = r.smirks;
        if (!r.predicate.empty()) rj["predicate"] = r.predicate;
        if (r.before) rj["before"] = *r.before;
        if (r.after) rj["after"] = *r.after;
        rules.push_back(std::move(rj));
    }
    return {{"id", checker.id}, {"rules", rules}};
}

bool check_constraint(const Route& route, const ConstraintChecker& checker) {
    std::vector<Step> steps;
    collect(route.root, 1, steps);
    int max_depth = 0;
    for (const auto& s : steps) max_depth = std::max(max_depth, s.depth);

    // steps matching each rule's pattern at its position
    std::map<std::string, std::vector<int>> hits;
    for (const auto& r : checker.rules) {
        if (r.smirks.empty()) continue;
        auto& h = hits[r.id];
        for (const auto& s : steps) {
            if (at_position(s, r.position, max_depth) && chem::matches_smirks(s.reaction, r.smirks)) h.push_back(s.depth);
        }
    }
    for (const auto& r : checker.rules) {
        bool holds;
        if (!r.predicate.empty()) {
            holds = lookup_predicate(r.predicate)(route);
        } else {
            holds = false;
            for (const int depth : hits[r.id]) {
                bool ordered = true;
                // deeper steps happen earlier in the forward synthesis
                if (r.before) {
                    const auto& other = hits[*r.before];
                    ordered = ordered && std::any_of(other.begin(), other.end(), [&](int d) { return depth > d; });
                }
                if (r.after) {
                    const auto& other = hits[*r.after];
                    ordered = ordered && std::any_of(other.begin(), other.end(), [&](int d) { return depth < d; });
                }
                if (ordered) {
                    holds = true;
                    break;
                }
            }
        }
        if (holds == r.negate) return false;
    }
    return true;
}

} // namespace synthelite::routes
