#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthelite/chem/molecule.hpp"
#include "synthelite/chem/reaction.hpp"

namespace synthelite::routes {

struct ReactionNode;

struct MoleculeNode {
    std::string smiles;
    bool in_stock = false;
    std::vector<ReactionNode> children; ///< at most one in routes built here
    nlohmann::json extra = nlohmann::json::object(); ///< unknown fields, kept verbatim

    friend bool operator==(const MoleculeNode&, const MoleculeNode&);
};

struct ReactionNode {
    std::string template_id;
    std::string retro_smiles; ///< product>>reactants
    std::set<int> site;
    std::vector<MoleculeNode> children;
    nlohmann::json extra = nlohmann::json::object();

    friend bool operator==(const ReactionNode&, const ReactionNode&);
};

/// Bipartite synthesis tree rooted at the target.
struct Route {
    MoleculeNode root;

    friend bool operator==(const Route&, const Route&) = default;
};

nlohmann::json to_json(const Route& route);
/// Validates alternation and product/reactant consistency. Throws SchemaError.
Route route_from_json(const nlohmann::json& j);
/// Compact JSON with sorted keys.
std::string serialize(const Route& route);
Route parse_route(std::string_view text);

/// Reactions in depth-first pre-order.
std::vector<chem::RetroReaction> route_reactions(const Route& route);
std::size_t reaction_count(const Route& route);
std::vector<std::string> leaves(const Route& route);
std::vector<std::string> molecules(const Route& route);
/// Sorted retro SMILES of every reaction; equal for routes with the same reaction multiset.
std::vector<std::string> reaction_multiset(const Route& route);
/// SHA-256 of serialize(route).
std::string route_hash(const Route& route);

bool is_solved(const Route& route, const chem::Stock& stock);
bool contains_building_block(const Route& route, const chem::Molecule& building_block);

struct FrontierEntry {
    chem::Molecule molecule;
    bool in_stock = false;
};

/// Grows a route by expanding frontier molecules. Expanding removes the
/// molecule from the frontier and appends its reactants in order.
class RouteBuilder {
public:
    RouteBuilder(chem::Molecule target, const chem::Stock& stock);

    const std::vector<FrontierEntry>& frontier() const { return frontier_; }
    const std::vector<chem::RetroReaction>& reactions() const { return applied_; }
    bool all_in_stock() const;

    /// Throws Error when the reaction's product is not frontier[index].
    void expand(std::size_t index, const chem::RetroReaction& reaction);
    Route route() const;

private:
    struct MolSlot {
        chem::Molecule molecule;
        bool in_stock;
        int reaction = -1;
    };
    struct RxnSlot {
        chem::RetroReaction reaction;
        std::vector<int> children;
    };
    MoleculeNode build(int slot) const;

    const chem::Stock* stock_;
    std::vector<MolSlot> mols_;
    std::vector<RxnSlot> rxns_;
    std::vector<int> frontier_slots_;
    std::vector<FrontierEntry> frontier_;
    std::vector<chem::RetroReaction> applied_;
};

} // namespace synthelite::routes
