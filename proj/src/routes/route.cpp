#include "synthelite/routes/route.hpp"

#include <algorithm>
#include <functional>

#include "synthelite/error.hpp"
#include "synthelite/util/io.hpp"

namespace synthelite::routes {

using nlohmann::json;

bool operator==(const MoleculeNode& a, const MoleculeNode& b) {
    return a.smiles == b.smiles && a.in_stock == b.in_stock && a.children == b.children && a.extra == b.extra;
}

bool operator==(const ReactionNode& a, const ReactionNode& b) {
    return a.template_id == b.template_id && a.retro_smiles == b.retro_smiles && a.site == b.site &&
           a.children == b.children && a.extra == b.extra;
}

namespace {

json mol_json(const MoleculeNode& m) {
    json j = m.extra;
    j["type"] = "mol";
    j["smiles"] = m.smiles;
    j["in_stock"] = m.in_stock;
    j["children"] = json::array();
    for (const auto& r : m.children) {
        json rj = r.extra;
        rj["type"] = "reaction";
        rj["template_id"] = r.template_id;
        rj["retro_smiles"] = r.retro_smiles;
        rj["site"] = r.site;
        rj["children"] = json::array();
        for (const auto& c : r.children) rj["children"].push_back(mol_json(c));
        j["children"].push_back(std::move(rj));
    }
    return j;
}

std::string canonical_or_throw(const std::string& smiles, const std::string& what) {
    try {
        return chem::canonicalize(smiles).smiles;
    } catch (const ParseError& e) {
        throw SchemaError(what + " is not valid SMILES: " + e.what());
    }
}

json extra_fields(const json& j, std::initializer_list<const char*> known) {
    json extra = json::object();
    for (const auto& [k, v] : j.items()) {
        if (std::find_if(known.begin(), known.end(), [&](const char* n) { return k == n; }) == known.end()) extra[k] = v;
    }
    return extra;
}

const json& children_of(const json& j) {
    static const json empty = json::array();
    const auto it = j.find("children");
    if (it == j.end() || it->is_null()) return empty;
    if (!it->is_array()) throw SchemaError("children must be a list");
    return *it;
}

MoleculeNode mol_from_json(const json& j) {
    if (!j.is_object() || j.value("type", "") != "mol") throw SchemaError("expected a mol node");
    if (!j.contains("smiles") || !j["smiles"].is_string()) throw SchemaError("mol node without smiles");
    MoleculeNode m;
    m.smiles = j["smiles"].get<std::string>();
    const auto canonical = canonical_or_throw(m.smiles, "mol node");
    m.in_stock = j.value("in_stock", false);
    m.extra = extra_fields(j, {"type", "smiles", "in_stock", "children"});
    for (const auto& rj : children_of(j)) {
        if (!rj.is_object() || rj.value("type", "") != "reaction") throw SchemaError("mol children must be reaction nodes");
        ReactionNode r;
        r.template_id = rj.value("template_id", "");
        r.retro_smiles = rj.value("retro_smiles", "");
        if (rj.contains("site")) {
            if (!rj["site"].is_array()) throw SchemaError("site must be a list");
            for (const auto& s : rj["site"]) r.site.insert(s.get<int>());
        }
        r.extra = extra_fields(rj, {"type", "template_id", "retro_smiles", "site", "children"});
        chem::RetroReaction parsed;
        try {
            parsed = chem::parse_retro_smiles(r.retro_smiles);
        } catch (const ParseError& e) {
            throw SchemaError(std::string("bad retro_smiles: ") + e.what());
        }
        if (parsed.product.smiles != canonical) {
            throw SchemaError("reaction product " + parsed.product.smiles + " differs from parent " + canonical);
        }
        const auto& kids = children_of(rj);
        if (kids.empty()) throw SchemaError("reaction node without reactants");
        std::vector<std::string> child_smiles;
        for (const auto& cj : kids) {
            r.children.push_back(mol_from_json(cj));
            child_smiles.push_back(canonical_or_throw(r.children.back().smiles, "reactant"));
        }
        std::sort(child_smiles.begin(), child_smiles.end());
        child_smiles.erase(std::unique(child_smiles.begin(), child_smiles.end()), child_smiles.end());
        std::vector<std::string> expected;
        for (const auto& m2 : parsed.reactants) expected.push_back(m2.smiles);
        if (child_smiles != expected) throw SchemaError("reaction children differ from its reactants");
        m.children.push_back(std::move(r));
    }
    return m;
}

} // namespace

json to_json(const Route& route) { return mol_json(route.root); }

Route route_from_json(const json& j) { return Route{mol_from_json(j)}; }

std::string serialize(const Route& route) { return to_json(route).dump(); }

Route parse_route(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("route is not JSON: ") + e.what());
    }
    return route_from_json(j);
}

namespace {

void walk(const MoleculeNode& m, const std::function<void(const MoleculeNode&)>& on_mol,
          const std::function<void(const ReactionNode&)>& on_rxn) {
    on_mol(m);
    for (const auto& r : m.children) {
        on_rxn(r);
        for (const auto& c : r.children) walk(c, on_mol, on_rxn);
    }
}

} // namespace

std::vector<chem::RetroReaction> route_reactions(const Route& route) {
    std::vector<chem::RetroReaction> out;
    walk(route.root, [](const MoleculeNode&) {},
         [&](const ReactionNode& r) {
             auto parsed = chem::parse_retro_smiles(r.retro_smiles);
             parsed.template_id = r.template_id;
             parsed.site = r.site;
             out.push_back(std::move(parsed));
         });
    return out;
}

std::size_t reaction_count(const Route& route) {
    std::size_t n = 0;
    walk(route.root, [](const MoleculeNode&) {}, [&](const ReactionNode&) { ++n; });
    return n;
}

std::vector<std::string> leaves(const Route& route) {
    std::vector<std::string> out;
    walk(route.root, [&](const MoleculeNode& m) { if (m.children.empty()) out.push_back(m.smiles); },
         [](const ReactionNode&) {});
    return out;
}

std::vector<std::string> molecules(const Route& route) {
    std::vector<std::string> out;
    walk(route.root, [&](const MoleculeNode& m) { out.push_back(m.smiles); }, [](const ReactionNode&) {});
    return out;
}

std::vector<std::string> reaction_multiset(const Route& route) {
    std::vector<std::string> out;
    walk(route.root, [](const MoleculeNode&) {}, [&](const ReactionNode& r) { out.push_back(r.retro_smiles); });
    std::sort(out.begin(), out.end());
    return out;
}

std::string route_hash(const Route& route) { return util::sha256_hex(serialize(route)); }

bool is_solved(const Route& route, const chem::Stock& stock) {
    for (const auto& leaf : leaves(route)) {
        if (!stock.contains_smiles(leaf)) return false;
    }
    return true;
}

bool contains_building_block(const Route& route, const chem::Molecule& building_block) {
    for (const auto& m : molecules(route)) {
        if (m == building_block.smiles) return true;
        try {
            if (chem::canonicalize(m) == building_block) return true;
        } catch (const ParseError&) {
        }
    }
    return false;
}

RouteBuilder::RouteBuilder(chem::Molecule target, const chem::Stock& stock) : stock_(&stock) {
    const bool stocked = stock.contains(target);
    mols_.push_back({target, stocked});
    frontier_slots_.push_back(0);
    frontier_.push_back({std::move(target), stocked});
}

bool RouteBuilder::all_in_stock() const {
    return std::all_of(frontier_.begin(), frontier_.end(), [](const FrontierEntry& e) { return e.in_stock; });
}

void RouteBuilder::expand(std::size_t index, const chem::RetroReaction& reaction) {
    if (index >= frontier_.size()) throw Error("frontier index out of range");
    if (frontier_[index].molecule != reaction.product) {
        throw Error("reaction product " + reaction.product.smiles + " is not frontier molecule " +
                    frontier_[index].molecule.smiles);
    }
    const int slot = frontier_slots_[index];
    const int rxn = static_cast<int>(rxns_.size());
    rxns_.push_back({reaction, {}});
    mols_[static_cast<std::size_t>(slot)].reaction = rxn;
    frontier_slots_.erase(frontier_slots_.begin() + static_cast<std::ptrdiff_t>(index));
    frontier_.erase(frontier_.begin() + static_cast<std::ptrdiff_t>(index));
    for (const auto& r : reaction.reactants) {
        const bool stocked = stock_->contains(r);
        const int child = static_cast<int>(mols_.size());
        mols_.push_back({r, stocked});
        rxns_[static_cast<std::size_t>(rxn)].children.push_back(child);
        frontier_slots_.push_back(child);
        frontier_.push_back({r, stocked});
    }
    applied_.push_back(reaction);
}

MoleculeNode RouteBuilder::build(int slot) const {
    const auto& m = mols_[static_cast<std::size_t>(slot)];
    MoleculeNode node;
    node.smiles = m.molecule.smiles;
    node.in_stock = m.in_stock;
    if (m.reaction >= 0) {
        const auto& r = rxns_[static_cast<std::size_t>(m.reaction)];
        ReactionNode rn;
        rn.template_id = r.reaction.template_id;
        rn.retro_smiles = r.reaction.retro_smiles();
        rn.site = r.reaction.site;
        for (const int c : r.children) rn.children.push_back(build(c));
        node.children.push_back(std::move(rn));
    }
    return node;
}

Route RouteBuilder::route() const { return Route{build(0)}; }

} // namespace synthelite::routes
