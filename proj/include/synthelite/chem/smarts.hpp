#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "synthelite/chem/graph.hpp"

namespace synthelite::chem {

struct AtomExpr;
struct BondExpr;

/// Target graph plus the ring data SMARTS primitives need.
struct MatchTarget {
    explicit MatchTarget(const MolGraph& graph);
    const MolGraph& graph;
    RingInfo rings;
};

struct QueryAtom {
    std::shared_ptr<const AtomExpr> expr;
    int map_number = 0;
    int component = 0; ///< index of the '.'-separated part it came from
};

struct QueryBond {
    int begin = -1;
    int end = -1;
    std::shared_ptr<const BondExpr> expr;
};

/// Parsed SMARTS substructure pattern.
class Pattern {
public:
    const std::vector<QueryAtom>& atoms() const { return atoms_; }
    const std::vector<QueryBond>& bonds() const { return bonds_; }
    const std::vector<std::vector<Neighbor>>& adjacency() const { return adjacency_; }
    int component_count() const { return components_; }
    std::size_t size() const { return atoms_.size(); }

    /// Bond index joining pattern atoms a and b, or -1.
    int bond_between(int a, int b) const;

    // Facts the reaction builder needs about individual atoms/bonds.
    int atom_element(int a) const;       ///< element when the atom names exactly one, else -1
    bool atom_aromatic(int a) const;     ///< atom written in lowercase aromatic form
    int atom_charge(int a) const;        ///< charge when given, else 0
    bool atom_has_charge(int a) const;
    int atom_hydrogens(int a) const;     ///< H count when given, else -1
    /// Concrete order when the bond names exactly one, else std::nullopt-like 0.
    int bond_order_code(int b) const;

private:
    friend class SmartsParser;
    friend Pattern parse_smarts(std::string_view);
    std::vector<QueryAtom> atoms_;
    std::vector<QueryBond> bonds_;
    std::vector<std::vector<Neighbor>> adjacency_;
    int components_ = 0;
};

/// Throws PatternError.
Pattern parse_smarts(std::string_view smarts);

/// All injective embeddings of `pattern` into the target, each given as
/// target atom per pattern atom. Stops after `limit` matches.
std::vector<std::vector<int>> find_matches(const Pattern& pattern, const MatchTarget& target,
                                           std::size_t limit = 10000);

bool has_match(const Pattern& pattern, const MatchTarget& target);

} // namespace synthelite::chem
