#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "synthelite/chem/graph.hpp"

namespace synthelite::chem {

/// A structure held as its canonical SMILES.
struct Molecule {
    std::string smiles;

    friend bool operator==(const Molecule&, const Molecule&) = default;
    friend auto operator<=>(const Molecule&, const Molecule&) = default;
};

/// Throws ParseError.
Molecule canonicalize(std::string_view smiles);

/// Graph of a canonical molecule; atom i carries map number i+1 in map_atoms().
MolGraph molecule_graph(const Molecule& molecule);

struct MappedMolecule {
    std::string smiles;       ///< every atom bracketed with its map number
    std::vector<int> index_of; ///< map number -> atom index in molecule_graph(); slot 0 unused
    std::size_t atom_count() const { return index_of.empty() ? 0 : index_of.size() - 1; }
};

/// Numbers atoms 1..n in canonical output order.
MappedMolecule map_atoms(const Molecule& molecule);

/// Removes map numbers and canonicalizes.
Molecule strip_maps(std::string_view mapped_smiles);

class Stock {
public:
    Stock() = default;
    explicit Stock(const std::vector<std::string>& smiles);

    /// One SMILES per line, '#' starts a comment. Unparseable lines throw ParseError
    /// tagged with the line number.
    static Stock load(const std::string& path);

    bool contains(const Molecule& molecule) const { return members_.contains(molecule.smiles); }
    /// Canonicalizes first; false for unparseable input.
    bool contains_smiles(std::string_view smiles) const;
    std::size_t size() const { return members_.size(); }
    const std::unordered_set<std::string>& members() const { return members_; }

private:
    std::unordered_set<std::string> members_;
};

inline bool in_stock(const Stock& stock, const Molecule& molecule) { return stock.contains(molecule); }

} // namespace synthelite::chem
