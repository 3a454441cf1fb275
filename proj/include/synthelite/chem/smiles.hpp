#pragma once

#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "synthelite/chem/graph.hpp"

namespace synthelite::chem {

/// Parses SMILES into a sanitized graph: hydrogens resolved, aromatic
/// input kekulized and aromaticity re-perceived so that every spelling of
/// a structure yields the same graph up to atom order.
/// Throws ParseError.
MolGraph parse_smiles(std::string_view smiles);

/// Kekulizes aromatic atoms, checks valences and re-perceives aromaticity.
/// Throws ParseError when the graph is not a valid structure.
void sanitize(MolGraph& graph);

/// Assigns alternating single/double bonds to aromatic bonds and clears
/// aromatic flags. Returns false if no assignment exists.
bool kekulize(MolGraph& graph);

/// Marks rings satisfying the 4n+2 rule as aromatic. Expects a Kekule graph.
void perceive_aromaticity(MolGraph& graph);

/// Hydrogen count implied by the SMILES organic-subset rules for the atom
/// as bonded in `graph`.
int implied_hydrogens(const MolGraph& graph, int atom);

/// Canonical ranks (0..n-1, all distinct) of the graph's atoms.
/// Atom map numbers take part in the invariants when `use_maps` is set.
std::vector<int> canonical_ranks(const MolGraph& graph, bool use_maps = false);

struct WriteOptions {
    bool write_maps = true;
    /// Emit every atom in brackets with map number position+1, in output order.
    bool number_atoms = false;
    bool stereo = true;
};

/// Writes SMILES with the canonical traversal. The caller may pass ranks
/// to steer the traversal; otherwise canonical ranks are computed.
std::string write_smiles(const MolGraph& graph, const WriteOptions& options = {},
                         const std::vector<int>* ranks = nullptr);

/// Canonical SMILES of the graph with atom maps stripped.
std::string canonical_smiles(const MolGraph& graph);

/// Canonical SMILES of the graph keeping atom map numbers.
std::string canonical_smiles_with_maps(const MolGraph& graph);

/// A valid but randomly ordered spelling (random root and branch order,
/// optionally in Kekule form). Used to exercise spelling invariance.
std::string random_smiles(const MolGraph& graph, std::mt19937_64& rng, bool kekule = false);

} // namespace synthelite::chem
