#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace synthelite::chem {

enum class BondOrder : std::uint8_t { Single = 1, Double = 2, Triple = 3, Aromatic = 4 };

/// Tetrahedral parity relative to Atom::chiral_refs, in SMILES terms.
enum class Chirality : std::uint8_t { None, CounterClockwise, Clockwise };

enum class BondStereo : std::uint8_t { None, Cis, Trans };

/// Placeholder in Atom::chiral_refs for the atom's implicit hydrogen.
inline constexpr int kImplicitHydrogen = -1;

struct Atom {
    int element = 6;
    int charge = 0;
    int isotope = 0;
    int hydrogens = 0; ///< total attached hydrogens (none are graph nodes)
    bool aromatic = false;
    int map_number = 0;
    Chirality chirality = Chirality::None;
    std::vector<int> chiral_refs; ///< neighbour order the parity refers to
};

struct Bond {
    int begin = -1;
    int end = -1;
    BondOrder order = BondOrder::Single;
    // Double-bond configuration of stereo_begin (a neighbour of begin)
    // relative to stereo_end (a neighbour of end).
    BondStereo stereo = BondStereo::None;
    int stereo_begin = -1;
    int stereo_end = -1;

    int other(int atom) const noexcept { return atom == begin ? end : begin; }
};

struct Neighbor {
    int atom;
    int bond;
};

/// Hydrogen-suppressed molecular graph. Atom indices are stable for the
/// lifetime of the graph; there is no removal.
class MolGraph {
public:
    int add_atom(Atom atom);
    int add_bond(int a, int b, BondOrder order);

    std::size_t atom_count() const noexcept { return atoms_.size(); }
    std::size_t bond_count() const noexcept { return bonds_.size(); }

    const Atom& atom(int i) const { return atoms_[static_cast<std::size_t>(i)]; }
    Atom& atom(int i) { return atoms_[static_cast<std::size_t>(i)]; }
    const Bond& bond(int i) const { return bonds_[static_cast<std::size_t>(i)]; }
    Bond& bond(int i) { return bonds_[static_cast<std::size_t>(i)]; }

    std::span<const Atom> atoms() const noexcept { return atoms_; }
    std::span<const Bond> bonds() const noexcept { return bonds_; }

    std::span<const Neighbor> neighbors(int atom) const {
        return adjacency_[static_cast<std::size_t>(atom)];
    }
    int degree(int atom) const { return static_cast<int>(neighbors(atom).size()); }

    /// Bond index joining a and b, or -1.
    int bond_between(int a, int b) const;

    /// Sum of bond orders with aromatic bonds counted as 1.5.
    double bond_order_sum(int atom) const;

    /// Connected components as lists of atom indices, each sorted.
    std::vector<std::vector<int>> components() const;

    /// Induced subgraph on `atoms` (kept in the given order). Stereo
    /// references to atoms outside the subgraph are dropped.
    MolGraph subgraph(std::span<const int> atoms) const;

private:
    std::vector<Atom> atoms_;
    std::vector<Bond> bonds_;
    std::vector<std::vector<Neighbor>> adjacency_;
};

/// Ring perception results.
struct RingInfo {
    std::vector<bool> bond_in_ring;
    std::vector<bool> atom_in_ring;
    std::vector<int> ring_bond_count;   ///< ring bonds per atom
    std::vector<int> smallest_ring;     ///< 0 when acyclic
    std::vector<int> sssr_membership;   ///< SSSR rings containing the atom
    std::vector<std::vector<int>> sssr; ///< atom cycles, in ring order
    std::vector<std::vector<int>> cycles; ///< shortest cycle through each ring bond, deduplicated
};

RingInfo find_rings(const MolGraph& graph);

} // namespace synthelite::chem
