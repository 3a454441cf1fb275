#include <algorithm>
#include <cmath>

#include "synthelite/chem/element.hpp"
#include "synthelite/chem/smiles.hpp"
#include "synthelite/error.hpp"

namespace synthelite::chem {
namespace {

bool has_aromatic_bond(const MolGraph& g, int a) {
    for (const auto& n : g.neighbors(a)) {
        if (g.bond(n.bond).order == BondOrder::Aromatic) return true;
    }
    return false;
}

// Valence an atom reaches in a neutral closed-shell structure, shifted by charge.
int target_valence(int element, int charge) {
    switch (element) {
    case 5: return 3 - charge;
    case 6: return 4 - std::abs(charge);
    case 7:
    case 15:
    case 33: return 3 + charge;
    case 8:
    case 16:
    case 34:
    case 52: return 2 + charge;
    default: return -1;
    }
}

std::vector<int> allowed_valences(int element, int charge) {
    switch (element) {
    case 5: return charge == 0 ? std::vector<int>{3} : std::vector<int>{3 - charge};
    case 6: return {4 - std::abs(charge)};
    case 7:
    case 15:
        if (charge == 0) return {3, 5};
        if (charge == 1) return {4};
        return {3 + charge};
    case 8: return {2 + charge};
    case 16:
    case 34:
        if (charge == 0) return {2, 4, 6};
        if (charge == 1) return {3, 5};
        if (charge == -1) return {1, 3, 5};
        return {2 + charge};
    case 9: return {1 + charge};
    case 17:
    case 35:
    case 53:
        if (charge == 0) return {1, 3, 5, 7};
        return {1 + charge};
    default: return {};
    }
}

// Backtracking perfect matching of `need` atoms over aromatic bonds.
class Kekulizer {
public:
    Kekulizer(MolGraph& g, std::vector<int> need) : g_(g), need_(std::move(need)) {
        matched_.assign(g.atom_count(), -1);
        is_need_.assign(g.atom_count(), false);
        for (int a : need_) is_need_[static_cast<std::size_t>(a)] = true;
    }

    bool run() {
        budget_ = 200000;
        return solve();
    }

    const std::vector<int>& matched() const { return matched_; }

private:
    bool solve() {
        if (--budget_ < 0) return false;
        // Most-constrained unmatched atom first.
        int best = -1;
        int best_options = 1 << 30;
        for (int a : need_) {
            if (matched_[static_cast<std::size_t>(a)] >= 0) continue;
            int options = 0;
            for (const auto& n : g_.neighbors(a)) {
                if (candidate(n)) ++options;
            }
            if (options < best_options) {
                best = a;
                best_options = options;
            }
        }
        if (best < 0) return true;
        if (best_options == 0) return false;
        for (const auto& n : g_.neighbors(best)) {
            if (!candidate(n)) continue;
            matched_[static_cast<std::size_t>(best)] = n.atom;
            matched_[static_cast<std::size_t>(n.atom)] = best;
            if (solve()) return true;
            matched_[static_cast<std::size_t>(best)] = -1;
            matched_[static_cast<std::size_t>(n.atom)] = -1;
        }
        return false;
    }

    bool candidate(const Neighbor& n) const {
        return g_.bond(n.bond).order == BondOrder::Aromatic &&
               is_need_[static_cast<std::size_t>(n.atom)] &&
               matched_[static_cast<std::size_t>(n.atom)] < 0;
    }

    MolGraph& g_;
    std::vector<int> need_;
    std::vector<int> matched_;
    std::vector<bool> is_need_;
    long budget_ = 0;
};

// pi-electron contribution of `a` to `ring`, or -1 when it cannot take part.
int ring_electrons(const MolGraph& g, int a, const std::vector<bool>& in_ring,
                   const std::vector<bool>& aromatic_atom, const RingInfo& rings) {
    const auto& atom = g.atom(a);
    if (!may_be_aromatic(atom.element)) return -1;
    int double_partner = -1;
    int double_bond = -1;
    int connections = atom.hydrogens;
    for (const auto& n : g.neighbors(a)) {
        ++connections;
        const auto order = g.bond(n.bond).order;
        if (order == BondOrder::Triple) return -1;
        if (order == BondOrder::Double) {
            if (double_partner >= 0) return -1;
            double_partner = n.atom;
            double_bond = n.bond;
        }
    }
    if (double_partner >= 0) {
        if (in_ring[static_cast<std::size_t>(double_partner)]) return 1;
        if (rings.bond_in_ring[static_cast<std::size_t>(double_bond)]) {
            return aromatic_atom[static_cast<std::size_t>(double_partner)] ? 1 : -1;
        }
        const int partner = g.atom(double_partner).element;
        if (partner == 8 || partner == 7 || partner == 16) return 0;
        return -1;
    }
    switch (atom.element) {
    case 6:
        if (atom.charge == -1) return 2;
        if (atom.charge == 1) return 0;
        return -1;
    case 7:
    case 15:
    case 33:
        if (atom.charge == 0 && connections == 3) return 2;
        if (atom.charge == -1 && connections == 2) return 2;
        return -1;
    case 8:
    case 16:
    case 34:
    case 52:
        if (atom.charge == 0 && connections == 2) return 2;
        return -1;
    case 5:
        if (atom.charge == 0 && connections == 3) return 0;
        return -1;
    default: return -1;
    }
}

} // namespace

int implied_hydrogens(const MolGraph& g, int a) {
    const auto& atom = g.atom(a);
    const auto valences = default_valences(atom.element);
    if (valences.empty()) return -1;
    if (atom.aromatic) {
        int used = 1;
        for (const auto& n : g.neighbors(a)) {
            const auto order = g.bond(n.bond).order;
            used += order == BondOrder::Aromatic ? 1 : static_cast<int>(order);
        }
        return std::max(0, valences.front() - used);
    }
    const int used = static_cast<int>(std::ceil(g.bond_order_sum(a) - 1e-9));
    for (int v : valences) {
        if (v >= used) return v - used;
    }
    return 0;
}

bool kekulize(MolGraph& g) {
    std::vector<int> need;
    std::vector<bool> participating(g.atom_count(), false);
    for (int a = 0; a < static_cast<int>(g.atom_count()); ++a) {
        if (!g.atom(a).aromatic && !has_aromatic_bond(g, a)) continue;
        participating[static_cast<std::size_t>(a)] = true;
        const auto& atom = g.atom(a);
        const int target = target_valence(atom.element, atom.charge);
        if (target < 0) return false;
        int used = atom.hydrogens;
        for (const auto& n : g.neighbors(a)) {
            const auto order = g.bond(n.bond).order;
            used += order == BondOrder::Aromatic ? 1 : static_cast<int>(order);
        }
        const int missing = target - used;
        if (missing == 1) {
            need.push_back(a);
        } else if (missing != 0) {
            // Hypervalent S/P in aromatic rings keep their bonds single.
            if (!(missing > 1 && (atom.element == 16 || atom.element == 15))) return false;
        }
    }
    if (need.empty() && std::none_of(participating.begin(), participating.end(),
                                     [](bool p) { return p; })) {
        return true;
    }
    Kekulizer solver(g, need);
    if (!solver.run()) return false;
    const auto& matched = solver.matched();
    for (int b = 0; b < static_cast<int>(g.bond_count()); ++b) {
        auto& bond = g.bond(b);
        if (bond.order != BondOrder::Aromatic) continue;
        bond.order = matched[static_cast<std::size_t>(bond.begin)] == bond.end ? BondOrder::Double
                                                                               : BondOrder::Single;
    }
    for (int a = 0; a < static_cast<int>(g.atom_count()); ++a) g.atom(a).aromatic = false;
    return true;
}

void perceive_aromaticity(MolGraph& g) {
    const auto rings = find_rings(g);
    std::vector<bool> aromatic_atom(g.atom_count(), false);
    std::vector<bool> aromatic_ring(rings.cycles.size(), false);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t r = 0; r < rings.cycles.size(); ++r) {
            if (aromatic_ring[r]) continue;
            const auto& cycle = rings.cycles[r];
            std::vector<bool> in_ring(g.atom_count(), false);
            for (int a : cycle) in_ring[static_cast<std::size_t>(a)] = true;
            int electrons = 0;
            bool ok = true;
            for (int a : cycle) {
                const int e = ring_electrons(g, a, in_ring, aromatic_atom, rings);
                if (e < 0) {
                    ok = false;
                    break;
                }
                electrons += e;
            }
            if (!ok || electrons % 4 != 2) continue;
            aromatic_ring[r] = true;
            for (int a : cycle) aromatic_atom[static_cast<std::size_t>(a)] = true;
            changed = true;
        }
    }
    for (std::size_t r = 0; r < rings.cycles.size(); ++r) {
        if (!aromatic_ring[r]) continue;
        const auto& cycle = rings.cycles[r];
        for (std::size_t i = 0; i < cycle.size(); ++i) {
            const int b = g.bond_between(cycle[i], cycle[(i + 1) % cycle.size()]);
            auto& bond = g.bond(b);
            bond.order = BondOrder::Aromatic;
            bond.stereo = BondStereo::None;
        }
    }
    for (int a = 0; a < static_cast<int>(g.atom_count()); ++a) {
        g.atom(a).aromatic = aromatic_atom[static_cast<std::size_t>(a)];
    }
}

void sanitize(MolGraph& g) {
    if (!kekulize(g)) throw ParseError("cannot kekulize aromatic system");
    for (int a = 0; a < static_cast<int>(g.atom_count()); ++a) {
        const auto& atom = g.atom(a);
        if (atom.hydrogens < 0) throw ParseError("negative hydrogen count");
        const auto allowed = allowed_valences(atom.element, atom.charge);
        if (allowed.empty()) continue;
        const int total = static_cast<int>(std::lround(g.bond_order_sum(a))) + atom.hydrogens;
        const bool exact = std::find(allowed.begin(), allowed.end(), total) != allowed.end();
        if (!exact && total > allowed.front()) {
            throw ParseError("bad valence on " + std::string(element_symbol(atom.element)));
        }
        if (allowed.front() < 0) throw ParseError("impossible charge");
    }
    perceive_aromaticity(g);
}

} // namespace synthelite::chem
