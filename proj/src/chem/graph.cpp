#include "synthelite/chem/graph.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace synthelite::chem {

int MolGraph::add_atom(Atom atom) {
    atoms_.push_back(std::move(atom));
    adjacency_.emplace_back();
    return static_cast<int>(atoms_.size()) - 1;
}

int MolGraph::add_bond(int a, int b, BondOrder order) {
    Bond bond;
    bond.begin = a;
    bond.end = b;
    bond.order = order;
    bonds_.push_back(bond);
    const int index = static_cast<int>(bonds_.size()) - 1;
    adjacency_[static_cast<std::size_t>(a)].push_back({b, index});
    adjacency_[static_cast<std::size_t>(b)].push_back({a, index});
    return index;
}

int MolGraph::bond_between(int a, int b) const {
    for (const auto& n : neighbors(a)) {
        if (n.atom == b) return n.bond;
    }
    return -1;
}

double MolGraph::bond_order_sum(int atom) const {
    double sum = 0.0;
    for (const auto& n : neighbors(atom)) {
        const auto order = bond(n.bond).order;
        sum += order == BondOrder::Aromatic ? 1.5 : static_cast<double>(order);
    }
    return sum;
}

std::vector<std::vector<int>> MolGraph::components() const {
    std::vector<int> label(atoms_.size(), -1);
    std::vector<std::vector<int>> out;
    for (int start = 0; start < static_cast<int>(atoms_.size()); ++start) {
        if (label[static_cast<std::size_t>(start)] >= 0) continue;
        const int id = static_cast<int>(out.size());
        out.emplace_back();
        std::vector<int> stack{start};
        label[static_cast<std::size_t>(start)] = id;
        while (!stack.empty()) {
            const int a = stack.back();
            stack.pop_back();
            out.back().push_back(a);
            for (const auto& n : neighbors(a)) {
                if (label[static_cast<std::size_t>(n.atom)] < 0) {
                    label[static_cast<std::size_t>(n.atom)] = id;
                    stack.push_back(n.atom);
                }
            }
        }
        std::sort(out.back().begin(), out.back().end());
    }
    return out;
}

MolGraph MolGraph::subgraph(std::span<const int> atoms) const {
    std::vector<int> remap(atoms_.size(), -1);
    MolGraph sub;
    for (int a : atoms) remap[static_cast<std::size_t>(a)] = sub.add_atom(atom(a));
    for (const auto& b : bonds_) {
        const int x = remap[static_cast<std::size_t>(b.begin)];
        const int y = remap[static_cast<std::size_t>(b.end)];
        if (x < 0 || y < 0) continue;
        const int nb = sub.add_bond(x, y, b.order);
        auto& copy = sub.bond(nb);
        if (b.stereo != BondStereo::None) {
            const int sb = remap[static_cast<std::size_t>(b.stereo_begin)];
            const int se = remap[static_cast<std::size_t>(b.stereo_end)];
            if (sb >= 0 && se >= 0) {
                copy.stereo = b.stereo;
                copy.stereo_begin = sb;
                copy.stereo_end = se;
            }
        }
    }
    for (int i = 0; i < static_cast<int>(sub.atom_count()); ++i) {
        auto& a = sub.atom(i);
        if (a.chirality == Chirality::None) continue;
        bool intact = true;
        for (int& ref : a.chiral_refs) {
            if (ref == kImplicitHydrogen) continue;
            ref = remap[static_cast<std::size_t>(ref)];
            if (ref < 0) intact = false;
        }
        if (!intact) {
            a.chirality = Chirality::None;
            a.chiral_refs.clear();
        }
    }
    return sub;
}

namespace {

// Shortest path from `from` to `to` that does not use `skip_bond`.
std::vector<int> shortest_path(const MolGraph& g, int from, int to, int skip_bond) {
    std::vector<int> parent(g.atom_count(), -2);
    std::deque<int> queue{from};
    parent[static_cast<std::size_t>(from)] = -1;
    while (!queue.empty()) {
        const int a = queue.front();
        queue.pop_front();
        if (a == to) break;
        for (const auto& n : g.neighbors(a)) {
            if (n.bond == skip_bond || parent[static_cast<std::size_t>(n.atom)] != -2) continue;
            parent[static_cast<std::size_t>(n.atom)] = a;
            queue.push_back(n.atom);
        }
    }
    if (parent[static_cast<std::size_t>(to)] == -2) return {};
    std::vector<int> path;
    for (int a = to; a != -1; a = parent[static_cast<std::size_t>(a)]) path.push_back(a);
    std::reverse(path.begin(), path.end());
    return path;
}

} // namespace

RingInfo find_rings(const MolGraph& g) {
    const std::size_t na = g.atom_count();
    const std::size_t nb = g.bond_count();
    RingInfo info;
    info.bond_in_ring.assign(nb, false);
    info.atom_in_ring.assign(na, false);
    info.ring_bond_count.assign(na, 0);
    info.smallest_ring.assign(na, 0);
    info.sssr_membership.assign(na, 0);

    std::set<std::vector<int>> seen;
    for (int b = 0; b < static_cast<int>(nb); ++b) {
        const auto& bond = g.bond(b);
        auto path = shortest_path(g, bond.begin, bond.end, b);
        if (path.empty()) continue;
        info.bond_in_ring[static_cast<std::size_t>(b)] = true;
        auto key = path;
        std::sort(key.begin(), key.end());
        if (seen.insert(key).second) info.cycles.push_back(std::move(path));
    }
    for (int b = 0; b < static_cast<int>(nb); ++b) {
        if (!info.bond_in_ring[static_cast<std::size_t>(b)]) continue;
        const auto& bond = g.bond(b);
        info.atom_in_ring[static_cast<std::size_t>(bond.begin)] = true;
        info.atom_in_ring[static_cast<std::size_t>(bond.end)] = true;
        ++info.ring_bond_count[static_cast<std::size_t>(bond.begin)];
        ++info.ring_bond_count[static_cast<std::size_t>(bond.end)];
    }

    std::stable_sort(info.cycles.begin(), info.cycles.end(),
                     [](const auto& x, const auto& y) { return x.size() < y.size(); });

    // SSSR: greedily keep cycles whose bond sets are independent over GF(2).
    const std::size_t rank_target = nb + g.components().size() - na;
    std::vector<std::vector<bool>> basis; // reduced rows, each with a pivot
    std::vector<std::size_t> pivots;
    for (const auto& cycle : info.cycles) {
        if (info.sssr.size() >= rank_target) break;
        std::vector<bool> row(nb, false);
        for (std::size_t i = 0; i < cycle.size(); ++i) {
            const int b = g.bond_between(cycle[i], cycle[(i + 1) % cycle.size()]);
            row[static_cast<std::size_t>(b)] = true;
        }
        for (std::size_t r = 0; r < basis.size(); ++r) {
            if (row[pivots[r]]) {
                for (std::size_t k = 0; k < nb; ++k) row[k] = row[k] != basis[r][k];
            }
        }
        const auto it = std::find(row.begin(), row.end(), true);
        if (it == row.end()) continue;
        pivots.push_back(static_cast<std::size_t>(it - row.begin()));
        basis.push_back(std::move(row));
        info.sssr.push_back(cycle);
    }
    for (const auto& ring : info.sssr) {
        for (int a : ring) {
            auto& smallest = info.smallest_ring[static_cast<std::size_t>(a)];
            const int size = static_cast<int>(ring.size());
            if (smallest == 0 || size < smallest) smallest = size;
            ++info.sssr_membership[static_cast<std::size_t>(a)];
        }
    }
    return info;
}

} // namespace synthelite::chem
