#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "synthelite/chem/element.hpp"
#include "synthelite/chem/smiles.hpp"

namespace synthelite::chem {
namespace {

int bond_code(BondOrder order) { return static_cast<int>(order); }

// Relabels `keys` densely preserving order; returns number of classes.
template <typename Key>
int dense_ranks(const std::vector<Key>& keys, std::vector<int>& ranks) {
    std::vector<int> order(keys.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return keys[static_cast<std::size_t>(x)] < keys[static_cast<std::size_t>(y)]; });
    ranks.assign(keys.size(), 0);
    int cls = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i > 0 && keys[static_cast<std::size_t>(order[i - 1])] < keys[static_cast<std::size_t>(order[i])]) ++cls;
        ranks[static_cast<std::size_t>(order[i])] = cls;
    }
    return keys.empty() ? 0 : cls + 1;
}

using Invariant = std::vector<long>;

std::vector<int> initial_ranks(const MolGraph& g, bool use_maps) {
    const auto rings = find_rings(g);
    std::vector<Invariant> keys(g.atom_count());
    for (int a = 0; a < static_cast<int>(g.atom_count()); ++a) {
        const auto& atom = g.atom(a);
        keys[static_cast<std::size_t>(a)] = {
            g.degree(a),
            atom.element,
            atom.isotope,
            atom.charge,
            atom.hydrogens,
            atom.aromatic ? 1 : 0,
            rings.atom_in_ring[static_cast<std::size_t>(a)] ? 1 : 0,
            use_maps ? atom.map_number : 0,
        };
    }
    std::vector<int> ranks;
    dense_ranks(keys, ranks);
    return ranks;
}

// Iterated neighbourhood refinement; returns number of classes.
int refine(const MolGraph& g, std::vector<int>& ranks) {
    int classes = *std::max_element(ranks.begin(), ranks.end()) + 1;
    while (true) {
        std::vector<Invariant> keys(g.atom_count());
        for (int a = 0; a < static_cast<int>(g.atom_count()); ++a) {
            std::vector<long> nbrs;
            for (const auto& n : g.neighbors(a)) {
                nbrs.push_back(static_cast<long>(ranks[static_cast<std::size_t>(n.atom)]) * 8 +
                               bond_code(g.bond(n.bond).order));
            }
            std::sort(nbrs.begin(), nbrs.end());
            auto& key = keys[static_cast<std::size_t>(a)];
            key.push_back(ranks[static_cast<std::size_t>(a)]);
            key.insert(key.end(), nbrs.begin(), nbrs.end());
        }
        std::vector<int> next;
        const int next_classes = dense_ranks(keys, next);
        ranks = std::move(next);
        if (next_classes == classes) return classes;
        classes = next_classes;
    }
}

// Smallest rank value shared by more than one atom, or -1.
int first_tied_class(const std::vector<int>& ranks) {
    std::vector<int> count(ranks.size(), 0);
    for (int r : ranks) ++count[static_cast<std::size_t>(r)];
    for (std::size_t r = 0; r < count.size(); ++r) {
        if (count[r] > 1) return static_cast<int>(r);
    }
    return -1;
}

void individualize(std::vector<int>& ranks, int atom) {
    const int tied = ranks[static_cast<std::size_t>(atom)];
    std::vector<long> keys(ranks.size());
    for (std::size_t a = 0; a < ranks.size(); ++a) {
        keys[a] = static_cast<long>(ranks[a]) * 2 +
                  ((ranks[a] == tied && static_cast<int>(a) != atom) ? 1 : 0);
    }
    dense_ranks(keys, ranks);
}

bool has_stereo(const MolGraph& g) {
    for (const auto& a : g.atoms()) {
        if (a.chirality != Chirality::None) return true;
    }
    for (const auto& b : g.bonds()) {
        if (b.stereo != BondStereo::None) return true;
    }
    return false;
}

// ---------------------------------------------------------------- writer

struct Traversal {
    std::vector<int> order;                  // atoms in output order
    std::vector<int> parent;                 // -1 at fragment roots
    std::vector<int> parent_bond;
    std::vector<std::vector<int>> children;  // in output order
    std::vector<std::vector<int>> closures;  // ring-closure bonds at each atom, output order
    std::vector<int> position;               // output position of each atom
};

class Writer {
public:
    Writer(const MolGraph& g, const std::vector<int>& ranks, const WriteOptions& options)
        : g_(g), ranks_(ranks), options_(options) {}

    // Writes one fragment rooted at its lowest-ranked atom.
    std::string write_fragment(const std::vector<int>& atoms, int first_number) {
        first_number_ = first_number;
        int root = atoms.front();
        for (int a : atoms) {
            if (ranks_[static_cast<std::size_t>(a)] < ranks_[static_cast<std::size_t>(root)]) root = a;
        }
        build_traversal(root);
        assign_directions();
        std::string out;
        emit(root, out);
        return out;
    }

    const std::vector<int>& output_order() const { return t_.order; }

private:
    std::vector<Neighbor> sorted_neighbors(int a) const {
        std::vector<Neighbor> nbrs(g_.neighbors(a).begin(), g_.neighbors(a).end());
        std::sort(nbrs.begin(), nbrs.end(), [&](const Neighbor& x, const Neighbor& y) {
            return ranks_[static_cast<std::size_t>(x.atom)] < ranks_[static_cast<std::size_t>(y.atom)];
        });
        return nbrs;
    }

    void build_traversal(int root) {
        const std::size_t n = g_.atom_count();
        t_ = Traversal{};
        t_.parent.assign(n, -1);
        t_.parent_bond.assign(n, -1);
        t_.children.assign(n, {});
        t_.closures.assign(n, {});
        t_.position.assign(n, -1);
        std::vector<bool> visited(n, false);
        std::vector<bool> closure_bond(g_.bond_count(), false);
        dfs(root, visited, closure_bond);

        // Output order: pre-order with children in traversal order.
        std::vector<int> stack{root};
        while (!stack.empty()) {
            const int a = stack.back();
            stack.pop_back();
            t_.position[static_cast<std::size_t>(a)] = static_cast<int>(t_.order.size());
            t_.order.push_back(a);
            const auto& kids = t_.children[static_cast<std::size_t>(a)];
            for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
        }
        // Ring-closure digits at an atom are emitted ordered by partner rank.
        for (int a : t_.order) {
            auto& cl = t_.closures[static_cast<std::size_t>(a)];
            std::sort(cl.begin(), cl.end(), [&](int x, int y) {
                const int px = g_.bond(x).other(a);
                const int py = g_.bond(y).other(a);
                return ranks_[static_cast<std::size_t>(px)] < ranks_[static_cast<std::size_t>(py)];
            });
        }
    }

    void dfs(int a, std::vector<bool>& visited, std::vector<bool>& closure_bond) {
        visited[static_cast<std::size_t>(a)] = true;
        for (const auto& nb : sorted_neighbors(a)) {
            if (nb.bond == t_.parent_bond[static_cast<std::size_t>(a)]) continue;
            if (visited[static_cast<std::size_t>(nb.atom)]) {
                if (!closure_bond[static_cast<std::size_t>(nb.bond)]) {
                    closure_bond[static_cast<std::size_t>(nb.bond)] = true;
                    t_.closures[static_cast<std::size_t>(a)].push_back(nb.bond);
                    t_.closures[static_cast<std::size_t>(nb.atom)].push_back(nb.bond);
                }
                continue;
            }
            t_.parent[static_cast<std::size_t>(nb.atom)] = a;
            t_.parent_bond[static_cast<std::size_t>(nb.atom)] = nb.bond;
            t_.children[static_cast<std::size_t>(a)].push_back(nb.atom);
            dfs(nb.atom, visited, closure_bond);
        }
    }

    // Neighbours of `a` in the order they appear around it in the output.
    std::vector<int> output_neighbors(int a) const {
        std::vector<int> out;
        if (t_.parent[static_cast<std::size_t>(a)] >= 0) out.push_back(t_.parent[static_cast<std::size_t>(a)]);
        for (int b : t_.closures[static_cast<std::size_t>(a)]) out.push_back(g_.bond(b).other(a));
        for (int c : t_.children[static_cast<std::size_t>(a)]) out.push_back(c);
        return out;
    }

    int written_first(int bond) const {
        const auto& b = g_.bond(bond);
        return t_.position[static_cast<std::size_t>(b.begin)] < t_.position[static_cast<std::size_t>(b.end)]
                   ? b.begin
                   : b.end;
    }

    // Is `neighbor` above `center` given the symbol on their bond?
    bool is_up(int center, int neighbor, char symbol, int bond) const {
        const bool neighbor_after = written_first(bond) == center;
        (void)neighbor;
        return neighbor_after ? symbol == '/' : symbol == '\\';
    }

    char symbol_for(int center, int bond, bool up) const {
        const bool neighbor_after = written_first(bond) == center;
        if (neighbor_after) return up ? '/' : '\\';
        return up ? '\\' : '/';
    }

    void assign_directions() {
        directions_.clear();
        if (!options_.stereo) return;
        std::vector<int> bonds;
        for (int b = 0; b < static_cast<int>(g_.bond_count()); ++b) {
            const auto& bond = g_.bond(b);
            if (bond.stereo == BondStereo::None || bond.order != BondOrder::Double) continue;
            if (t_.position[static_cast<std::size_t>(bond.begin)] < 0) continue;
            bonds.push_back(b);
        }
        std::sort(bonds.begin(), bonds.end(), [&](int x, int y) {
            return t_.position[static_cast<std::size_t>(written_first(x))] <
                   t_.position[static_cast<std::size_t>(written_first(y))];
        });
        for (int b : bonds) {
            const auto& bond = g_.bond(b);
            const int first = written_first(b);
            const int second = bond.other(first);
            int ref_first = first == bond.begin ? bond.stereo_begin : bond.stereo_end;
            int ref_second = first == bond.begin ? bond.stereo_end : bond.stereo_begin;
            bool cis = bond.stereo == BondStereo::Cis;

            auto pick = [&](int center, int skip) {
                for (int n : output_neighbors(center)) {
                    if (n != skip) return n;
                }
                return -1;
            };
            const int x = pick(first, second);
            const int y = pick(second, first);
            if (x < 0 || y < 0) continue;
            if (x != ref_first) cis = !cis;
            if (y != ref_second) cis = !cis;

            const int bx = g_.bond_between(x, first);
            const int by = g_.bond_between(y, second);
            if (g_.bond(bx).order != BondOrder::Single || g_.bond(by).order != BondOrder::Single) continue;
            bool up_x = false;
            if (auto it = directions_.find(bx); it != directions_.end()) {
                up_x = is_up(first, x, it->second, bx);
            } else {
                directions_[bx] = symbol_for(first, bx, up_x);
            }
            const bool up_y = cis ? up_x : !up_x;
            if (auto it = directions_.find(by); it != directions_.end()) {
                if (is_up(second, y, it->second, by) != up_y) continue; // unrepresentable
            } else {
                directions_[by] = symbol_for(second, by, up_y);
            }
        }
    }

    std::string bond_symbol(int bond) const {
        if (auto it = directions_.find(bond); it != directions_.end()) return std::string(1, it->second);
        const auto& b = g_.bond(bond);
        const bool both_aromatic = g_.atom(b.begin).aromatic && g_.atom(b.end).aromatic;
        switch (b.order) {
        case BondOrder::Single: return both_aromatic ? "-" : "";
        case BondOrder::Double: return "=";
        case BondOrder::Triple: return "#";
        case BondOrder::Aromatic: return both_aromatic ? "" : ":";
        }
        return "";
    }

    Chirality output_chirality(int a) const {
        const auto& atom = g_.atom(a);
        if (!options_.stereo || atom.chirality == Chirality::None) return Chirality::None;
        std::vector<int> order;
        const int parent = t_.parent[static_cast<std::size_t>(a)];
        if (parent >= 0) order.push_back(parent);
        if (atom.hydrogens > 0) order.push_back(kImplicitHydrogen);
        for (int b : t_.closures[static_cast<std::size_t>(a)]) order.push_back(g_.bond(b).other(a));
        for (int c : t_.children[static_cast<std::size_t>(a)]) order.push_back(c);
        auto refs = atom.chiral_refs;
        if (refs.size() != order.size()) return Chirality::None;
        // parity of the permutation taking refs to order
        int swaps = 0;
        for (std::size_t i = 0; i < refs.size(); ++i) {
            if (refs[i] == order[i]) continue;
            const auto it = std::find(refs.begin() + static_cast<long>(i) + 1, refs.end(), order[i]);
            if (it == refs.end()) return Chirality::None;
            std::iter_swap(refs.begin() + static_cast<long>(i), it);
            ++swaps;
        }
        if (swaps % 2 == 0) return atom.chirality;
        return atom.chirality == Chirality::Clockwise ? Chirality::CounterClockwise : Chirality::Clockwise;
    }

    void emit_atom(int a, std::string& out) const {
        const auto& atom = g_.atom(a);
        const Chirality chirality = output_chirality(a);
        const int number = options_.number_atoms
                               ? first_number_ + t_.position[static_cast<std::size_t>(a)]
                               : (options_.write_maps ? atom.map_number : 0);
        const int implied = implied_hydrogens(g_, a);
        const bool organic = in_organic_subset(atom.element) &&
                             (!atom.aromatic || atom.element == 5 || atom.element == 6 ||
                              atom.element == 7 || atom.element == 8 || atom.element == 15 ||
                              atom.element == 16);
        const bool bracket = options_.number_atoms || !organic || atom.charge != 0 ||
                             atom.isotope != 0 || chirality != Chirality::None || number != 0 ||
                             implied != atom.hydrogens;
        std::string symbol(element_symbol(atom.element));
        if (atom.aromatic) symbol[0] = static_cast<char>(std::tolower(symbol[0]));
        if (!bracket) {
            out += symbol;
            return;
        }
        out += '[';
        if (atom.isotope) out += std::to_string(atom.isotope);
        out += symbol;
        if (chirality == Chirality::CounterClockwise) out += '@';
        if (chirality == Chirality::Clockwise) out += "@@";
        if (atom.hydrogens > 0) {
            out += 'H';
            if (atom.hydrogens > 1) out += std::to_string(atom.hydrogens);
        }
        if (atom.charge > 0) {
            out += '+';
            if (atom.charge > 1) out += std::to_string(atom.charge);
        } else if (atom.charge < 0) {
            out += '-';
            if (atom.charge < -1) out += std::to_string(-atom.charge);
        }
        if (number != 0) {
            out += ':';
            out += std::to_string(number);
        }
        out += ']';
    }

    void emit(int a, std::string& out) {
        emit_atom(a, out);
        for (int b : t_.closures[static_cast<std::size_t>(a)]) {
            auto it = ring_digits_.find(b);
            if (it != ring_digits_.end()) {
                out += digit_text(it->second);
                free_digits_.insert(it->second);
                ring_digits_.erase(it);
            } else {
                int digit = 1;
                if (!free_digits_.empty()) {
                    digit = *free_digits_.begin();
                    free_digits_.erase(free_digits_.begin());
                } else {
                    digit = next_digit_++;
                }
                ring_digits_[b] = digit;
                out += bond_symbol(b);
                out += digit_text(digit);
            }
        }
        const auto& kids = t_.children[static_cast<std::size_t>(a)];
        for (std::size_t i = 0; i < kids.size(); ++i) {
            const bool branch = i + 1 < kids.size();
            if (branch) out += '(';
            out += bond_symbol(t_.parent_bond[static_cast<std::size_t>(kids[i])]);
            emit(kids[i], out);
            if (branch) out += ')';
        }
    }

    static std::string digit_text(int digit) {
        if (digit < 10) return std::to_string(digit);
        return "%" + std::to_string(digit);
    }

    const MolGraph& g_;
    const std::vector<int>& ranks_;
    WriteOptions options_;
    Traversal t_;
    std::map<int, char> directions_;
    std::map<int, int> ring_digits_;
    std::set<int> free_digits_;
    int next_digit_ = 1;
    int first_number_ = 1;
};

struct Written {
    std::string smiles;
    std::vector<int> order;
};

// Fragments are written separately and concatenated in the order of their
// canonical text so that the result does not depend on input atom order.
Written write_all(const MolGraph& g, const std::vector<int>& ranks, const WriteOptions& options) {
    struct Fragment {
        std::string key;
        std::vector<int> atoms;
    };
    std::vector<Fragment> fragments;
    for (auto& atoms : g.components()) {
        WriteOptions plain = options;
        plain.number_atoms = false;
        Writer w(g, ranks, plain);
        fragments.push_back({w.write_fragment(atoms, 1), atoms});
    }
    std::stable_sort(fragments.begin(), fragments.end(),
                     [](const Fragment& x, const Fragment& y) { return x.key < y.key; });
    Written out;
    for (const auto& f : fragments) {
        if (!out.smiles.empty()) out.smiles += '.';
        Writer w(g, ranks, options);
        out.smiles += w.write_fragment(f.atoms, static_cast<int>(out.order.size()) + 1);
        out.order.insert(out.order.end(), w.output_order().begin(), w.output_order().end());
    }
    return out;
}

// Exhaustive individualization over tied classes, keeping the smallest text.
void search_ties(const MolGraph& g, std::vector<int> ranks, const WriteOptions& options,
                 std::string& best, std::vector<int>& best_ranks, int& leaves) {
    refine(g, ranks);
    const int tied = first_tied_class(ranks);
    if (tied < 0) {
        ++leaves;
        auto text = write_all(g, ranks, options).smiles;
        if (best.empty() || text < best) {
            best = std::move(text);
            best_ranks = ranks;
        }
        return;
    }
    for (int a = 0; a < static_cast<int>(ranks.size()); ++a) {
        if (ranks[static_cast<std::size_t>(a)] != tied) continue;
        if (leaves >= 256 && !best.empty()) return;
        auto next = ranks;
        individualize(next, a);
        search_ties(g, std::move(next), options, best, best_ranks, leaves);
    }
}

} // namespace

std::vector<int> canonical_ranks(const MolGraph& g, bool use_maps) {
    if (g.atom_count() == 0) return {};
    auto ranks = initial_ranks(g, use_maps);
    if (has_stereo(g)) {
        std::string best;
        std::vector<int> best_ranks;
        int leaves = 0;
        WriteOptions options;
        options.write_maps = use_maps;
        search_ties(g, ranks, options, best, best_ranks, leaves);
        return best_ranks;
    }
    while (true) {
        refine(g, ranks);
        const int tied = first_tied_class(ranks);
        if (tied < 0) return ranks;
        const auto it = std::find(ranks.begin(), ranks.end(), tied);
        individualize(ranks, static_cast<int>(it - ranks.begin()));
    }
}

std::string write_smiles(const MolGraph& g, const WriteOptions& options, const std::vector<int>* ranks) {
    if (g.atom_count() == 0) return {};
    if (ranks) return write_all(g, *ranks, options).smiles;
    const auto canonical = canonical_ranks(g, options.write_maps);
    return write_all(g, canonical, options).smiles;
}

std::string canonical_smiles(const MolGraph& g) {
    MolGraph stripped = g;
    for (int a = 0; a < static_cast<int>(stripped.atom_count()); ++a) stripped.atom(a).map_number = 0;
    WriteOptions options;
    options.write_maps = false;
    return write_smiles(stripped, options);
}

std::string canonical_smiles_with_maps(const MolGraph& g) {
    WriteOptions options;
    options.write_maps = true;
    return write_smiles(g, options);
}

std::string random_smiles(const MolGraph& graph, std::mt19937_64& rng, bool kekule) {
    MolGraph g = graph;
    if (kekule) kekulize(g);
    std::vector<int> ranks(g.atom_count());
    std::iota(ranks.begin(), ranks.end(), 0);
    std::shuffle(ranks.begin(), ranks.end(), rng);
    WriteOptions options;
    options.write_maps = true;
    return write_all(g, ranks, options).smiles;
}

} // namespace synthelite::chem
