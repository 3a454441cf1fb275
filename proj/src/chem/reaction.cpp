#include "synthelite/chem/reaction.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>

#include "synthelite/chem/element.hpp"
#include "synthelite/chem/smiles.hpp"
#include "synthelite/error.hpp"

namespace synthelite::chem {
namespace {

// "(A.B)" -> "A.B" when the outer parentheses enclose the whole side.
std::string_view strip_grouping(std::string_view side) {
    if (side.size() < 2 || side.front() != '(' || side.back() != ')') return side;
    int depth = 0;
    for (std::size_t i = 0; i < side.size(); ++i) {
        if (side[i] == '(') ++depth;
        if (side[i] == ')') --depth;
        if (depth == 0 && i + 1 < side.size()) return side;
    }
    return side.substr(1, side.size() - 2);
}

std::pair<std::string_view, std::string_view> split_arrow(std::string_view text) {
    const auto arrow = text.find(">>");
    if (arrow == std::string_view::npos) return {text, std::string_view{}};
    return {text.substr(0, arrow), text.substr(arrow + 2)};
}

// Bond-order sum for H bookkeeping; aromatic bonds count 1.5.
double order_value(BondOrder order) {
    return order == BondOrder::Aromatic ? 1.5 : static_cast<double>(order);
}

// Shift in the closed-shell valence caused by a formal charge.
int charge_valence_shift(int element, int charge) {
    switch (element) {
    case 6: return -std::abs(charge);
    case 5: return -charge;
    case 7:
    case 8:
    case 15:
    case 16:
    case 33:
    case 34: return charge;
    case 9:
    case 17:
    case 35:
    case 53: return charge;
    default: return 0;
    }
}

// Implicit hydrogens of a template-created atom, honouring its charge.
int new_atom_hydrogens(const MolGraph& g, int a) {
    const auto& atom = g.atom(a);
    if (atom.aromatic || atom.charge == 0) return std::max(0, implied_hydrogens(g, a));
    const auto valences = default_valences(atom.element);
    if (valences.empty()) return 0;
    const int used = static_cast<int>(std::lround(g.bond_order_sum(a)));
    const int target = valences.front() + charge_valence_shift(atom.element, atom.charge);
    return std::max(0, target - used);
}

BondOrder order_from_code(int code) {
    switch (code) {
    case 2: return BondOrder::Double;
    case 3: return BondOrder::Triple;
    case 4: return BondOrder::Aromatic;
    default: return BondOrder::Single;
    }
}

struct Outcome {
    std::vector<int> mapped_atoms; // sorted target atoms matched by mapped pattern atoms
    RetroReaction reaction;
};

class ReactionBuilder {
public:
    ReactionBuilder(const RetroTemplate& t, const MolGraph& mol) : t_(t), mol_(mol) {
        const auto& lhs = t.product_pattern();
        for (int q = 0; q < static_cast<int>(lhs.size()); ++q) {
            const int m = lhs.atoms()[static_cast<std::size_t>(q)].map_number;
            if (m > 0) lhs_by_map_[m] = q;
        }
    }

    // Returns the reactant molecules for one match, or nullopt when a
    // product fails sanitization.
    std::optional<std::vector<MolGraph>> build(const std::vector<int>& match, std::set<int>& site) {
        const auto& lhs = t_.product_pattern();
        const auto& rhs = t_.reactant_pattern();
        matched_.assign(mol_.atom_count(), false);
        new_atom_neighbors_.clear();
        for (int a : match) matched_[static_cast<std::size_t>(a)] = true;

        // rhs atom -> target atom (when mapped onto the match), else -1
        std::vector<int> source(rhs.size(), -1);
        for (int r = 0; r < static_cast<int>(rhs.size()); ++r) {
            const int m = rhs.atoms()[static_cast<std::size_t>(r)].map_number;
            if (auto it = lhs_by_map_.find(m); m > 0 && it != lhs_by_map_.end()) {
                source[static_cast<std::size_t>(r)] = match[static_cast<std::size_t>(it->second)];
            }
        }

        std::vector<MolGraph> products;
        std::map<std::pair<int, int>, BondOrder> built_bonds;      // target-pair -> order (mapped atoms)
        for (int component = 0; component < rhs.component_count(); ++component) {
            auto product = build_component(component, source, built_bonds);
            if (!product) return std::nullopt;
            products.push_back(std::move(*product));
        }

        // Site: mapped product atoms whose bonds were added, removed or reordered.
        site.clear();
        std::set<int> present;
        for (int r = 0; r < static_cast<int>(rhs.size()); ++r) {
            if (source[static_cast<std::size_t>(r)] >= 0) present.insert(source[static_cast<std::size_t>(r)]);
        }
        for (const auto& [map, q] : lhs_by_map_) {
            const int a = match[static_cast<std::size_t>(q)];
            if (!present.contains(a)) continue;
            bool changed = false;
            for (const auto& n : lhs.adjacency()[static_cast<std::size_t>(q)]) {
                const int other = match[static_cast<std::size_t>(n.atom)];
                const auto key = std::minmax(a, other);
                auto it = built_bonds.find({key.first, key.second});
                if (it == built_bonds.end() || it->second != mol_.bond(mol_.bond_between(a, other)).order) {
                    changed = true;
                }
            }
            for (const auto& [pair, order] : built_bonds) {
                if (pair.first != a && pair.second != a) continue;
                const int other = pair.first == a ? pair.second : pair.first;
                if (other < 0 || mol_.bond_between(a, other) < 0 || !is_match_neighbor(q, other, match)) {
                    changed = true;
                }
            }
            if (new_atom_neighbors_.contains(a)) changed = true;
            if (changed) site.insert(a + 1);
        }
        return products;
    }

private:
    bool is_match_neighbor(int q, int other, const std::vector<int>& match) const {
        for (const auto& n : t_.product_pattern().adjacency()[static_cast<std::size_t>(q)]) {
            if (match[static_cast<std::size_t>(n.atom)] == other) return true;
        }
        return false;
    }

    std::optional<MolGraph> build_component(int component, const std::vector<int>& source,
                                            std::map<std::pair<int, int>, BondOrder>& built_bonds) {
        const auto& rhs = t_.reactant_pattern();
        MolGraph g;
        std::map<int, int> from_target; // target atom -> product atom
        std::vector<int> origin;        // product atom -> target atom or -1
        std::vector<int> template_h;    // explicit H from the template, -1 when free
        std::vector<int> rhs_to_product(rhs.size(), -1);

        for (int r = 0; r < static_cast<int>(rhs.size()); ++r) {
            if (rhs.atoms()[static_cast<std::size_t>(r)].component != component) continue;
            const int src = source[static_cast<std::size_t>(r)];
            Atom atom;
            if (src >= 0) {
                atom = mol_.atom(src);
                if (rhs.atom_has_charge(r)) atom.charge = rhs.atom_charge(r);
            } else {
                const int z = rhs.atom_element(r);
                if (z < 0) throw TemplateError("template " + t_.id() + " creates an atom of unknown element");
                atom.element = z;
                atom.aromatic = rhs.atom_aromatic(r);
                atom.charge = rhs.atom_charge(r);
                atom.hydrogens = 0;
            }
            atom.map_number = 0;
            const int index = g.add_atom(atom);
            rhs_to_product[static_cast<std::size_t>(r)] = index;
            origin.push_back(src);
            template_h.push_back(rhs.atom_hydrogens(r));
            if (src >= 0) from_target[src] = index;
        }

        for (int b = 0; b < static_cast<int>(rhs.bonds().size()); ++b) {
            const auto& qb = rhs.bonds()[static_cast<std::size_t>(b)];
            const int x = rhs_to_product[static_cast<std::size_t>(qb.begin)];
            const int y = rhs_to_product[static_cast<std::size_t>(qb.end)];
            if (x < 0 || y < 0) continue;
            const int sx = source[static_cast<std::size_t>(qb.begin)];
            const int sy = source[static_cast<std::size_t>(qb.end)];
            BondOrder order;
            const int code = rhs.bond_order_code(b);
            if (code != 0) {
                order = order_from_code(code);
            } else if (sx >= 0 && sy >= 0 && mol_.bond_between(sx, sy) >= 0) {
                order = mol_.bond(mol_.bond_between(sx, sy)).order;
            } else if (g.atom(x).aromatic && g.atom(y).aromatic) {
                order = BondOrder::Aromatic;
            } else {
                order = BondOrder::Single;
            }
            g.add_bond(x, y, order);
            if (sx >= 0 && sy >= 0) {
                const auto key = std::minmax(sx, sy);
                built_bonds[{key.first, key.second}] = order;
            } else if (sx >= 0) {
                new_atom_neighbors_.insert(sx);
            } else if (sy >= 0) {
                new_atom_neighbors_.insert(sy);
            }
        }

        // Carry over unmatched atoms reachable from the mapped ones.
        std::deque<int> queue;
        for (const auto& [src, index] : from_target) queue.push_back(src);
        while (!queue.empty()) {
            const int a = queue.front();
            queue.pop_front();
            const int pa = from_target.at(a);
            for (const auto& n : mol_.neighbors(a)) {
                const bool carried = !matched_[static_cast<std::size_t>(n.atom)];
                auto it = from_target.find(n.atom);
                if (it == from_target.end()) {
                    if (!carried) continue; // matched atom deleted by the template
                    Atom atom = mol_.atom(n.atom);
                    atom.map_number = 0;
                    const int index = g.add_atom(atom);
                    origin.push_back(n.atom);
                    template_h.push_back(-1);
                    it = from_target.emplace(n.atom, index).first;
                    queue.push_back(n.atom);
                }
                // Bonds between two matched atoms come only from the template.
                if (!carried && matched_[static_cast<std::size_t>(a)]) continue;
                if (g.bond_between(pa, it->second) < 0) g.add_bond(pa, it->second, mol_.bond(n.bond).order);
            }
        }

        // Hydrogens: conserve valence on copied atoms, infer on new ones.
        for (int a = 0; a < static_cast<int>(g.atom_count()); ++a) {
            auto& atom = g.atom(a);
            const int src = origin[static_cast<std::size_t>(a)];
            if (src < 0 || template_h[static_cast<std::size_t>(a)] >= 0) continue;
            const double old_sum = mol_.bond_order_sum(src);
            double new_sum = 0.0;
            for (const auto& n : g.neighbors(a)) new_sum += order_value(g.bond(n.bond).order);
            const auto& before = mol_.atom(src);
            const int shift = charge_valence_shift(atom.element, atom.charge) -
                              charge_valence_shift(before.element, before.charge);
            const int h = before.hydrogens + static_cast<int>(std::lround(old_sum - new_sum)) + shift;
            atom.hydrogens = std::max(0, h);
        }
        for (int a = 0; a < static_cast<int>(g.atom_count()); ++a) {
            const int h = template_h[static_cast<std::size_t>(a)];
            if (origin[static_cast<std::size_t>(a)] >= 0 && h < 0) continue;
            g.atom(a).hydrogens = h >= 0 ? h : new_atom_hydrogens(g, a);
        }

        restore_stereo(g, origin, from_target);
        try {
            sanitize(g);
        } catch (const ParseError&) {
            return std::nullopt;
        }
        return g;
    }

    void restore_stereo(MolGraph& g, const std::vector<int>& origin, const std::map<int, int>& from_target) const {
        auto translate = [&](int target) {
            auto it = from_target.find(target);
            return it == from_target.end() ? -2 : it->second;
        };
        for (int a = 0; a < static_cast<int>(g.atom_count()); ++a) {
            auto& atom = g.atom(a);
            if (atom.chirality == Chirality::None) continue;
            std::vector<int> refs;
            bool ok = origin[static_cast<std::size_t>(a)] >= 0;
            for (int ref : atom.chiral_refs) {
                if (ref == kImplicitHydrogen) {
                    refs.push_back(ref);
                    continue;
                }
                const int mapped = translate(ref);
                if (mapped < 0 || g.bond_between(a, mapped) < 0) ok = false;
                refs.push_back(mapped);
            }
            const int h_slots = static_cast<int>(std::count(refs.begin(), refs.end(), kImplicitHydrogen));
            if (!ok || g.degree(a) + h_slots != static_cast<int>(refs.size()) || h_slots != std::min(atom.hydrogens, 1)) {
                atom.chirality = Chirality::None;
                atom.chiral_refs.clear();
            } else {
                atom.chiral_refs = std::move(refs);
            }
        }
        for (int b = 0; b < static_cast<int>(g.bond_count()); ++b) {
            auto& bond = g.bond(b);
            const int sb = origin[static_cast<std::size_t>(bond.begin)];
            const int se = origin[static_cast<std::size_t>(bond.end)];
            if (sb < 0 || se < 0) continue;
            const int mb = mol_.bond_between(sb, se);
            if (mb < 0) continue;
            const auto& old = mol_.bond(mb);
            if (old.stereo == BondStereo::None || bond.order != BondOrder::Double) continue;
            const bool same_direction = old.begin == sb;
            const int ref_begin = translate(same_direction ? old.stereo_begin : old.stereo_end);
            const int ref_end = translate(same_direction ? old.stereo_end : old.stereo_begin);
            if (ref_begin < 0 || ref_end < 0 || g.bond_between(bond.begin, ref_begin) < 0 ||
                g.bond_between(bond.end, ref_end) < 0) {
                continue;
            }
            bond.stereo = old.stereo;
            bond.stereo_begin = ref_begin;
            bond.stereo_end = ref_end;
        }
    }

    const RetroTemplate& t_;
    const MolGraph& mol_;
    std::map<int, int> lhs_by_map_;
    std::vector<bool> matched_;
    std::set<int> new_atom_neighbors_;
};

std::vector<Molecule> canonical_components(const std::vector<MolGraph>& products) {
    std::vector<Molecule> out;
    for (const auto& g : products) {
        for (const auto& atoms : g.components()) {
            out.push_back(Molecule{canonical_smiles(g.subgraph(atoms))});
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace

RetroTemplate::RetroTemplate(std::string id, std::string smarts) : id_(std::move(id)), smarts_(std::move(smarts)) {
    const auto [lhs, rhs] = split_arrow(smarts_);
    if (rhs.data() == nullptr || lhs.empty() || rhs.empty()) {
        throw TemplateError("template " + id_ + " is not of the form product>>reactants");
    }
    if (rhs.find(">>") != std::string_view::npos) throw TemplateError("template " + id_ + " has more than one arrow");
    try {
        product_ = parse_smarts(strip_grouping(lhs));
        reactants_ = parse_smarts(strip_grouping(rhs));
    } catch (const PatternError& e) {
        throw TemplateError("template " + id_ + ": " + e.what());
    }
    if (product_.component_count() != 1) {
        throw TemplateError("template " + id_ + " has more than one product pattern");
    }
}

std::string RetroTemplate::forward_smarts() const {
    const auto [lhs, rhs] = split_arrow(smarts_);
    return std::string(strip_grouping(rhs)) + ">>" + std::string(strip_grouping(lhs));
}

std::string RetroReaction::retro_smiles() const {
    std::string out = product.smiles + ">>";
    for (std::size_t i = 0; i < reactants.size(); ++i) {
        if (i) out += '.';
        out += reactants[i].smiles;
    }
    return out;
}

std::vector<RetroReaction> apply_template(const RetroTemplate& tmpl, const Molecule& molecule) {
    const MolGraph mol = molecule_graph(molecule);
    const MatchTarget target(mol);
    const auto matches = find_matches(tmpl.product_pattern(), target, 5000);

    std::vector<Outcome> outcomes;
    std::set<std::pair<std::vector<int>, std::vector<Molecule>>> seen;
    ReactionBuilder builder(tmpl, mol);
    for (const auto& match : matches) {
        std::set<int> site;
        auto products = builder.build(match, site);
        if (!products) continue;
        auto reactants = canonical_components(*products);
        if (reactants.empty()) continue;
        if (std::find(reactants.begin(), reactants.end(), molecule) != reactants.end()) continue;

        std::vector<int> mapped;
        const auto& lhs = tmpl.product_pattern();
        for (int q = 0; q < static_cast<int>(lhs.size()); ++q) {
            if (lhs.atoms()[static_cast<std::size_t>(q)].map_number > 0) mapped.push_back(match[static_cast<std::size_t>(q)]);
        }
        std::sort(mapped.begin(), mapped.end());
        if (!seen.insert({mapped, reactants}).second) continue;

        Outcome outcome;
        outcome.mapped_atoms = std::move(mapped);
        outcome.reaction.product = molecule;
        outcome.reaction.reactants = std::move(reactants);
        outcome.reaction.template_id = tmpl.id();
        outcome.reaction.site = std::move(site);
        outcomes.push_back(std::move(outcome));
    }
    std::stable_sort(outcomes.begin(), outcomes.end(), [](const Outcome& x, const Outcome& y) {
        if (x.reaction.site != y.reaction.site) return x.reaction.site < y.reaction.site;
        if (x.reaction.reactants != y.reaction.reactants) return x.reaction.reactants < y.reaction.reactants;
        return x.mapped_atoms < y.mapped_atoms;
    });
    std::vector<RetroReaction> out;
    for (auto& o : outcomes) {
        if (out.size() >= kMaxMatchSites) break;
        out.push_back(std::move(o.reaction));
    }
    return out;
}

bool site_matches(const RetroReaction& reaction, const std::set<int>& requested) {
    const auto& site = reaction.site;
    return std::includes(site.begin(), site.end(), requested.begin(), requested.end()) ||
           std::includes(requested.begin(), requested.end(), site.begin(), site.end());
}

bool matches_smirks(const RetroReaction& reaction, std::string_view smirks) {
    const auto [lhs, rhs] = split_arrow(smirks);
    if (smirks.empty() || rhs.data() == nullptr || lhs.empty() || rhs.empty()) {
        throw PatternError("SMIRKS must have the form reactants>>product");
    }
    const Pattern reactant_side = parse_smarts(strip_grouping(lhs));
    const Pattern product_side = parse_smarts(strip_grouping(rhs));

    const MolGraph product = molecule_graph(reaction.product);
    const MatchTarget product_target(product);
    const auto product_matches = find_matches(product_side, product_target, 5000);
    if (product_matches.empty()) return false;
    if (!reaction.site.empty()) {
        std::vector<int> mapped;
        for (int q = 0; q < static_cast<int>(product_side.size()); ++q) {
            if (product_side.atoms()[static_cast<std::size_t>(q)].map_number > 0) mapped.push_back(q);
        }
        const bool touches = std::any_of(product_matches.begin(), product_matches.end(), [&](const auto& match) {
            if (mapped.empty()) {
                return std::any_of(match.begin(), match.end(), [&](int a) { return reaction.site.contains(a + 1); });
            }
            return std::any_of(mapped.begin(), mapped.end(), [&](int q) {
                return reaction.site.contains(match[static_cast<std::size_t>(q)] + 1);
            });
        });
        if (!touches) return false;
    }

    std::string joined;
    for (const auto& r : reaction.reactants) {
        if (!joined.empty()) joined += '.';
        joined += r.smiles;
    }
    if (joined.empty()) return false;
    const MolGraph reactants = parse_smiles(joined);
    return has_match(reactant_side, MatchTarget(reactants));
}

RetroReaction parse_retro_smiles(std::string_view text) {
    const auto [lhs, rhs] = split_arrow(text);
    if (rhs.data() == nullptr || lhs.empty() || rhs.empty()) {
        throw ParseError("retro reaction must have the form product>>reactants");
    }
    RetroReaction r;
    r.product = canonicalize(lhs);
    const MolGraph g = parse_smiles(rhs);
    for (const auto& atoms : g.components()) r.reactants.push_back(Molecule{canonical_smiles(g.subgraph(atoms))});
    std::sort(r.reactants.begin(), r.reactants.end());
    r.reactants.erase(std::unique(r.reactants.begin(), r.reactants.end()), r.reactants.end());
    return r;
}

} // namespace synthelite::chem
