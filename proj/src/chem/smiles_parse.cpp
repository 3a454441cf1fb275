#include <cctype>
#include <map>
#include <string>

#include "synthelite/chem/element.hpp"
#include "synthelite/chem/smiles.hpp"
#include "synthelite/error.hpp"

namespace synthelite::chem {
namespace {

struct DirectionMark {
    int bond;
    char symbol; // '/' or '\\'
    int first;   // atom written before the symbol
};

struct RingOpening {
    int atom;
    char bond_symbol; // 0 when none
    std::size_t ref_slot;
    std::size_t position;
};

class SmilesParser {
public:
    explicit SmilesParser(std::string_view text) : text_(text) {}

    MolGraph parse() {
        if (text_.empty()) fail("empty SMILES");
        int prev = -1;
        char pending_bond = 0;
        std::vector<int> branches;
        bool expect_atom = true; // after '.', '(' or at start

        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == '(') {
                if (prev < 0) fail("branch without a preceding atom");
                if (pending_bond) fail("bond before branch");
                branches.push_back(prev);
                ++pos_;
                expect_atom = true;
            } else if (c == ')') {
                if (branches.empty()) fail("unbalanced ')'");
                if (expect_atom || pending_bond) fail("empty branch");
                prev = branches.back();
                branches.pop_back();
                ++pos_;
            } else if (c == '.') {
                if (expect_atom || pending_bond) fail("misplaced '.'");
                if (!branches.empty()) fail("'.' inside a branch");
                prev = -1;
                ++pos_;
                expect_atom = true;
            } else if (is_bond_symbol(c)) {
                if (pending_bond || prev < 0) fail("misplaced bond symbol");
                pending_bond = c;
                ++pos_;
            } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
                if (prev < 0 || expect_atom) fail("ring closure without an atom");
                ring_closure(prev, pending_bond);
                pending_bond = 0;
            } else {
                const int atom = parse_atom();
                if (prev >= 0) {
                    connect(prev, atom, pending_bond);
                    refs_[static_cast<std::size_t>(atom)].insert(
                        refs_[static_cast<std::size_t>(atom)].begin(), prev);
                } else if (pending_bond) {
                    fail("bond without a preceding atom");
                }
                pending_bond = 0;
                prev = atom;
                expect_atom = false;
            }
        }
        if (!branches.empty()) fail("unbalanced '('");
        if (pending_bond || expect_atom) fail("unterminated SMILES");
        if (!open_rings_.empty()) fail("unclosed ring bond");
        finish();
        return std::move(graph_);
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("invalid SMILES '" + std::string(text_) + "' at " + std::to_string(pos_) +
                         ": " + what);
    }

    static bool is_bond_symbol(char c) {
        return c == '-' || c == '=' || c == '#' || c == '$' || c == ':' || c == '/' || c == '\\';
    }

    int new_atom(Atom atom, bool bracket) {
        const int index = graph_.add_atom(std::move(atom));
        bracket_.push_back(bracket);
        refs_.emplace_back();
        return index;
    }

    int parse_atom() {
        const char c = text_[pos_];
        if (c == '[') return parse_bracket();
        Atom atom;
        if (c == '*') {
            atom.element = 0;
            ++pos_;
            return new_atom(atom, true);
        }
        static constexpr std::string_view kTwo[] = {"Cl", "Br"};
        for (auto sym : kTwo) {
            if (text_.substr(pos_, 2) == sym) {
                atom.element = atomic_number(sym);
                pos_ += 2;
                return new_atom(atom, false);
            }
        }
        switch (c) {
        case 'B': atom.element = 5; break;
        case 'C': atom.element = 6; break;
        case 'N': atom.element = 7; break;
        case 'O': atom.element = 8; break;
        case 'P': atom.element = 15; break;
        case 'S': atom.element = 16; break;
        case 'F': atom.element = 9; break;
        case 'I': atom.element = 53; break;
        case 'b': atom.element = 5; atom.aromatic = true; break;
        case 'c': atom.element = 6; atom.aromatic = true; break;
        case 'n': atom.element = 7; atom.aromatic = true; break;
        case 'o': atom.element = 8; atom.aromatic = true; break;
        case 'p': atom.element = 15; atom.aromatic = true; break;
        case 's': atom.element = 16; atom.aromatic = true; break;
        default: fail(std::string("unexpected character '") + c + "'");
        }
        ++pos_;
        return new_atom(atom, false);
    }

    int read_int() {
        int value = 0;
        bool any = false;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            value = value * 10 + (text_[pos_] - '0');
            if (value > 100000) fail("number too large");
            ++pos_;
            any = true;
        }
        return any ? value : -1;
    }

    int parse_bracket() {
        ++pos_; // '['
        Atom atom;
        const int isotope = read_int();
        if (isotope > 0) atom.isotope = isotope;
        if (pos_ >= text_.size()) fail("unterminated bracket atom");

        // element symbol
        if (text_[pos_] == '*') {
            atom.element = 0;
            ++pos_;
        } else {
            static constexpr std::string_view kAromaticTwo[] = {"se", "as", "te"};
            bool matched = false;
            for (auto sym : kAromaticTwo) {
                if (text_.substr(pos_, 2) == sym) {
                    std::string upper(sym);
                    upper[0] = static_cast<char>(std::toupper(upper[0]));
                    atom.element = atomic_number(upper);
                    atom.aromatic = true;
                    pos_ += 2;
                    matched = true;
                    break;
                }
            }
            if (!matched) {
                const char c = text_[pos_];
                if (std::islower(static_cast<unsigned char>(c))) {
                    std::string upper(1, static_cast<char>(std::toupper(c)));
                    const int z = atomic_number(upper);
                    if (z < 0 || !may_be_aromatic(z)) fail("bad aromatic symbol");
                    atom.element = z;
                    atom.aromatic = true;
                    ++pos_;
                } else if (std::isupper(static_cast<unsigned char>(c))) {
                    int z = -1;
                    if (pos_ + 1 < text_.size() &&
                        std::islower(static_cast<unsigned char>(text_[pos_ + 1]))) {
                        z = atomic_number(text_.substr(pos_, 2));
                        if (z >= 0) pos_ += 2;
                    }
                    if (z < 0) {
                        z = atomic_number(text_.substr(pos_, 1));
                        if (z < 0) fail("unknown element");
                        ++pos_;
                    }
                    atom.element = z;
                } else {
                    fail("expected element symbol");
                }
            }
        }

        // chirality
        if (pos_ < text_.size() && text_[pos_] == '@') {
            ++pos_;
            atom.chirality = Chirality::CounterClockwise;
            if (pos_ < text_.size() && text_[pos_] == '@') {
                ++pos_;
                atom.chirality = Chirality::Clockwise;
            }
        }
        // hydrogens
        if (pos_ < text_.size() && text_[pos_] == 'H') {
            ++pos_;
            const int h = read_int();
            atom.hydrogens = h < 0 ? 1 : h;
        }
        // charge
        if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
            const char sign = text_[pos_];
            ++pos_;
            int magnitude = read_int();
            if (magnitude < 0) {
                magnitude = 1;
                while (pos_ < text_.size() && text_[pos_] == sign) {
                    ++magnitude;
                    ++pos_;
                }
            }
            atom.charge = sign == '+' ? magnitude : -magnitude;
        }
        // atom map
        if (pos_ < text_.size() && text_[pos_] == ':') {
            ++pos_;
            const int map = read_int();
            if (map < 0) fail("missing atom map number");
            atom.map_number = map;
        }
        if (pos_ >= text_.size() || text_[pos_] != ']') fail("unterminated bracket atom");
        ++pos_;
        const int index = new_atom(atom, true);
        if (atom.hydrogens > 0) refs_[static_cast<std::size_t>(index)].push_back(kImplicitHydrogen);
        return index;
    }

    void ring_closure(int atom, char bond_symbol) {
        int number = 0;
        if (text_[pos_] == '%') {
            ++pos_;
            if (pos_ + 1 >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                !std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
                fail("bad %nn ring closure");
            }
            number = (text_[pos_] - '0') * 10 + (text_[pos_ + 1] - '0');
            pos_ += 2;
        } else {
            number = text_[pos_] - '0';
            ++pos_;
        }
        auto& refs = refs_[static_cast<std::size_t>(atom)];
        const auto it = open_rings_.find(number);
        if (it == open_rings_.end()) {
            refs.push_back(-2); // filled when the ring closes
            open_rings_[number] = {atom, bond_symbol, refs.size() - 1, pos_};
            return;
        }
        const RingOpening opening = it->second;
        open_rings_.erase(it);
        if (opening.atom == atom) fail("ring closure to itself");
        if (graph_.bond_between(opening.atom, atom) >= 0) fail("duplicate ring bond");
        char symbol = opening.bond_symbol;
        if (bond_symbol && symbol && bond_symbol != symbol) {
            const bool directional = (bond_symbol == '/' || bond_symbol == '\\') &&
                                     (symbol == '/' || symbol == '\\');
            if (!directional) fail("conflicting ring bond symbols");
        }
        int first = opening.atom;
        if (!symbol) {
            symbol = bond_symbol;
            first = atom;
        }
        connect_ordered(opening.atom, atom, symbol, first);
        refs_[static_cast<std::size_t>(opening.atom)][opening.ref_slot] = atom;
        refs.push_back(opening.atom);
    }

    void connect(int prev, int atom, char symbol) {
        connect_ordered(prev, atom, symbol, prev);
        refs_[static_cast<std::size_t>(prev)].push_back(atom);
    }

    void connect_ordered(int a, int b, char symbol, int first) {
        const bool implicit_aromatic =
            symbol == 0 && graph_.atom(a).aromatic && graph_.atom(b).aromatic;
        BondOrder order = implicit_aromatic ? BondOrder::Aromatic : BondOrder::Single;
        switch (symbol) {
        case '=': order = BondOrder::Double; break;
        case '#': order = BondOrder::Triple; break;
        case '$': fail("quadruple bonds are not supported");
        case ':': order = BondOrder::Aromatic; break;
        default: break;
        }
        implicit_aromatic_.push_back(implicit_aromatic);
        const int bond = graph_.add_bond(a, b, order);
        if (symbol == '/' || symbol == '\\') marks_.push_back({bond, symbol, first});
    }

    void finish() {
        const auto rings = find_rings(graph_);
        // An unmarked bond between aromatic atoms outside a ring is single.
        for (int b = 0; b < static_cast<int>(graph_.bond_count()); ++b) {
            if (implicit_aromatic_[static_cast<std::size_t>(b)] &&
                !rings.bond_in_ring[static_cast<std::size_t>(b)]) {
                graph_.bond(b).order = BondOrder::Single;
            }
        }
        for (int a = 0; a < static_cast<int>(graph_.atom_count()); ++a) {
            if (!bracket_[static_cast<std::size_t>(a)]) {
                graph_.atom(a).hydrogens = std::max(0, implied_hydrogens(graph_, a));
            }
        }
        assign_chirality();
        assign_bond_stereo(rings);
        sanitize(graph_);
    }

    void assign_chirality() {
        for (int a = 0; a < static_cast<int>(graph_.atom_count()); ++a) {
            auto& atom = graph_.atom(a);
            if (atom.chirality == Chirality::None) continue;
            // Built as [preceding atom, H, ring closures..., following atoms...].
            auto refs = refs_[static_cast<std::size_t>(a)];
            const int total = graph_.degree(a) + atom.hydrogens;
            if (atom.hydrogens > 1 || (total != 4 && total != 3) ||
                static_cast<int>(refs.size()) != total) {
                atom.chirality = Chirality::None;
                continue;
            }
            atom.chiral_refs = std::move(refs);
        }
    }

    void assign_bond_stereo(const RingInfo& rings) {
        if (marks_.empty()) return;
        std::map<int, DirectionMark> by_bond;
        for (const auto& m : marks_) by_bond[m.bond] = m;

        auto up_of = [&](int center, int neighbor, const DirectionMark& m) {
            // "center / neighbor": neighbor above center.
            const bool neighbor_after = m.first == center;
            return neighbor_after ? m.symbol == '/' : m.symbol == '\\';
        };
        auto find_ref = [&](int center, int skip, int& ref, bool& up) {
            for (const auto& n : graph_.neighbors(center)) {
                if (n.atom == skip) continue;
                const auto it = by_bond.find(n.bond);
                if (it == by_bond.end()) continue;
                ref = n.atom;
                up = up_of(center, n.atom, it->second);
                return true;
            }
            return false;
        };
        for (int b = 0; b < static_cast<int>(graph_.bond_count()); ++b) {
            auto& bond = graph_.bond(b);
            if (bond.order != BondOrder::Double) continue;
            if (rings.bond_in_ring[static_cast<std::size_t>(b)]) continue;
            int ref_begin = -1;
            int ref_end = -1;
            bool up_begin = false;
            bool up_end = false;
            if (!find_ref(bond.begin, bond.end, ref_begin, up_begin)) continue;
            if (!find_ref(bond.end, bond.begin, ref_end, up_end)) continue;
            bond.stereo = up_begin == up_end ? BondStereo::Cis : BondStereo::Trans;
            bond.stereo_begin = ref_begin;
            bond.stereo_end = ref_end;
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    MolGraph graph_;
    std::vector<bool> bracket_;
    std::vector<std::vector<int>> refs_;
    std::vector<bool> implicit_aromatic_;
    std::vector<DirectionMark> marks_;
    std::map<int, RingOpening> open_rings_;
};

} // namespace

MolGraph parse_smiles(std::string_view smiles) { return SmilesParser(smiles).parse(); }

} // namespace synthelite::chem
