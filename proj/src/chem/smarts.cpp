#include "synthelite/chem/smarts.hpp"

#include <cctype>
#include <cmath>
#include <map>

#include "synthelite/chem/element.hpp"
#include "synthelite/error.hpp"

namespace synthelite::chem {

enum class Op : std::uint8_t { Prim, Not, And, Or };

enum class AtomPrim : std::uint8_t {
    True,
    Any,
    Element,   // value = Z, aromatic = -1/0/1
    Aromatic,  // value = 0 aliphatic, 1 aromatic
    TotalH,
    Degree,
    Connectivity,
    Valence,
    RingCount, // value < 0: in any ring
    RingSize,  // value < 0: in any ring
    RingBonds, // value < 0: at least one ring bond
    Charge,
    Isotope,
    Recursive,
};

struct AtomExpr {
    Op op = Op::Prim;
    AtomPrim prim = AtomPrim::True;
    int value = 0;
    int aromatic = -1;
    std::shared_ptr<const Pattern> recursive;
    std::vector<std::shared_ptr<const AtomExpr>> args;
};

enum class BondPrim : std::uint8_t { Default, Any, Single, Double, Triple, Aromatic, Ring };

struct BondExpr {
    Op op = Op::Prim;
    BondPrim prim = BondPrim::Default;
    std::vector<std::shared_ptr<const BondExpr>> args;
};

namespace {

using AtomPtr = std::shared_ptr<const AtomExpr>;
using BondPtr = std::shared_ptr<const BondExpr>;

AtomPtr atom_prim(AtomPrim prim, int value = 0, int aromatic = -1) {
    auto e = std::make_shared<AtomExpr>();
    e->prim = prim;
    e->value = value;
    e->aromatic = aromatic;
    return e;
}

template <typename Expr>
std::shared_ptr<const Expr> combine(Op op, std::vector<std::shared_ptr<const Expr>> args) {
    if (args.size() == 1) return args.front();
    auto e = std::make_shared<Expr>();
    e->op = op;
    e->args = std::move(args);
    return e;
}

BondPtr bond_prim(BondPrim prim) {
    auto e = std::make_shared<BondExpr>();
    e->prim = prim;
    return e;
}

bool is_bond_char(char c) {
    return c == '-' || c == '=' || c == '#' || c == ':' || c == '~' || c == '@' || c == '/' ||
           c == '\\' || c == '!' || c == '&' || c == ',' || c == ';';
}

} // namespace

class SmartsParser {
public:
    explicit SmartsParser(std::string_view text) : text_(text) {}

    Pattern parse() {
        if (text_.empty()) fail("empty pattern");
        int prev = -1;
        BondPtr pending;
        std::vector<int> branches;
        int component = 0;
        bool expect_atom = true;
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == '(') {
                if (prev < 0) fail("component grouping is not supported");
                if (pending) fail("bond before branch");
                branches.push_back(prev);
                ++pos_;
                expect_atom = true;
            } else if (c == ')') {
                if (branches.empty() || expect_atom || pending) fail("unbalanced ')'");
                prev = branches.back();
                branches.pop_back();
                ++pos_;
            } else if (c == '.') {
                if (expect_atom || pending || !branches.empty()) fail("misplaced '.'");
                prev = -1;
                ++component;
                ++pos_;
                expect_atom = true;
            } else if (is_bond_char(c)) {
                if (pending || prev < 0) fail("misplaced bond");
                pending = parse_bond_expr();
            } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
                if (prev < 0 || expect_atom) fail("ring closure without an atom");
                ring_closure(prev, pending);
                pending.reset();
            } else {
                const int atom = parse_atom(component);
                if (prev >= 0) {
                    add_bond(prev, atom, pending ? pending : bond_prim(BondPrim::Default));
                } else if (pending) {
                    fail("bond without a preceding atom");
                }
                pending.reset();
                prev = atom;
                expect_atom = false;
            }
        }
        if (!branches.empty()) fail("unbalanced '('");
        if (expect_atom || pending) fail("unterminated pattern");
        if (!rings_.empty()) fail("unclosed ring bond");
        out_.components_ = component + 1;
        return std::move(out_);
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw PatternError("invalid SMARTS '" + std::string(text_) + "' at " + std::to_string(pos_) + ": " +
                           why);
    }

    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
    }

    int read_int(int fallback) {
        if (!std::isdigit(static_cast<unsigned char>(peek()))) return fallback;
        int v = 0;
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
            v = v * 10 + (peek() - '0');
            if (v > 100000) fail("number too large");
            ++pos_;
        }
        return v;
    }

    int add_atom(AtomPtr expr, int map_number, int component) {
        QueryAtom atom;
        atom.expr = std::move(expr);
        atom.map_number = map_number;
        atom.component = component;
        out_.atoms_.push_back(std::move(atom));
        out_.adjacency_.emplace_back();
        return static_cast<int>(out_.atoms_.size()) - 1;
    }

    void add_bond(int a, int b, BondPtr expr) {
        if (a == b || out_.bond_between(a, b) >= 0) fail("duplicate bond");
        out_.bonds_.push_back({a, b, std::move(expr)});
        const int index = static_cast<int>(out_.bonds_.size()) - 1;
        out_.adjacency_[static_cast<std::size_t>(a)].push_back({b, index});
        out_.adjacency_[static_cast<std::size_t>(b)].push_back({a, index});
    }

    void ring_closure(int atom, BondPtr bond) {
        int number = 0;
        if (peek() == '%') {
            ++pos_;
            if (!std::isdigit(static_cast<unsigned char>(peek())) ||
                !std::isdigit(static_cast<unsigned char>(peek(1)))) {
                fail("bad %nn ring number");
            }
            number = (peek() - '0') * 10 + (peek(1) - '0');
            pos_ += 2;
        } else {
            number = peek() - '0';
            ++pos_;
        }
        auto it = rings_.find(number);
        if (it == rings_.end()) {
            rings_[number] = {atom, std::move(bond)};
            return;
        }
        auto [other, open_bond] = it->second;
        rings_.erase(it);
        BondPtr expr = bond ? bond : open_bond;
        add_bond(other, atom, expr ? expr : bond_prim(BondPrim::Default));
    }

    // ------------------------------------------------------------- atoms

    int parse_atom(int component) {
        const char c = peek();
        if (c == '[') {
            ++pos_;
            map_ = 0;
            auto expr = parse_low_and();
            if (peek() != ']') fail("expected ']'");
            ++pos_;
            return add_atom(std::move(expr), map_, component);
        }
        if (c == '*') {
            ++pos_;
            return add_atom(atom_prim(AtomPrim::Any), 0, component);
        }
        if (c == 'a' || c == 'A') {
            ++pos_;
            return add_atom(atom_prim(AtomPrim::Aromatic, c == 'a' ? 1 : 0), 0, component);
        }
        static const std::pair<std::string_view, int> kOrganic[] = {
            {"Cl", 17}, {"Br", 35}, {"B", 5}, {"C", 6}, {"N", 7}, {"O", 8},
            {"P", 15},  {"S", 16},  {"F", 9}, {"I", 53},
        };
        for (const auto& [sym, z] : kOrganic) {
            if (text_.substr(pos_, sym.size()) == sym) {
                pos_ += sym.size();
                return add_atom(atom_prim(AtomPrim::Element, z, 0), 0, component);
            }
        }
        static const std::pair<char, int> kAromatic[] = {{'b', 5}, {'c', 6}, {'n', 7},
                                                          {'o', 8}, {'p', 15}, {'s', 16}};
        for (const auto& [sym, z] : kAromatic) {
            if (c == sym) {
                ++pos_;
                return add_atom(atom_prim(AtomPrim::Element, z, 1), 0, component);
            }
        }
        fail("unexpected character");
    }

    AtomPtr parse_low_and() {
        std::vector<AtomPtr> args{parse_or()};
        while (peek() == ';') {
            ++pos_;
            args.push_back(parse_or());
        }
        return combine(Op::And, std::move(args));
    }

    AtomPtr parse_or() {
        std::vector<AtomPtr> args{parse_high_and()};
        while (peek() == ',') {
            ++pos_;
            args.push_back(parse_high_and());
        }
        return combine(Op::Or, std::move(args));
    }

    AtomPtr parse_high_and() {
        std::vector<AtomPtr> args{parse_not()};
        while (true) {
            const char c = peek();
            if (c == '&') {
                ++pos_;
                args.push_back(parse_not());
            } else if (c == '\0' || c == ']' || c == ';' || c == ',' || c == ')') {
                break;
            } else {
                args.push_back(parse_not());
            }
        }
        return combine(Op::And, std::move(args));
    }

    AtomPtr parse_not() {
        if (peek() == '!') {
            ++pos_;
            auto e = std::make_shared<AtomExpr>();
            e->op = Op::Not;
            e->args.push_back(parse_not());
            return e;
        }
        return parse_primitive();
    }

    AtomPtr parse_primitive() {
        const char c = peek();
        if (c == '\0') fail("unterminated bracket atom");
        if (std::isdigit(static_cast<unsigned char>(c))) return atom_prim(AtomPrim::Isotope, read_int(0));
        if (std::isupper(static_cast<unsigned char>(c)) && std::islower(static_cast<unsigned char>(peek(1)))) {
            const int z = atomic_number(text_.substr(pos_, 2));
            if (z > 0) {
                pos_ += 2;
                return atom_prim(AtomPrim::Element, z, 0);
            }
        }
        switch (c) {
        case '*': ++pos_; return atom_prim(AtomPrim::Any);
        case 'a': if (peek(1) != 's') { ++pos_; return atom_prim(AtomPrim::Aromatic, 1); } break;
        case 'A': ++pos_; return atom_prim(AtomPrim::Aromatic, 0);
        case '#': ++pos_; {
            const int z = read_int(-1);
            if (z < 0 || z > kMaxElement) fail("bad atomic number");
            return atom_prim(AtomPrim::Element, z, -1);
        }
        case '$': {
            if (peek(1) != '(') fail("expected '(' after '$'");
            pos_ += 2;
            const std::size_t start = pos_;
            int depth = 1;
            while (pos_ < text_.size() && depth > 0) {
                if (text_[pos_] == '(') ++depth;
                if (text_[pos_] == ')') --depth;
                ++pos_;
            }
            if (depth != 0) fail("unbalanced recursive SMARTS");
            auto e = std::make_shared<AtomExpr>();
            e->prim = AtomPrim::Recursive;
            e->recursive = std::make_shared<Pattern>(
                SmartsParser(text_.substr(start, pos_ - 1 - start)).parse());
            return e;
        }
        case '@':
            while (peek() == '@') ++pos_;
            while (std::isupper(static_cast<unsigned char>(peek())) && peek() != 'H') ++pos_;
            read_int(0);
            if (peek() == '?') ++pos_;
            return atom_prim(AtomPrim::True);
        case '+':
        case '-': {
            const int sign = c == '+' ? 1 : -1;
            ++pos_;
            int count = 1;
            if (std::isdigit(static_cast<unsigned char>(peek()))) {
                count = read_int(1);
            } else {
                while (peek() == c) {
                    ++count;
                    ++pos_;
                }
            }
            return atom_prim(AtomPrim::Charge, sign * count);
        }
        case ':':
            ++pos_;
            map_ = read_int(-1);
            if (map_ < 0) fail("bad atom map");
            return atom_prim(AtomPrim::True);
        case 'H': ++pos_; return atom_prim(AtomPrim::TotalH, read_int(1));
        case 'h': ++pos_; return atom_prim(AtomPrim::TotalH, read_int(1));
        case 'D': ++pos_; return atom_prim(AtomPrim::Degree, read_int(1));
        case 'X': ++pos_; return atom_prim(AtomPrim::Connectivity, read_int(1));
        case 'v': ++pos_; return atom_prim(AtomPrim::Valence, read_int(1));
        case 'R': ++pos_; return atom_prim(AtomPrim::RingCount, read_int(-1));
        case 'r': ++pos_; return atom_prim(AtomPrim::RingSize, read_int(-1));
        case 'x': ++pos_; return atom_prim(AtomPrim::RingBonds, read_int(-1));
        default: break;
        }
        if (std::islower(static_cast<unsigned char>(c))) {
            static const std::pair<std::string_view, int> kAromatic[] = {
                {"se", 34}, {"as", 33}, {"te", 52}, {"b", 5}, {"c", 6},
                {"n", 7},   {"o", 8},   {"p", 15},  {"s", 16},
            };
            for (const auto& [sym, z] : kAromatic) {
                if (text_.substr(pos_, sym.size()) == sym) {
                    pos_ += sym.size();
                    return atom_prim(AtomPrim::Element, z, 1);
                }
            }
            fail("unknown aromatic symbol");
        }
        if (std::isupper(static_cast<unsigned char>(c))) {
            const int z = atomic_number(text_.substr(pos_, 1));
            if (z > 0) {
                ++pos_;
                return atom_prim(AtomPrim::Element, z, 0);
            }
        }
        fail("unknown atom primitive");
    }

    // ------------------------------------------------------------- bonds

    BondPtr parse_bond_expr() {
        std::vector<BondPtr> args{parse_bond_or()};
        while (peek() == ';') {
            ++pos_;
            args.push_back(parse_bond_or());
        }
        return combine(Op::And, std::move(args));
    }

    BondPtr parse_bond_or() {
        std::vector<BondPtr> args{parse_bond_and()};
        while (peek() == ',') {
            ++pos_;
            args.push_back(parse_bond_and());
        }
        return combine(Op::Or, std::move(args));
    }

    BondPtr parse_bond_and() {
        std::vector<BondPtr> args{parse_bond_not()};
        while (true) {
            const char c = peek();
            if (c == '&') {
                ++pos_;
                args.push_back(parse_bond_not());
            } else if (c == '-' || c == '=' || c == '#' || c == ':' || c == '~' || c == '@' || c == '!' ||
                       c == '/' || c == '\\') {
                args.push_back(parse_bond_not());
            } else {
                break;
            }
        }
        return combine(Op::And, std::move(args));
    }

    BondPtr parse_bond_not() {
        if (peek() == '!') {
            ++pos_;
            auto e = std::make_shared<BondExpr>();
            e->op = Op::Not;
            e->args.push_back(parse_bond_not());
            return e;
        }
        const char c = peek();
        ++pos_;
        switch (c) {
        case '-':
        case '/':
        case '\\': return bond_prim(BondPrim::Single);
        case '=': return bond_prim(BondPrim::Double);
        case '#': return bond_prim(BondPrim::Triple);
        case ':': return bond_prim(BondPrim::Aromatic);
        case '~': return bond_prim(BondPrim::Any);
        case '@': return bond_prim(BondPrim::Ring);
        default: --pos_; fail("expected bond primitive");
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int map_ = 0;
    Pattern out_;
    std::map<int, std::pair<int, BondPtr>> rings_;
};

Pattern parse_smarts(std::string_view smarts) { return SmartsParser(smarts).parse(); }

int Pattern::bond_between(int a, int b) const {
    for (const auto& n : adjacency_[static_cast<std::size_t>(a)]) {
        if (n.atom == b) return n.bond;
    }
    return -1;
}

namespace {

// Walks the top-level conjunction, calling f on each primitive.
template <typename F>
void for_each_conjunct(const AtomExpr& e, F&& f) {
    if (e.op == Op::And) {
        for (const auto& a : e.args) for_each_conjunct(*a, f);
    } else if (e.op == Op::Prim) {
        f(e);
    }
}

} // namespace

int Pattern::atom_element(int a) const {
    int z = -1;
    for_each_conjunct(*atoms_[static_cast<std::size_t>(a)].expr, [&](const AtomExpr& p) {
        if (p.prim == AtomPrim::Element) z = p.value;
    });
    return z;
}

bool Pattern::atom_aromatic(int a) const {
    bool aromatic = false;
    for_each_conjunct(*atoms_[static_cast<std::size_t>(a)].expr, [&](const AtomExpr& p) {
        if ((p.prim == AtomPrim::Element && p.aromatic == 1) || (p.prim == AtomPrim::Aromatic && p.value == 1)) {
            aromatic = true;
        }
    });
    return aromatic;
}

int Pattern::atom_charge(int a) const {
    int charge = 0;
    for_each_conjunct(*atoms_[static_cast<std::size_t>(a)].expr, [&](const AtomExpr& p) {
        if (p.prim == AtomPrim::Charge) charge = p.value;
    });
    return charge;
}

bool Pattern::atom_has_charge(int a) const {
    bool has = false;
    for_each_conjunct(*atoms_[static_cast<std::size_t>(a)].expr, [&](const AtomExpr& p) {
        if (p.prim == AtomPrim::Charge) has = true;
    });
    return has;
}

int Pattern::atom_hydrogens(int a) const {
    int h = -1;
    for_each_conjunct(*atoms_[static_cast<std::size_t>(a)].expr, [&](const AtomExpr& p) {
        if (p.prim == AtomPrim::TotalH) h = p.value;
    });
    return h;
}

int Pattern::bond_order_code(int b) const {
    const auto& e = *bonds_[static_cast<std::size_t>(b)].expr;
    if (e.op != Op::Prim) return 0;
    switch (e.prim) {
    case BondPrim::Single: return 1;
    case BondPrim::Double: return 2;
    case BondPrim::Triple: return 3;
    case BondPrim::Aromatic: return 4;
    default: return 0;
    }
}

// ------------------------------------------------------------------ matching

MatchTarget::MatchTarget(const MolGraph& g) : graph(g), rings(find_rings(g)) {}

namespace {

bool eval_atom(const AtomExpr& e, const MatchTarget& t, int a);

bool match_rooted(const Pattern& p, const MatchTarget& t, int root_target);

bool eval_prim(const AtomExpr& e, const MatchTarget& t, int a) {
    const auto& atom = t.graph.atom(a);
    const auto idx = static_cast<std::size_t>(a);
    switch (e.prim) {
    case AtomPrim::True:
    case AtomPrim::Any: return true;
    case AtomPrim::Element:
        if (atom.element != e.value) return false;
        if (e.aromatic == 1) return atom.aromatic;
        if (e.aromatic == 0) return !atom.aromatic;
        return true;
    case AtomPrim::Aromatic: return atom.aromatic == (e.value == 1);
    case AtomPrim::TotalH: return atom.hydrogens == e.value;
    case AtomPrim::Degree: return t.graph.degree(a) == e.value;
    case AtomPrim::Connectivity: return t.graph.degree(a) + atom.hydrogens == e.value;
    case AtomPrim::Valence:
        return static_cast<int>(std::lround(t.graph.bond_order_sum(a))) + atom.hydrogens == e.value;
    case AtomPrim::RingCount:
        if (e.value < 0) return t.rings.atom_in_ring[idx];
        return t.rings.sssr_membership[idx] == e.value;
    case AtomPrim::RingSize:
        if (e.value < 0) return t.rings.atom_in_ring[idx];
        for (const auto& ring : t.rings.sssr) {
            if (static_cast<int>(ring.size()) == e.value && std::find(ring.begin(), ring.end(), a) != ring.end()) {
                return true;
            }
        }
        return false;
    case AtomPrim::RingBonds:
        if (e.value < 0) return t.rings.ring_bond_count[idx] > 0;
        return t.rings.ring_bond_count[idx] == e.value;
    case AtomPrim::Charge: return atom.charge == e.value;
    case AtomPrim::Isotope: return atom.isotope == e.value;
    case AtomPrim::Recursive: return match_rooted(*e.recursive, t, a);
    }
    return false;
}

bool eval_atom(const AtomExpr& e, const MatchTarget& t, int a) {
    switch (e.op) {
    case Op::Prim: return eval_prim(e, t, a);
    case Op::Not: return !eval_atom(*e.args.front(), t, a);
    case Op::And:
        for (const auto& x : e.args) {
            if (!eval_atom(*x, t, a)) return false;
        }
        return true;
    case Op::Or:
        for (const auto& x : e.args) {
            if (eval_atom(*x, t, a)) return true;
        }
        return false;
    }
    return false;
}

bool eval_bond(const BondExpr& e, const MatchTarget& t, int b) {
    const auto order = t.graph.bond(b).order;
    switch (e.op) {
    case Op::Prim:
        switch (e.prim) {
        case BondPrim::Default: return order == BondOrder::Single || order == BondOrder::Aromatic;
        case BondPrim::Any: return true;
        case BondPrim::Single: return order == BondOrder::Single;
        case BondPrim::Double: return order == BondOrder::Double;
        case BondPrim::Triple: return order == BondOrder::Triple;
        case BondPrim::Aromatic: return order == BondOrder::Aromatic;
        case BondPrim::Ring: return t.rings.bond_in_ring[static_cast<std::size_t>(b)];
        }
        return false;
    case Op::Not: return !eval_bond(*e.args.front(), t, b);
    case Op::And:
        for (const auto& x : e.args) {
            if (!eval_bond(*x, t, b)) return false;
        }
        return true;
    case Op::Or:
        for (const auto& x : e.args) {
            if (eval_bond(*x, t, b)) return true;
        }
        return false;
    }
    return false;
}

class Matcher {
public:
    Matcher(const Pattern& p, const MatchTarget& t, std::size_t limit) : p_(p), t_(t), limit_(limit) {
        plan();
        assignment_.assign(p.size(), -1);
        used_.assign(t.graph.atom_count(), false);
    }

    void run(int fixed_root = -1) {
        if (p_.size() == 0) return;
        fixed_root_ = fixed_root;
        extend(0);
    }

    std::vector<std::vector<int>> results;

private:
    // Breadth-first visiting order, component by component, with parents.
    void plan() {
        std::vector<bool> seen(p_.size(), false);
        for (int start = 0; start < static_cast<int>(p_.size()); ++start) {
            if (seen[static_cast<std::size_t>(start)]) continue;
            seen[static_cast<std::size_t>(start)] = true;
            parent_.push_back(-1);
            order_.push_back(start);
            std::size_t head = order_.size() - 1;
            while (head < order_.size()) {
                const int a = order_[head++];
                for (const auto& n : p_.adjacency()[static_cast<std::size_t>(a)]) {
                    if (seen[static_cast<std::size_t>(n.atom)]) continue;
                    seen[static_cast<std::size_t>(n.atom)] = true;
                    order_.push_back(n.atom);
                    parent_.push_back(a);
                }
            }
        }
    }

    bool feasible(int q, int a) const {
        if (used_[static_cast<std::size_t>(a)]) return false;
        if (!eval_atom(*p_.atoms()[static_cast<std::size_t>(q)].expr, t_, a)) return false;
        for (const auto& n : p_.adjacency()[static_cast<std::size_t>(q)]) {
            const int other = assignment_[static_cast<std::size_t>(n.atom)];
            if (other < 0) continue;
            const int tb = t_.graph.bond_between(a, other);
            if (tb < 0 || !eval_bond(*p_.bonds()[static_cast<std::size_t>(n.bond)].expr, t_, tb)) return false;
        }
        return true;
    }

    bool extend(std::size_t depth) {
        if (results.size() >= limit_) return true;
        if (depth == order_.size()) {
            results.push_back(assignment_);
            return results.size() >= limit_;
        }
        const int q = order_[depth];
        const int parent = parent_[depth];
        auto attempt = [&](int a) {
            if (!feasible(q, a)) return false;
            assignment_[static_cast<std::size_t>(q)] = a;
            used_[static_cast<std::size_t>(a)] = true;
            const bool stop = extend(depth + 1);
            assignment_[static_cast<std::size_t>(q)] = -1;
            used_[static_cast<std::size_t>(a)] = false;
            return stop;
        };
        if (depth == 0 && fixed_root_ >= 0) return attempt(fixed_root_);
        if (parent >= 0) {
            const int pa = assignment_[static_cast<std::size_t>(parent)];
            for (const auto& n : t_.graph.neighbors(pa)) {
                if (attempt(n.atom)) return true;
            }
            return false;
        }
        for (int a = 0; a < static_cast<int>(t_.graph.atom_count()); ++a) {
            if (attempt(a)) return true;
        }
        return false;
    }

    const Pattern& p_;
    const MatchTarget& t_;
    std::size_t limit_;
    std::vector<int> order_;
    std::vector<int> parent_;
    std::vector<int> assignment_;
    std::vector<bool> used_;
    int fixed_root_ = -1;
};

bool match_rooted(const Pattern& p, const MatchTarget& t, int root_target) {
    Matcher m(p, t, 1);
    m.run(root_target);
    return !m.results.empty();
}

} // namespace

std::vector<std::vector<int>> find_matches(const Pattern& pattern, const MatchTarget& target, std::size_t limit) {
    Matcher m(pattern, target, limit);
    m.run();
    return std::move(m.results);
}

bool has_match(const Pattern& pattern, const MatchTarget& target) { return !find_matches(pattern, target, 1).empty(); }

} // namespace synthelite::chem
