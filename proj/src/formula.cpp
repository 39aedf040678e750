// formula.cpp — AST construction, canonical ordering, sub+ closure, and the
// recursive-descent parser / printer for the ASCII syntax.

#include "elkh/formula.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <sstream>

namespace elkh {

const char* kind_name(FormulaKind k) noexcept {
    switch (k) {
        case FormulaKind::Bottom: return "false";
        case FormulaKind::Prop: return "prop";
        case FormulaKind::Not: return "~";
        case FormulaKind::And: return "&";
        case FormulaKind::Know: return "K";
        case FormulaKind::KnowHow: return "Kh";
    }
    return "?";
}

struct Formula::Node {
    FormulaKind kind;
    std::string name;  // prop name (Prop only)
    Agent agent;       // Know/KnowHow only
    Formula sub1;      // Not/Know/KnowHow child, And left
    Formula sub2;      // And right
    std::size_t hash = 0;
    int depth = 0;
    int size = 1;
};

namespace {

std::size_t mix(std::size_t seed, std::size_t v) {
    return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t hash_str(const std::string& s) { return std::hash<std::string>{}(s); }

}  // namespace

Formula Formula::bottom() {
    static const Formula instance = [] {
        auto n = std::make_shared<Node>();
        n->kind = FormulaKind::Bottom;
        n->hash = mix(0, 1);
        n->depth = 0;
        n->size = 1;
        return Formula(std::move(n));
    }();
    return instance;
}

Formula Formula::prop(std::string name) {
    assert(!name.empty());
    auto n = std::make_shared<Node>();
    n->kind = FormulaKind::Prop;
    n->hash = mix(2, hash_str(name));
    n->name = std::move(name);
    n->depth = 0;
    n->size = 1;
    return Formula(std::move(n));
}

Formula Formula::neg(Formula f) {
    assert(f.valid());
    auto n = std::make_shared<Node>();
    n->kind = FormulaKind::Not;
    n->hash = mix(3, f.hash());
    n->depth = f.depth();
    n->size = 1 + f.node_count();
    n->sub1 = std::move(f);
    return Formula(std::move(n));
}

Formula Formula::conj(Formula lhs, Formula rhs) {
    assert(lhs.valid() && rhs.valid());
    auto n = std::make_shared<Node>();
    n->kind = FormulaKind::And;
    n->hash = mix(mix(4, lhs.hash()), rhs.hash());
    n->depth = std::max(lhs.depth(), rhs.depth());
    n->size = 1 + lhs.node_count() + rhs.node_count();
    n->sub1 = std::move(lhs);
    n->sub2 = std::move(rhs);
    return Formula(std::move(n));
}

Formula Formula::know(Agent i, Formula f) {
    assert(!i.id.empty() && f.valid());
    auto n = std::make_shared<Node>();
    n->kind = FormulaKind::Know;
    n->hash = mix(mix(5, hash_str(i.id)), f.hash());
    n->agent = std::move(i);
    n->depth = f.depth() + 1;
    n->size = 1 + f.node_count();
    n->sub1 = std::move(f);
    return Formula(std::move(n));
}

Formula Formula::know_how(Agent i, Formula f) {
    assert(!i.id.empty() && f.valid());
    auto n = std::make_shared<Node>();
    n->kind = FormulaKind::KnowHow;
    n->hash = mix(mix(6, hash_str(i.id)), f.hash());
    n->agent = std::move(i);
    n->depth = f.depth() + 2;
    n->size = 1 + f.node_count();
    n->sub1 = std::move(f);
    return Formula(std::move(n));
}

FormulaKind Formula::kind() const {
    assert(node_);
    return node_->kind;
}

const std::string& Formula::prop_name() const {
    assert(node_ && node_->kind == FormulaKind::Prop);
    return node_->name;
}

const Agent& Formula::agent() const {
    assert(node_ && (node_->kind == FormulaKind::Know || node_->kind == FormulaKind::KnowHow));
    return node_->agent;
}

const Formula& Formula::child() const {
    assert(node_ && (node_->kind == FormulaKind::Not || node_->kind == FormulaKind::Know ||
                     node_->kind == FormulaKind::KnowHow));
    return node_->sub1;
}

const Formula& Formula::left() const {
    assert(node_ && node_->kind == FormulaKind::And);
    return node_->sub1;
}

const Formula& Formula::right() const {
    assert(node_ && node_->kind == FormulaKind::And);
    return node_->sub2;
}

int Formula::depth() const {
    assert(node_);
    return node_->depth;
}

int Formula::node_count() const {
    assert(node_);
    return node_->size;
}

std::size_t Formula::hash() const {
    assert(node_);
    return node_->hash;
}

bool operator==(const Formula& a, const Formula& b) {
    if (a.node_ == b.node_) return true;
    if (!a.node_ || !b.node_) return false;
    if (a.node_->hash != b.node_->hash) return false;
    if (a.node_->kind != b.node_->kind) return false;
    switch (a.node_->kind) {
        case FormulaKind::Bottom: return true;
        case FormulaKind::Prop: return a.node_->name == b.node_->name;
        case FormulaKind::Not: return a.node_->sub1 == b.node_->sub1;
        case FormulaKind::And:
            return a.node_->sub1 == b.node_->sub1 && a.node_->sub2 == b.node_->sub2;
        case FormulaKind::Know:
        case FormulaKind::KnowHow:
            return a.node_->agent == b.node_->agent && a.node_->sub1 == b.node_->sub1;
    }
    return false;
}

// Canonical total order: constructor tag, then agent/prop name, then
// recursion on children. Every set in the solver iterates in this order.
std::strong_ordering operator<=>(const Formula& a, const Formula& b) {
    assert(a.node_ && b.node_);
    if (a.node_ == b.node_) return std::strong_ordering::equal;
    if (auto c = a.node_->kind <=> b.node_->kind; c != 0) return c;
    switch (a.node_->kind) {
        case FormulaKind::Bottom: return std::strong_ordering::equal;
        case FormulaKind::Prop: return a.node_->name <=> b.node_->name;
        case FormulaKind::Not: return a.node_->sub1 <=> b.node_->sub1;
        case FormulaKind::And: {
            if (auto c = a.node_->sub1 <=> b.node_->sub1; c != 0) return c;
            return a.node_->sub2 <=> b.node_->sub2;
        }
        case FormulaKind::Know:
        case FormulaKind::KnowHow: {
            if (auto c = a.node_->agent <=> b.node_->agent; c != 0) return c;
            return a.node_->sub1 <=> b.node_->sub1;
        }
    }
    return std::strong_ordering::equal;
}

Formula complement(const Formula& phi) {
    if (phi.kind() == FormulaKind::Not) return phi.child();
    return Formula::neg(phi);
}

int depth(const Formula& phi) { return phi.depth(); }

// ── Closure ─────────────────────────────────────────────────────────────────

namespace {

void collect_subformulas(const Formula& f, std::set<Formula>& out) {
    if (!out.insert(f).second) return;
    switch (f.kind()) {
        case FormulaKind::Bottom:
        case FormulaKind::Prop: break;
        case FormulaKind::Not:
        case FormulaKind::Know:
        case FormulaKind::KnowHow: collect_subformulas(f.child(), out); break;
        case FormulaKind::And:
            collect_subformulas(f.left(), out);
            collect_subformulas(f.right(), out);
            break;
    }
}

}  // namespace

ClosureSet::ClosureSet(const Formula& seed) : seed_(seed) {
    std::set<Formula> subs;
    collect_subformulas(seed, subs);
    std::set<Formula> closure;
    for (const Formula& psi : subs) {
        closure.insert(psi);
        closure.insert(Formula::neg(psi));
        if (psi.kind() == FormulaKind::KnowHow) {
            Formula k = Formula::know(psi.agent(), psi.child());
            closure.insert(k);
            closure.insert(Formula::neg(k));
        }
    }
    formulas_.assign(closure.begin(), closure.end());
}

bool ClosureSet::contains(const Formula& f) const {
    return std::binary_search(formulas_.begin(), formulas_.end(), f);
}

// ── Printer ─────────────────────────────────────────────────────────────────

namespace {

void print_to(const Formula& f, std::string& out) {
    switch (f.kind()) {
        case FormulaKind::Bottom: out += "false"; break;
        case FormulaKind::Prop: out += f.prop_name(); break;
        case FormulaKind::Not:
            out += '~';
            print_to(f.child(), out);
            break;
        case FormulaKind::And:
            out += '(';
            print_to(f.left(), out);
            out += " & ";
            print_to(f.right(), out);
            out += ')';
            break;
        case FormulaKind::Know:
        case FormulaKind::KnowHow:
            out += (f.kind() == FormulaKind::Know) ? "K[" : "Kh[";
            out += f.agent().id;
            out += "] ";
            print_to(f.child(), out);
            break;
    }
}

}  // namespace

std::string pretty(const Formula& phi) {
    std::string out;
    print_to(phi, out);
    return out;
}

// ── Parser ──────────────────────────────────────────────────────────────────

ParseError::ParseError(std::string msg, std::size_t byte_offset,
                       std::vector<std::string> expected_tokens)
    : std::runtime_error(std::move(msg)), offset(byte_offset), expected(std::move(expected_tokens)) {}

namespace {

struct Parser {
    std::string_view text;
    std::size_t pos = 0;  // 0-based cursor

    [[noreturn]] void fail(const std::string& what, std::size_t at,
                           std::vector<std::string> expected) {
        std::ostringstream os;
        os << "syntax error at offset " << (at + 1) << ": " << what;
        if (!expected.empty()) {
            os << " (expected ";
            for (std::size_t k = 0; k < expected.size(); ++k) {
                if (k) os << ", ";
                os << expected[k];
            }
            os << ")";
        }
        throw ParseError(os.str(), at + 1, std::move(expected));
    }

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool at_end() {
        skip_ws();
        return pos >= text.size();
    }

    char peek() { return text[pos]; }

    bool try_consume(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    void expect(char c, const char* token_name) {
        skip_ws();
        if (pos >= text.size() || text[pos] != c) {
            fail(pos >= text.size() ? "unexpected end of input" : "unexpected character",
                 pos, {token_name});
        }
        ++pos;
    }

    std::string ident() {
        skip_ws();
        std::size_t start = pos;
        if (pos >= text.size() || !std::isalpha(static_cast<unsigned char>(text[pos])))
            fail(pos >= text.size() ? "unexpected end of input" : "unexpected character",
                 pos, {"identifier"});
        ++pos;
        while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                     text[pos] == '_'))
            ++pos;
        return std::string(text.substr(start, pos - start));
    }

    static const std::vector<std::string>& phi_expected() {
        static const std::vector<std::string> toks = {"'false'", "'true'",  "identifier",
                                                      "'~'",     "'('",     "'K['",
                                                      "'Kh['"};
        return toks;
    }

    Formula parse_phi() {
        skip_ws();
        if (pos >= text.size()) fail("unexpected end of input", pos, phi_expected());
        char c = text[pos];
        if (c == '\\') fail("unknown escape", pos, phi_expected());
        if (c == '~') {
            ++pos;
            return Formula::neg(parse_phi());
        }
        if (c == '(') {
            ++pos;
            Formula lhs = parse_phi();
            skip_ws();
            if (pos >= text.size())
                fail("unexpected end of input", pos, {"'&'", "'|'", "'->'"});
            Formula result;
            if (try_consume('&')) {
                result = Formula::conj(lhs, parse_phi());
            } else if (try_consume('|')) {
                // (a|b) == ~(~a & ~b)
                Formula rhs = parse_phi();
                result = Formula::neg(
                    Formula::conj(Formula::neg(std::move(lhs)), Formula::neg(std::move(rhs))));
            } else if (text[pos] == '-') {
                ++pos;
                expect('>', "'->'");
                // (a->b) == ~(a & ~b)
                Formula rhs = parse_phi();
                result = Formula::neg(Formula::conj(std::move(lhs), Formula::neg(std::move(rhs))));
            } else {
                fail("unexpected character", pos, {"'&'", "'|'", "'->'"});
            }
            expect(')', "')'");
            return result;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t start = pos;
            std::string word = ident();
            if (word == "false") return Formula::bottom();
            if (word == "true") return Formula::neg(Formula::bottom());  // true == ~false
            if (word == "K" || word == "Kh") {
                skip_ws();
                if (pos < text.size() && text[pos] == '[') {
                    ++pos;
                    Agent i{ident()};
                    expect(']', "']'");
                    Formula body = parse_phi();
                    return word == "K" ? Formula::know(std::move(i), std::move(body))
                                       : Formula::know_how(std::move(i), std::move(body));
                }
                // bare K / Kh with no bracket is an ordinary proposition
                (void)start;
            }
            return Formula::prop(std::move(word));
        }
        fail("unexpected character", pos, phi_expected());
    }
};

}  // namespace

Formula parse_formula(std::string_view text) {
    Parser p{text};
    if (p.at_end()) throw ParseError("empty input", 1, Parser::phi_expected());
    Formula f = p.parse_phi();
    if (!p.at_end()) p.fail("trailing input", p.pos, {"end of input"});
    return f;
}

// ── Occurrence scans ────────────────────────────────────────────────────────

namespace {

template <typename Fn>
void walk(const Formula& f, Fn&& fn) {
    fn(f);
    switch (f.kind()) {
        case FormulaKind::Bottom:
        case FormulaKind::Prop: break;
        case FormulaKind::Not:
        case FormulaKind::Know:
        case FormulaKind::KnowHow: walk(f.child(), fn); break;
        case FormulaKind::And:
            walk(f.left(), fn);
            walk(f.right(), fn);
            break;
    }
}

}  // namespace

std::vector<Agent> agents_of(const Formula& phi) {
    std::set<std::string> ids;
    walk(phi, [&](const Formula& f) {
        if (f.kind() == FormulaKind::Know || f.kind() == FormulaKind::KnowHow)
            ids.insert(f.agent().id);
    });
    std::vector<Agent> out;
    for (const auto& id : ids) out.push_back(Agent{id});
    return out;
}

std::vector<std::string> props_of(const Formula& phi) {
    std::set<std::string> names;
    walk(phi, [&](const Formula& f) {
        if (f.kind() == FormulaKind::Prop) names.insert(f.prop_name());
    });
    return {names.begin(), names.end()};
}

bool mentions_know_how(const Formula& phi, const Agent& i) {
    bool found = false;
    walk(phi, [&](const Formula& f) {
        if (f.kind() == FormulaKind::KnowHow && f.agent().id == i.id) found = true;
    });
    return found;
}

}  // namespace elkh
