// formula.hpp — formula AST for the epistemic logic of strategically knowing
// how (ELKh): bottom, propositions, negation, conjunction, K_i ("knows that")
// and Kh_i ("knows how"). Values are immutable trees with structural equality
// and a canonical total order used for all deterministic set iteration.

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace elkh {

// Agent identifier. Equality and ordering are by id.
struct Agent {
    std::string id;

    friend bool operator==(const Agent&, const Agent&) = default;
    friend auto operator<=>(const Agent&, const Agent&) = default;
};

enum class FormulaKind : std::uint8_t { Bottom, Prop, Not, And, Know, KnowHow };

const char* kind_name(FormulaKind k) noexcept;

// Immutable formula handle. Subtrees are shared on construction; equality is
// structural regardless of sharing. Derived connectives (or, implies, top)
// never appear in the tree — the parser desugars them.
class Formula {
public:
    Formula() = default;  // invalid handle; assert before use

    static Formula bottom();
    static Formula prop(std::string name);
    static Formula neg(Formula f);
    static Formula conj(Formula lhs, Formula rhs);
    static Formula know(Agent i, Formula f);
    static Formula know_how(Agent i, Formula f);

    bool valid() const noexcept { return node_ != nullptr; }
    FormulaKind kind() const;

    const std::string& prop_name() const;  // Prop
    const Agent& agent() const;            // Know, KnowHow
    const Formula& child() const;          // Not, Know, KnowHow
    const Formula& left() const;           // And
    const Formula& right() const;          // And

    // Modal nesting measure: bottom/props 0, ~ transparent, & takes max,
    // K adds 1, Kh adds 2.
    int depth() const;
    // Number of AST nodes.
    int node_count() const;

    std::size_t hash() const;

    friend bool operator==(const Formula& a, const Formula& b);
    friend std::strong_ordering operator<=>(const Formula& a, const Formula& b);

private:
    struct Node;
    explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

struct FormulaHash {
    std::size_t operator()(const Formula& f) const noexcept { return f.hash(); }
};

// ~phi with one syntactic twist: the complement of a negation is its body,
// so complement(complement(phi)) never piles up double negations.
Formula complement(const Formula& phi);

int depth(const Formula& phi);

// sub+ closure of a seed formula: every subformula together with its
// negation, plus K_i psi and ~K_i psi for every Kh_i psi subformula.
// The member count is the size parameter m that drives all tableau bounds.
class ClosureSet {
public:
    explicit ClosureSet(const Formula& seed);

    const Formula& seed() const { return seed_; }
    bool contains(const Formula& f) const;
    std::size_t size() const { return formulas_.size(); }
    const std::vector<Formula>& formulas() const { return formulas_; }

private:
    Formula seed_;
    std::vector<Formula> formulas_;  // canonical order, unique
};

inline ClosureSet sub_plus(const Formula& seed) { return ClosureSet(seed); }

// ── Concrete syntax ─────────────────────────────────────────────────────────
//
//   phi ::= "false" | "true" | IDENT | "~" phi | "(" phi OP phi ")"
//         | "K[" IDENT "]" phi | "Kh[" IDENT "]" phi
//   OP  ::= "&" | "|" | "->"
//
// IDENT = [a-zA-Z][a-zA-Z0-9_]*. "true", "|" and "->" are sugar:
// true ≡ ~false, (a|b) ≡ ~(~a & ~b), (a->b) ≡ ~(a & ~b). Unary operators
// bind tighter than binary; binary forms require parentheses.

struct ParseError : std::runtime_error {
    ParseError(std::string msg, std::size_t byte_offset,
               std::vector<std::string> expected_tokens = {});

    std::size_t offset;                 // 1-based byte offset
    std::vector<std::string> expected;  // tokens that would have been accepted
};

Formula parse_formula(std::string_view text);

// Emits the grammar above; parse_formula(pretty(phi)) == phi. Sugar is never
// produced (so ~false stays ~false).
std::string pretty(const Formula& phi);

// Agents / proposition names occurring in a formula, in canonical order.
std::vector<Agent> agents_of(const Formula& phi);
std::vector<std::string> props_of(const Formula& phi);
bool mentions_know_how(const Formula& phi, const Agent& i);

}  // namespace elkh
