// tableau.hpp — the and-or tableau decision procedure for ELKh formulas.
//
// Nodes carry formula label sets with per-formula "checked" marks. Saturation
// (or-nodes) decomposes one unchecked formula per step along epsilon edges;
// expansion (and-nodes) spawns epistemic successors for ~K_i formulas and
// action successors for Kh_i / ~Kh_i combinations. Action successors whose
// label repeats an ancestor's are blocked and become leaves. The whole tree
// is explored depth first, retaining only the current path plus the open
// complete subtree under construction, so memory stays polynomial while the
// tree itself may not.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "elkh/formula.hpp"

namespace elkh {

// Action symbol a[Kh_i psi] labelling the successors introduced for a
// Kh_i psi / ~K_i psi pair. Symbols of distinct agents are always distinct.
struct ActionSymbol {
    Agent agent;
    Formula goal;

    std::string render() const;  // "a[Kh_i psi]"

    friend bool operator==(const ActionSymbol& a, const ActionSymbol& b) {
        return a.agent == b.agent && a.goal == b.goal;
    }
    friend std::strong_ordering operator<=>(const ActionSymbol& a, const ActionSymbol& b) {
        if (auto c = a.agent <=> b.agent; c != 0) return c;
        return a.goal <=> b.goal;
    }
};

struct EdgeLabel {
    enum class Kind : std::uint8_t { Epsilon, AgentStep, Action };

    Kind kind = Kind::Epsilon;
    Agent agent;          // AgentStep
    ActionSymbol action;  // Action

    static EdgeLabel epsilon() { return {}; }
    static EdgeLabel agent_step(Agent i) { return {Kind::AgentStep, std::move(i), {}}; }
    static EdgeLabel action_step(ActionSymbol a) { return {Kind::Action, {}, std::move(a)}; }

    bool is_epsilon() const { return kind == Kind::Epsilon; }
    std::string render() const;  // "ε", agent id, or "a[Kh_i psi]"

    friend bool operator==(const EdgeLabel&, const EdgeLabel&) = default;
};

// A node's formula set with checked marks, kept in canonical formula order.
class LabelSet {
public:
    LabelSet() = default;

    // Inserts unchecked; returns false when the formula was already present
    // (its mark is left untouched).
    bool insert(const Formula& f);
    bool contains(const Formula& f) const;
    int index_of(const Formula& f) const;  // -1 if absent

    std::size_t size() const { return formulas_.size(); }
    const Formula& at(std::size_t k) const { return formulas_[k]; }
    const std::vector<Formula>& formulas() const { return formulas_; }

    bool checked(std::size_t k) const { return checked_[k] != 0; }
    void set_checked(std::size_t k) { checked_[k] = 1; }
    void mark_checked(const Formula& f);
    int first_unchecked() const;  // -1 when fully checked
    bool all_checked() const { return first_unchecked() < 0; }

    // Set equality / comparison ignoring checked marks.
    bool same_formulas(const LabelSet& other) const { return formulas_ == other.formulas_; }
    bool same_formulas(std::span<const Formula> sorted) const;

    std::string render() const;  // comma-separated pretty forms

private:
    std::vector<Formula> formulas_;  // canonical order
    std::vector<char> checked_;
};

enum class NodeKind : std::uint8_t { Or, And, Leaf };

// Working node of the depth-first construction. blocked_by_path is an index
// into the current root path (-1 when unblocked); only action successors
// introduced for ~Kh formulas ever block.
struct TableauNode {
    LabelSet label;
    NodeKind kind = NodeKind::Leaf;
    EdgeLabel incoming;
    int blocked_by_path = -1;
    int depth = 0;
};

// Open complete subtree: or-nodes keep exactly the first open child, and-nodes
// keep all children. blocked_by indexes into nodes (the blocker is always an
// ancestor, hence retained).
struct Subtree {
    struct Node {
        LabelSet label;
        NodeKind kind = NodeKind::Leaf;
        EdgeLabel incoming;
        int parent = -1;
        std::vector<int> children;
        int blocked_by = -1;
        int depth = 0;
    };
    std::vector<Node> nodes;  // index 0 is the root

    std::string to_dot() const;
};

struct RunStats {
    std::uint64_t nodes_visited = 0;
    std::uint64_t max_depth = 0;
    std::uint64_t max_children = 0;
    std::uint64_t peak_path = 0;
    std::uint64_t closure_size = 0;  // m
};

// Full explored tree, recorded on request for DOT export.
struct TraceLog {
    struct Row {
        int parent = -1;
        EdgeLabel edge;
        std::string label_text;
        NodeKind kind = NodeKind::Leaf;
        int blocked_by = -1;
        bool inconsistent = false;
        bool open = false;
    };
    std::vector<Row> rows;

    std::string to_dot() const;
};

struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DecideOptions {
    std::uint64_t node_budget = 10'000'000;  // 0 disables the limit
    TraceLog* trace = nullptr;
};

struct Verdict {
    bool closed = false;
    std::optional<Subtree> open;  // present iff !closed
    RunStats stats;
};

// A set contains bottom or a complementary pair.
bool blatantly_inconsistent(std::span<const Formula> sorted_formulas);
bool blatantly_inconsistent(const LabelSet& label);

// Epistemic successor seed for a ~K_i psi trigger: {~psi} plus the K_i, ~K_i,
// Kh_i and ~Kh_i restrictions of the label.
std::vector<Formula> sigma_successor(const LabelSet& label, const Formula& neg_k);

// One saturation step: picks the first unchecked formula in canonical order,
// marks condition-failing formulas checked along the way, and returns the
// successor labels of the first applicable case (one, two or three children,
// all along epsilon edges). Empty optional: the node is fully saturated.
std::optional<std::vector<LabelSet>> saturation_step(TableauNode& node);

struct ExpansionChild {
    LabelSet label;
    EdgeLabel edge;
    int blocked_by_path = -1;
};

// Expansion children of a fully checked node, in canonical order: epistemic
// successors per ~K_i trigger (suppressed when an i-ancestor already carries
// exactly that label), then action successors per Kh_i/~K_i pair, then
// blocked-or-not action successors per ~Kh_i/Kh_i/~K_i triple. The path runs
// from the root to the node itself (inclusive).
std::vector<ExpansionChild> expansion_step(const TableauNode& node,
                                           std::span<const TableauNode* const> path);

// The production engine: labels are kept as bitmasks over the sub+ closure,
// which makes rule application and the ancestor scans word-sized operations.
// Closures beyond 1024 formulas are rejected.
Verdict decide(const Formula& phi0, const DecideOptions& options = {});

namespace detail {
// Reference engine driving the public rule operations above, node for node
// the same traversal as decide(); kept for differential testing.
Verdict decide_reference(const Formula& phi0, const DecideOptions& options = {});
}  // namespace detail

// Bound checks from the depth-first complexity argument: tree height at most
// m^6, per-node branching at most m + m^2 + m^3, retained path at most m^6+1.
bool assert_bounds(const RunStats& stats);

}  // namespace elkh
