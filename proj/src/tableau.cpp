// tableau.cpp — construction rules and the depth-first search.

#include "elkh/tableau.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <sstream>

namespace elkh {

std::string ActionSymbol::render() const {
    return "a[Kh_" + agent.id + " " + pretty(goal) + "]";
}

std::string EdgeLabel::render() const {
    switch (kind) {
        case Kind::Epsilon: return "ε";
        case Kind::AgentStep: return agent.id;
        case Kind::Action: return action.render();
    }
    return "?";
}

// ── LabelSet ────────────────────────────────────────────────────────────────

bool LabelSet::insert(const Formula& f) {
    auto it = std::lower_bound(formulas_.begin(), formulas_.end(), f);
    if (it != formulas_.end() && *it == f) return false;
    checked_.insert(checked_.begin() + (it - formulas_.begin()), 0);
    formulas_.insert(it, f);
    return true;
}

bool LabelSet::contains(const Formula& f) const {
    return std::binary_search(formulas_.begin(), formulas_.end(), f);
}

int LabelSet::index_of(const Formula& f) const {
    auto it = std::lower_bound(formulas_.begin(), formulas_.end(), f);
    if (it == formulas_.end() || !(*it == f)) return -1;
    return static_cast<int>(it - formulas_.begin());
}

void LabelSet::mark_checked(const Formula& f) {
    int k = index_of(f);
    assert(k >= 0);
    checked_[k] = 1;
}

int LabelSet::first_unchecked() const {
    for (std::size_t k = 0; k < formulas_.size(); ++k)
        if (!checked_[k]) return static_cast<int>(k);
    return -1;
}

bool LabelSet::same_formulas(std::span<const Formula> sorted) const {
    return formulas_.size() == sorted.size() &&
           std::equal(formulas_.begin(), formulas_.end(), sorted.begin());
}

std::string LabelSet::render() const {
    std::string out;
    for (std::size_t k = 0; k < formulas_.size(); ++k) {
        if (k) out += ", ";
        out += pretty(formulas_[k]);
    }
    return out;
}

// ── Rules ───────────────────────────────────────────────────────────────────

bool blatantly_inconsistent(std::span<const Formula> sorted) {
    for (const Formula& f : sorted) {
        if (f.kind() == FormulaKind::Bottom) return true;
        if (f.kind() == FormulaKind::Not &&
            std::binary_search(sorted.begin(), sorted.end(), f.child()))
            return true;
    }
    return false;
}

bool blatantly_inconsistent(const LabelSet& label) {
    return blatantly_inconsistent(std::span<const Formula>(label.formulas()));
}

std::vector<Formula> sigma_successor(const LabelSet& label, const Formula& neg_k) {
    assert(neg_k.kind() == FormulaKind::Not && neg_k.child().kind() == FormulaKind::Know);
    assert(label.contains(neg_k));
    const Agent& i = neg_k.child().agent();

    std::vector<Formula> out;
    out.push_back(Formula::neg(neg_k.child().child()));  // ~psi
    for (const Formula& f : label.formulas()) {
        // keep K_i, ~K_i, Kh_i and ~Kh_i formulas of the triggering agent
        if ((f.kind() == FormulaKind::Know || f.kind() == FormulaKind::KnowHow) &&
            f.agent() == i) {
            out.push_back(f);
        } else if (f.kind() == FormulaKind::Not) {
            const Formula& body = f.child();
            if ((body.kind() == FormulaKind::Know || body.kind() == FormulaKind::KnowHow) &&
                body.agent() == i)
                out.push_back(f);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace {

LabelSet child_label(const LabelSet& parent, const Formula& trigger,
                     std::initializer_list<Formula> additions) {
    LabelSet out = parent;  // keeps existing checked marks
    out.mark_checked(trigger);
    for (const Formula& f : additions) out.insert(f);
    return out;
}

}  // namespace

std::optional<std::vector<LabelSet>> saturation_step(TableauNode& node) {
    LabelSet& label = node.label;
    for (;;) {
        int idx = label.first_unchecked();
        if (idx < 0) return std::nullopt;
        const Formula phi = label.at(idx);

        switch (phi.kind()) {
            case FormulaKind::Not: {
                const Formula& body = phi.child();
                switch (body.kind()) {
                    case FormulaKind::Not: {  // (a) double negation
                        const Formula& psi = body.child();
                        if (!label.contains(psi))
                            return std::vector<LabelSet>{child_label(label, phi, {psi})};
                        break;
                    }
                    case FormulaKind::And: {  // (c) negated conjunction, three-way split
                        Formula nl = Formula::neg(body.left());
                        Formula nr = Formula::neg(body.right());
                        bool s1 = label.contains(nl) && label.contains(nr);
                        bool s2 = label.contains(nl) && label.contains(body.right());
                        bool s3 = label.contains(body.left()) && label.contains(nr);
                        if (!s1 && !s2 && !s3)
                            return std::vector<LabelSet>{
                                child_label(label, phi, {nl, nr}),
                                child_label(label, phi, {nl, body.right()}),
                                child_label(label, phi, {body.left(), nr})};
                        break;
                    }
                    case FormulaKind::Know: {  // (e) cut on the body of ~K_i psi
                        const Formula& psi = body.child();
                        Formula np = Formula::neg(psi);
                        if (!label.contains(np) && !label.contains(psi))
                            return std::vector<LabelSet>{child_label(label, phi, {np}),
                                                         child_label(label, phi, {psi})};
                        break;
                    }
                    case FormulaKind::KnowHow: {  // (g) ~Kh_i psi forces ~K_i psi
                        Formula nk = Formula::neg(Formula::know(body.agent(), body.child()));
                        if (!label.contains(nk))
                            return std::vector<LabelSet>{child_label(label, phi, {nk})};
                        break;
                    }
                    default: break;  // ~false, ~p: nothing to decompose
                }
                break;
            }
            case FormulaKind::And: {  // (b)
                if (!label.contains(phi.left()) || !label.contains(phi.right()))
                    return std::vector<LabelSet>{
                        child_label(label, phi, {phi.left(), phi.right()})};
                break;
            }
            case FormulaKind::Know: {  // (d) reflexivity
                if (!label.contains(phi.child()))
                    return std::vector<LabelSet>{child_label(label, phi, {phi.child()})};
                break;
            }
            case FormulaKind::KnowHow: {  // (f) cut on K_i psi
                Formula k = Formula::know(phi.agent(), phi.child());
                Formula nk = Formula::neg(k);
                if (!label.contains(nk) && !label.contains(k))
                    return std::vector<LabelSet>{child_label(label, phi, {nk}),
                                                 child_label(label, phi, {k})};
                break;
            }
            case FormulaKind::Bottom:
            case FormulaKind::Prop: break;
        }

        label.set_checked(idx);  // (h)
    }
}

namespace {

// True when `candidate` (a strict ancestor at path position j) is an
// i-ancestor of the node at the end of the path: every edge from it down to
// the end is labelled the given agent or epsilon.
bool i_ancestor_reaches_end(std::span<const TableauNode* const> path, std::size_t j,
                            const Agent& i) {
    for (std::size_t k = j + 1; k < path.size(); ++k) {
        const EdgeLabel& e = path[k]->incoming;
        if (e.kind == EdgeLabel::Kind::Epsilon) continue;
        if (e.kind == EdgeLabel::Kind::AgentStep && e.agent == i) continue;
        return false;
    }
    return true;
}

}  // namespace

std::vector<ExpansionChild> expansion_step(const TableauNode& node,
                                           std::span<const TableauNode* const> path) {
    assert(!path.empty() && path.back() == &node);
    assert(node.label.all_checked());
    const LabelSet& label = node.label;

    std::vector<ExpansionChild> out;

    // (i) epistemic successor per ~K_i psi trigger, with the S5 loop check.
    for (const Formula& f : label.formulas()) {
        if (f.kind() != FormulaKind::Not || f.child().kind() != FormulaKind::Know) continue;
        const Agent& i = f.child().agent();
        std::vector<Formula> sigma = sigma_successor(label, f);

        bool suppressed = false;
        for (std::size_t j = 0; j + 1 < path.size() && !suppressed; ++j) {
            if (!i_ancestor_reaches_end(path, j, i)) continue;
            suppressed = path[j]->label.same_formulas(sigma);
        }
        if (suppressed) continue;

        LabelSet child;
        for (const Formula& g : sigma) child.insert(g);
        out.push_back({std::move(child), EdgeLabel::agent_step(i), -1});
    }

    // (j) action successor {K_i psi} for each Kh_i psi with ~K_i psi present.
    for (const Formula& f : label.formulas()) {
        if (f.kind() != FormulaKind::KnowHow) continue;
        Formula k = Formula::know(f.agent(), f.child());
        if (!label.contains(Formula::neg(k))) continue;
        LabelSet child;
        child.insert(k);
        out.push_back({std::move(child), EdgeLabel::action_step({f.agent(), f.child()}), -1});
    }

    // (k) action successor {K_i psi, ~Kh_i chi} per Kh_i psi / ~Kh_i chi pair
    // of the same agent (with ~K_i psi present); equal-labelled ancestors
    // block, nearest one winning.
    for (const Formula& f : label.formulas()) {
        if (f.kind() != FormulaKind::KnowHow) continue;
        Formula k = Formula::know(f.agent(), f.child());
        if (!label.contains(Formula::neg(k))) continue;
        for (const Formula& g : label.formulas()) {
            if (g.kind() != FormulaKind::Not || g.child().kind() != FormulaKind::KnowHow) continue;
            if (!(g.child().agent() == f.agent())) continue;
            LabelSet child;
            child.insert(k);
            child.insert(g);

            int blocked_by = -1;
            for (int j = static_cast<int>(path.size()) - 1; j >= 0; --j) {
                if (path[j]->label.same_formulas(child)) {
                    blocked_by = j;
                    break;
                }
            }
            out.push_back(
                {std::move(child), EdgeLabel::action_step({f.agent(), f.child()}), blocked_by});
        }
    }

    return out;
}

// ── Reference engine: rule-operation driven depth-first search ──────────────

namespace {

struct OpenNode {
    LabelSet label;
    NodeKind kind = NodeKind::Leaf;
    EdgeLabel incoming;
    int blocked_by_path = -1;
    int depth = 0;
    std::vector<OpenNode> children;
};

struct ReferenceDfs {
    const ClosureSet& closure;
    const DecideOptions& options;
    RunStats stats;
    std::vector<const TableauNode*> path;
    std::vector<int> trace_path;  // trace row per path entry

    void check_label_in_closure(const LabelSet& label) {
        for (const Formula& f : label.formulas())
            if (!closure.contains(f))
                throw std::logic_error("tableau invariant violated: label formula '" + pretty(f) +
                                       "' outside the sub+ closure");
    }

    int trace_enter(const TableauNode& node, int parent_row) {
        if (!options.trace) return -1;
        TraceLog::Row row;
        row.parent = parent_row;
        row.edge = node.incoming;
        row.label_text = node.label.render();
        row.blocked_by = node.blocked_by_path >= 0 ? trace_path[node.blocked_by_path] : -1;
        options.trace->rows.push_back(std::move(row));
        return static_cast<int>(options.trace->rows.size()) - 1;
    }

    void trace_update(int row, NodeKind kind, bool inconsistent, bool open) {
        if (!options.trace || row < 0) return;
        options.trace->rows[row].kind = kind;
        options.trace->rows[row].inconsistent = inconsistent;
        options.trace->rows[row].open = open;
    }

    // Evaluates the closedness recursion; returns the open subtree when open.
    std::optional<OpenNode> visit(TableauNode& node, int parent_row) {
        ++stats.nodes_visited;
        if (options.node_budget && stats.nodes_visited > options.node_budget)
            throw BudgetError("node budget exceeded after " +
                              std::to_string(stats.nodes_visited - 1) + " visits");
        stats.max_depth = std::max<std::uint64_t>(stats.max_depth, node.depth);
        check_label_in_closure(node.label);

        int row = trace_enter(node, parent_row);
        path.push_back(&node);
        trace_path.push_back(row);
        stats.peak_path = std::max<std::uint64_t>(stats.peak_path, path.size());
        struct PopGuard {
            ReferenceDfs& d;
            ~PopGuard() {
                d.path.pop_back();
                d.trace_path.pop_back();
            }
        } guard{*this};

        if (blatantly_inconsistent(node.label)) {
            trace_update(row, NodeKind::Leaf, true, false);
            return std::nullopt;
        }
        if (node.blocked_by_path >= 0) {
            trace_update(row, NodeKind::Leaf, false, true);
            OpenNode open{node.label, NodeKind::Leaf, node.incoming, node.blocked_by_path,
                          node.depth, {}};
            return open;
        }

        if (auto children = saturation_step(node)) {
            node.kind = NodeKind::Or;
            stats.max_children = std::max<std::uint64_t>(stats.max_children, children->size());
            for (LabelSet& child_label : *children) {
                TableauNode child{std::move(child_label), NodeKind::Leaf, EdgeLabel::epsilon(), -1,
                                  node.depth + 1};
                if (auto open = visit(child, row)) {
                    trace_update(row, NodeKind::Or, false, true);
                    OpenNode self{node.label, NodeKind::Or, node.incoming, -1, node.depth, {}};
                    self.children.push_back(std::move(*open));
                    return self;  // first open child in canonical order
                }
            }
            trace_update(row, NodeKind::Or, false, false);
            return std::nullopt;  // or-node: all children closed
        }

        std::vector<ExpansionChild> kids = expansion_step(node, path);
        stats.max_children = std::max<std::uint64_t>(stats.max_children, kids.size());
        if (kids.empty()) {
            node.kind = NodeKind::Leaf;  // saturated, expansion-free, consistent
            trace_update(row, NodeKind::Leaf, false, true);
            return OpenNode{node.label, NodeKind::Leaf, node.incoming, -1, node.depth, {}};
        }

        node.kind = NodeKind::And;
        // Action successors carry two-formula labels and refute cheaply, so
        // they are evaluated first; an and-node needs all children open, so
        // the retained subtree (assembled in canonical order) is unaffected.
        std::vector<std::size_t> order;
        for (std::size_t k = 0; k < kids.size(); ++k)
            if (kids[k].edge.kind == EdgeLabel::Kind::Action) order.push_back(k);
        for (std::size_t k = 0; k < kids.size(); ++k)
            if (kids[k].edge.kind != EdgeLabel::Kind::Action) order.push_back(k);

        std::vector<std::optional<OpenNode>> results(kids.size());
        for (std::size_t k : order) {
            TableauNode child{std::move(kids[k].label), NodeKind::Leaf, kids[k].edge,
                              kids[k].blocked_by_path, node.depth + 1};
            results[k] = visit(child, row);
            if (!results[k]) {
                trace_update(row, NodeKind::And, false, false);
                return std::nullopt;  // and-node: some child closed
            }
        }
        OpenNode self{node.label, NodeKind::And, node.incoming, -1, node.depth, {}};
        for (std::size_t k = 0; k < kids.size(); ++k)
            self.children.push_back(std::move(*results[k]));
        trace_update(row, NodeKind::And, false, true);
        return self;
    }
};

void flatten(const OpenNode& node, int parent, std::vector<int>& path_index, Subtree& out) {
    int idx = static_cast<int>(out.nodes.size());
    out.nodes.push_back({node.label, node.kind, node.incoming, parent, {}, -1, node.depth});
    if (parent >= 0) out.nodes[parent].children.push_back(idx);
    if (node.blocked_by_path >= 0) {
        assert(node.blocked_by_path < static_cast<int>(path_index.size()));
        out.nodes[idx].blocked_by = path_index[node.blocked_by_path];
    }
    path_index.push_back(idx);
    for (const OpenNode& child : node.children) flatten(child, idx, path_index, out);
    path_index.pop_back();
}

void finish_verdict(Verdict& verdict, std::optional<OpenNode> open) {
    verdict.closed = !open.has_value();
    if (open) {
        Subtree tree;
        std::vector<int> path_index;
        flatten(*open, -1, path_index, tree);
        verdict.open = std::move(tree);
    }
    if (!assert_bounds(verdict.stats))
        throw std::logic_error("tableau bounds violated (depth/children/path exceed the m^6 "
                               "envelope)");
}

}  // namespace

namespace detail {

Verdict decide_reference(const Formula& phi0, const DecideOptions& options) {
    ClosureSet closure(phi0);
    ReferenceDfs dfs{closure, options, {}, {}, {}};
    dfs.stats.closure_size = closure.size();

    TableauNode root;
    root.label.insert(phi0);
    root.depth = 0;

    std::optional<OpenNode> open = dfs.visit(root, -1);
    Verdict verdict;
    verdict.stats = dfs.stats;
    finish_verdict(verdict, std::move(open));
    return verdict;
}

}  // namespace detail

// ── Production engine: closure-indexed bitmask labels ───────────────────────
//
// Every label is a subset of sub+(phi0), so a label fits in ceil(m/64) words
// of membership bits plus the same of checked marks. All rule operands
// (negations, bodies, K-pairs) are themselves closure members, precomputed
// once per run as index tables; rule application and the ancestor scans of
// the loop check and blocking then cost a handful of word operations.

namespace {

template <int W>
struct Bits {
    std::array<std::uint64_t, W> w{};

    bool test(int i) const { return (w[i >> 6] >> (i & 63)) & 1u; }
    void set(int i) { w[i >> 6] |= std::uint64_t{1} << (i & 63); }

    friend bool operator==(const Bits& a, const Bits& b) { return a.w == b.w; }

    Bits operator|(const Bits& o) const {
        Bits r;
        for (int k = 0; k < W; ++k) r.w[k] = w[k] | o.w[k];
        return r;
    }
    Bits operator&(const Bits& o) const {
        Bits r;
        for (int k = 0; k < W; ++k) r.w[k] = w[k] & o.w[k];
        return r;
    }

    // lowest index set in *this and clear in `marks`, or -1
    int first_unmarked(const Bits& marks) const {
        for (int k = 0; k < W; ++k) {
            std::uint64_t x = w[k] & ~marks.w[k];
            if (x) return k * 64 + std::countr_zero(x);
        }
        return -1;
    }

    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (int k = 0; k < W; ++k) {
            std::uint64_t x = w[k];
            while (x) {
                int b = std::countr_zero(x);
                x &= x - 1;
                fn(k * 64 + b);
            }
        }
    }
};

// Per-run rule tables over the closure's canonical formula order.
struct RuleIndex {
    enum class Case : std::uint8_t { None, DoubleNeg, NegAnd, Conj, Know, NegKnow, Kh, NegKh };
    struct Sat {
        Case c = Case::None;
        int x = -1, y = -1, nx = -1, ny = -1;  // operand indices, per case
    };
    struct NegKTrigger {
        int idx;       // index of the ~K_i psi formula
        int agent;     // agent ordinal
        int neg_body;  // index of ~psi
    };
    struct KhInfo {
        int idx;    // index of the Kh_i psi formula
        int agent;  // agent ordinal
        int k;      // index of K_i psi
        int nk;     // index of ~K_i psi
    };

    std::vector<Formula> fms;  // closure, canonical order
    std::vector<Agent> agents;
    int bottom = -1;
    std::vector<int> comp;  // complement index per formula
    std::vector<Sat> sat;
    std::vector<NegKTrigger> negks;
    std::vector<KhInfo> khs;
    std::vector<std::pair<int, int>> negkhs;               // (formula idx, agent ordinal)
    std::vector<std::vector<int>> modal_bits_per_agent;    // K_i/~K_i/Kh_i/~Kh_i indices

    int index_of(const Formula& f) const {
        auto it = std::lower_bound(fms.begin(), fms.end(), f);
        if (it == fms.end() || !(*it == f))
            throw std::logic_error("tableau invariant violated: formula '" + pretty(f) +
                                   "' outside the sub+ closure");
        return static_cast<int>(it - fms.begin());
    }

    int agent_ordinal(const Agent& a) {
        auto it = std::lower_bound(agents.begin(), agents.end(), a);
        return static_cast<int>(it - agents.begin());
    }

    explicit RuleIndex(const ClosureSet& closure) : fms(closure.formulas()) {
        const int m = static_cast<int>(fms.size());
        for (const Formula& f : fms) {
            const Formula* g = &f;
            if (g->kind() == FormulaKind::Not) g = &g->child();
            if (g->kind() == FormulaKind::Know || g->kind() == FormulaKind::KnowHow) {
                auto it = std::lower_bound(agents.begin(), agents.end(), g->agent());
                if (it == agents.end() || !(*it == g->agent())) agents.insert(it, g->agent());
            }
        }
        modal_bits_per_agent.assign(agents.size(), {});

        comp.resize(m);
        sat.resize(m);
        for (int i = 0; i < m; ++i) {
            const Formula& f = fms[i];
            comp[i] = index_of(complement(f));
            switch (f.kind()) {
                case FormulaKind::Bottom: bottom = i; break;
                case FormulaKind::Prop: break;
                case FormulaKind::And:
                    sat[i] = {Case::Conj, index_of(f.left()), index_of(f.right()), -1, -1};
                    break;
                case FormulaKind::Know: {
                    sat[i] = {Case::Know, index_of(f.child()), -1, -1, -1};
                    modal_bits_per_agent[agent_ordinal(f.agent())].push_back(i);
                    break;
                }
                case FormulaKind::KnowHow: {
                    Formula k = Formula::know(f.agent(), f.child());
                    int agent = agent_ordinal(f.agent());
                    sat[i] = {Case::Kh, index_of(k), -1, index_of(Formula::neg(k)), -1};
                    modal_bits_per_agent[agent].push_back(i);
                    khs.push_back({i, agent, sat[i].x, sat[i].nx});
                    break;
                }
                case FormulaKind::Not: {
                    const Formula& body = f.child();
                    switch (body.kind()) {
                        case FormulaKind::Not:
                            sat[i] = {Case::DoubleNeg, index_of(body.child()), -1, -1, -1};
                            break;
                        case FormulaKind::And:
                            sat[i] = {Case::NegAnd, index_of(body.left()), index_of(body.right()),
                                      index_of(Formula::neg(body.left())),
                                      index_of(Formula::neg(body.right()))};
                            break;
                        case FormulaKind::Know: {
                            int agent = agent_ordinal(body.agent());
                            sat[i] = {Case::NegKnow, index_of(body.child()), -1,
                                      index_of(Formula::neg(body.child())), -1};
                            modal_bits_per_agent[agent].push_back(i);
                            negks.push_back({i, agent, sat[i].nx});
                            break;
                        }
                        case FormulaKind::KnowHow: {
                            int agent = agent_ordinal(body.agent());
                            Formula nk = Formula::neg(Formula::know(body.agent(), body.child()));
                            sat[i] = {Case::NegKh, -1, -1, index_of(nk), -1};
                            modal_bits_per_agent[agent].push_back(i);
                            negkhs.emplace_back(i, agent);
                            break;
                        }
                        default: break;
                    }
                    break;
                }
            }
        }
    }
};

struct CoreEdge {
    EdgeLabel::Kind kind = EdgeLabel::Kind::Epsilon;
    int agent = -1;  // agent ordinal for AgentStep
    int kh = -1;     // Kh formula index for Action
};

EdgeLabel to_edge_label(const RuleIndex& ix, const CoreEdge& e) {
    switch (e.kind) {
        case EdgeLabel::Kind::Epsilon: return EdgeLabel::epsilon();
        case EdgeLabel::Kind::AgentStep: return EdgeLabel::agent_step(ix.agents[e.agent]);
        case EdgeLabel::Kind::Action: {
            const Formula& kh = ix.fms[e.kh];
            return EdgeLabel::action_step({kh.agent(), kh.child()});
        }
    }
    return EdgeLabel::epsilon();
}

template <int W>
struct FastDfs {
    struct NodeT {
        Bits<W> fms, checked;
        CoreEdge incoming;
        int blocked_by_path = -1;
        int depth = 0;
    };
    struct OpenT {
        Bits<W> fms, checked;
        NodeKind kind = NodeKind::Leaf;
        CoreEdge incoming;
        int blocked_by_path = -1;
        int depth = 0;
        std::vector<OpenT> children;
    };
    struct KidT {
        Bits<W> fms;
        CoreEdge edge;
        int blocked_by_path = -1;
    };

    const RuleIndex& ix;
    const DecideOptions& options;
    RunStats stats;
    std::vector<Bits<W>> restriction;  // per agent ordinal
    std::vector<const NodeT*> path;
    std::vector<int> trace_path;

    FastDfs(const RuleIndex& index, const DecideOptions& opts) : ix(index), options(opts) {
        restriction.resize(ix.agents.size());
        for (std::size_t a = 0; a < ix.agents.size(); ++a)
            for (int i : ix.modal_bits_per_agent[a]) restriction[a].set(i);
    }

    bool inconsistent(const Bits<W>& fms) const {
        bool bad = false;
        fms.for_each([&](int i) {
            if (i == ix.bottom || fms.test(ix.comp[i])) bad = true;
        });
        return bad;
    }

    std::string render(const Bits<W>& fms) const {
        std::string out;
        fms.for_each([&](int i) {
            if (!out.empty()) out += ", ";
            out += pretty(ix.fms[i]);
        });
        return out;
    }

    int trace_enter(const NodeT& node, int parent_row) {
        if (!options.trace) return -1;
        TraceLog::Row row;
        row.parent = parent_row;
        row.edge = to_edge_label(ix, node.incoming);
        row.label_text = render(node.fms);
        row.blocked_by = node.blocked_by_path >= 0 ? trace_path[node.blocked_by_path] : -1;
        options.trace->rows.push_back(std::move(row));
        return static_cast<int>(options.trace->rows.size()) - 1;
    }

    void trace_update(int row, NodeKind kind, bool bad, bool open) {
        if (!options.trace || row < 0) return;
        options.trace->rows[row].kind = kind;
        options.trace->rows[row].inconsistent = bad;
        options.trace->rows[row].open = open;
    }

    // Saturation: marks condition-failing formulas checked in place, returns
    // the children of the first applicable case. Mirrors saturation_step.
    std::optional<std::vector<Bits<W>>> saturate(NodeT& node) {
        for (;;) {
            int i = node.fms.first_unmarked(node.checked);
            if (i < 0) return std::nullopt;
            const RuleIndex::Sat& rule = ix.sat[i];
            auto child = [&](std::initializer_list<int> adds) {
                Bits<W> out = node.fms;
                for (int b : adds) out.set(b);
                return out;
            };
            switch (rule.c) {
                case RuleIndex::Case::DoubleNeg:
                    if (!node.fms.test(rule.x)) {
                        node.checked.set(i);
                        return std::vector<Bits<W>>{child({rule.x})};
                    }
                    break;
                case RuleIndex::Case::Conj:
                    if (!node.fms.test(rule.x) || !node.fms.test(rule.y)) {
                        node.checked.set(i);
                        return std::vector<Bits<W>>{child({rule.x, rule.y})};
                    }
                    break;
                case RuleIndex::Case::NegAnd: {
                    bool s1 = node.fms.test(rule.nx) && node.fms.test(rule.ny);
                    bool s2 = node.fms.test(rule.nx) && node.fms.test(rule.y);
                    bool s3 = node.fms.test(rule.x) && node.fms.test(rule.ny);
                    if (!s1 && !s2 && !s3) {
                        node.checked.set(i);
                        return std::vector<Bits<W>>{child({rule.nx, rule.ny}),
                                                    child({rule.nx, rule.y}),
                                                    child({rule.x, rule.ny})};
                    }
                    break;
                }
                case RuleIndex::Case::Know:
                    if (!node.fms.test(rule.x)) {
                        node.checked.set(i);
                        return std::vector<Bits<W>>{child({rule.x})};
                    }
                    break;
                case RuleIndex::Case::NegKnow:
                    if (!node.fms.test(rule.nx) && !node.fms.test(rule.x)) {
                        node.checked.set(i);
                        return std::vector<Bits<W>>{child({rule.nx}), child({rule.x})};
                    }
                    break;
                case RuleIndex::Case::Kh:
                    if (!node.fms.test(rule.nx) && !node.fms.test(rule.x)) {
                        node.checked.set(i);
                        return std::vector<Bits<W>>{child({rule.nx}), child({rule.x})};
                    }
                    break;
                case RuleIndex::Case::NegKh:
                    if (!node.fms.test(rule.nx)) {
                        node.checked.set(i);
                        return std::vector<Bits<W>>{child({rule.nx})};
                    }
                    break;
                case RuleIndex::Case::None: break;
            }
            node.checked.set(i);
        }
    }

    // Expansion children in canonical order. The node is path.back().
    std::vector<KidT> expand(const NodeT& node) {
        std::vector<KidT> out;
        const Bits<W>& fms = node.fms;

        // (i) epistemic successors with the loop check against i-ancestors
        for (const RuleIndex::NegKTrigger& t : ix.negks) {
            if (!fms.test(t.idx)) continue;
            Bits<W> sigma = fms & restriction[t.agent];
            sigma.set(t.neg_body);
            bool suppressed = false;
            for (int j = static_cast<int>(path.size()) - 2; j >= 0; --j) {
                const CoreEdge& e = path[j + 1]->incoming;  // edge into path[j+1]
                bool compatible = e.kind == EdgeLabel::Kind::Epsilon ||
                                  (e.kind == EdgeLabel::Kind::AgentStep && e.agent == t.agent);
                if (!compatible) break;
                if (path[j]->fms == sigma) {
                    suppressed = true;
                    break;
                }
            }
            if (suppressed) continue;
            out.push_back({sigma, {EdgeLabel::Kind::AgentStep, t.agent, -1}, -1});
        }

        // (j) action successors {K_i psi}
        for (const RuleIndex::KhInfo& kh : ix.khs) {
            if (!fms.test(kh.idx) || !fms.test(kh.nk)) continue;
            Bits<W> label;
            label.set(kh.k);
            out.push_back({label, {EdgeLabel::Kind::Action, -1, kh.idx}, -1});
        }

        // (k) action successors {K_i psi, ~Kh_i chi}, blocked by the nearest
        // equal-labelled ancestor
        for (const RuleIndex::KhInfo& kh : ix.khs) {
            if (!fms.test(kh.idx) || !fms.test(kh.nk)) continue;
            for (const auto& [nidx, nagent] : ix.negkhs) {
                if (nagent != kh.agent || !fms.test(nidx)) continue;
                Bits<W> label;
                label.set(kh.k);
                label.set(nidx);
                int blocked_by = -1;
                for (int j = static_cast<int>(path.size()) - 1; j >= 0; --j) {
                    if (path[j]->fms == label) {
                        blocked_by = j;
                        break;
                    }
                }
                out.push_back({label, {EdgeLabel::Kind::Action, -1, kh.idx}, blocked_by});
            }
        }
        return out;
    }

    std::optional<OpenT> visit(NodeT& node, int parent_row) {
        ++stats.nodes_visited;
        if (options.node_budget && stats.nodes_visited > options.node_budget)
            throw BudgetError("node budget exceeded after " +
                              std::to_string(stats.nodes_visited - 1) + " visits");
        stats.max_depth = std::max<std::uint64_t>(stats.max_depth, node.depth);

        int row = trace_enter(node, parent_row);
        path.push_back(&node);
        trace_path.push_back(row);
        stats.peak_path = std::max<std::uint64_t>(stats.peak_path, path.size());
        struct PopGuard {
            FastDfs& d;
            ~PopGuard() {
                d.path.pop_back();
                d.trace_path.pop_back();
            }
        } guard{*this};

        if (inconsistent(node.fms)) {
            trace_update(row, NodeKind::Leaf, true, false);
            return std::nullopt;
        }
        if (node.blocked_by_path >= 0) {
            trace_update(row, NodeKind::Leaf, false, true);
            return OpenT{node.fms,  node.checked, NodeKind::Leaf, node.incoming,
                         node.blocked_by_path, node.depth,        {}};
        }

        if (auto children = saturate(node)) {
            stats.max_children = std::max<std::uint64_t>(stats.max_children, children->size());
            for (Bits<W>& child_fms : *children) {
                NodeT child{child_fms, node.checked, {}, -1, node.depth + 1};
                if (auto open = visit(child, row)) {
                    trace_update(row, NodeKind::Or, false, true);
                    OpenT self{node.fms, node.checked, NodeKind::Or, node.incoming, -1,
                               node.depth, {}};
                    self.children.push_back(std::move(*open));
                    return self;
                }
            }
            trace_update(row, NodeKind::Or, false, false);
            return std::nullopt;
        }

        std::vector<KidT> kids = expand(node);
        stats.max_children = std::max<std::uint64_t>(stats.max_children, kids.size());
        if (kids.empty()) {
            trace_update(row, NodeKind::Leaf, false, true);
            return OpenT{node.fms, node.checked, NodeKind::Leaf, node.incoming, -1,
                         node.depth, {}};
        }

        // action successors first, mirroring the reference engine
        std::vector<std::size_t> order;
        for (std::size_t k = 0; k < kids.size(); ++k)
            if (kids[k].edge.kind == EdgeLabel::Kind::Action) order.push_back(k);
        for (std::size_t k = 0; k < kids.size(); ++k)
            if (kids[k].edge.kind != EdgeLabel::Kind::Action) order.push_back(k);

        std::vector<std::optional<OpenT>> results(kids.size());
        for (std::size_t k : order) {
            NodeT child{kids[k].fms, {}, kids[k].edge, kids[k].blocked_by_path, node.depth + 1};
            results[k] = visit(child, row);
            if (!results[k]) {
                trace_update(row, NodeKind::And, false, false);
                return std::nullopt;
            }
        }
        OpenT self{node.fms, node.checked, NodeKind::And, node.incoming, -1, node.depth, {}};
        for (std::size_t k = 0; k < kids.size(); ++k)
            self.children.push_back(std::move(*results[k]));
        trace_update(row, NodeKind::And, false, true);
        return self;
    }

    LabelSet to_label(const Bits<W>& fms, const Bits<W>& checked) const {
        LabelSet out;
        fms.for_each([&](int i) { out.insert(ix.fms[i]); });
        int pos = 0;
        fms.for_each([&](int i) {
            if (checked.test(i)) out.set_checked(pos);
            ++pos;
        });
        return out;
    }

    void flatten(const OpenT& node, int parent, std::vector<int>& path_index, Subtree& out) const {
        int idx = static_cast<int>(out.nodes.size());
        out.nodes.push_back({to_label(node.fms, node.checked), node.kind,
                             to_edge_label(ix, node.incoming), parent, {}, -1, node.depth});
        if (parent >= 0) out.nodes[parent].children.push_back(idx);
        if (node.blocked_by_path >= 0) out.nodes[idx].blocked_by = path_index[node.blocked_by_path];
        path_index.push_back(idx);
        for (const OpenT& child : node.children) flatten(child, idx, path_index, out);
        path_index.pop_back();
    }
};

template <int W>
Verdict run_indexed(const RuleIndex& ix, const Formula& phi0, const DecideOptions& options) {
    FastDfs<W> dfs(ix, options);
    dfs.stats.closure_size = ix.fms.size();

    typename FastDfs<W>::NodeT root;
    root.fms.set(ix.index_of(phi0));

    auto open = dfs.visit(root, -1);
    Verdict verdict;
    verdict.stats = dfs.stats;
    verdict.closed = !open.has_value();
    if (open) {
        Subtree tree;
        std::vector<int> path_index;
        dfs.flatten(*open, -1, path_index, tree);
        verdict.open = std::move(tree);
    }
    if (!assert_bounds(verdict.stats))
        throw std::logic_error("tableau bounds violated (depth/children/path exceed the m^6 "
                               "envelope)");
    return verdict;
}

}  // namespace

Verdict decide(const Formula& phi0, const DecideOptions& options) {
    ClosureSet closure(phi0);
    RuleIndex ix(closure);
    const std::size_t m = closure.size();
    if (m <= 64) return run_indexed<1>(ix, phi0, options);
    if (m <= 128) return run_indexed<2>(ix, phi0, options);
    if (m <= 256) return run_indexed<4>(ix, phi0, options);
    if (m <= 512) return run_indexed<8>(ix, phi0, options);
    if (m <= 1024) return run_indexed<16>(ix, phi0, options);
    throw std::invalid_argument("formula closure has " + std::to_string(m) +
                                " entries; the engine caps at 1024");
}

bool assert_bounds(const RunStats& stats) {
    const unsigned __int128 m = stats.closure_size;
    const unsigned __int128 m6 = m * m * m * m * m * m;
    const unsigned __int128 branch = m + m * m + m * m * m;
    if (static_cast<unsigned __int128>(stats.max_depth) > m6) return false;
    if (static_cast<unsigned __int128>(stats.max_children) > branch) return false;
    if (static_cast<unsigned __int128>(stats.peak_path) > m6 + 1) return false;
    return true;
}
// ── DOT export ──────────────────────────────────────────────────────────────

namespace {

std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

const char* dot_shape(NodeKind kind) {
    switch (kind) {
        case NodeKind::And: return "box";
        case NodeKind::Or: return "diamond";
        case NodeKind::Leaf: return "ellipse";
    }
    return "ellipse";
}

}  // namespace

std::string Subtree::to_dot() const {
    std::ostringstream os;
    os << "digraph tableau {\n";
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const Node& n = nodes[k];
        os << "  n" << k << " [shape=" << dot_shape(n.kind) << " label=\""
           << dot_escape(n.label.render()) << "\"];\n";
        if (n.parent >= 0)
            os << "  n" << n.parent << " -> n" << k << " [label=\""
               << dot_escape(n.incoming.render()) << "\"];\n";
        if (n.blocked_by >= 0)
            os << "  n" << k << " -> n" << n.blocked_by
               << " [style=dashed constraint=false label=\"blocked\"];\n";
    }
    os << "}\n";
    return os.str();
}

std::string TraceLog::to_dot() const {
    std::ostringstream os;
    os << "digraph tableau {\n";
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const Row& r = rows[k];
        os << "  n" << k << " [shape=" << dot_shape(r.kind) << " label=\""
           << dot_escape(r.label_text) << "\"";
        if (r.inconsistent) os << " color=red";
        os << "];\n";
        if (r.parent >= 0)
            os << "  n" << r.parent << " -> n" << k << " [label=\"" << dot_escape(r.edge.render())
               << "\"];\n";
        if (r.blocked_by >= 0)
            os << "  n" << k << " -> n" << r.blocked_by
               << " [style=dashed constraint=false label=\"blocked\"];\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace elkh
