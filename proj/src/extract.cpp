// extract.cpp — maximal epsilon-paths, the induced model, and the label/truth
// cross-check run on every open verdict.

#include "elkh/extract.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace elkh {

namespace {

// Union-find over world indices.
struct UnionFind {
    std::vector<int> parent;

    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

const Formula* restriction_body(const Formula& f, FormulaKind modal, bool negated,
                                const std::string& agent) {
    const Formula* g = &f;
    if (negated) {
        if (f.kind() != FormulaKind::Not) return nullptr;
        g = &f.child();
    } else if (f.kind() == FormulaKind::Not) {
        return nullptr;
    }
    if (g->kind() != modal || g->agent().id != agent) return nullptr;
    return g;
}

std::vector<Formula> label_restriction(const LabelSet& label, FormulaKind modal, bool negated,
                                       const std::string& agent) {
    std::vector<Formula> out;
    for (const Formula& f : label.formulas())
        if (restriction_body(f, modal, negated, agent)) out.push_back(f);
    return out;
}

}  // namespace

EpsilonPaths maximal_epsilon_paths(const Subtree& tree) {
    if (tree.nodes.empty()) throw ExtractError("subtree is empty");

    EpsilonPaths out;
    out.node_to_world.assign(tree.nodes.size(), -1);

    // Validate edge shape first: epsilon chains never branch and blocked
    // nodes are action-edged leaves.
    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
        const Subtree::Node& n = tree.nodes[k];
        int eps_children = 0;
        for (int c : n.children) eps_children += tree.nodes[c].incoming.is_epsilon();
        if (eps_children > 1)
            throw ExtractError("malformed subtree: node " + std::to_string(k) +
                               " has several epsilon children");
        if (n.blocked_by >= 0) {
            if (!n.children.empty())
                throw ExtractError("malformed subtree: blocked node " + std::to_string(k) +
                                   " has children");
            if (n.incoming.kind != EdgeLabel::Kind::Action)
                throw ExtractError("malformed subtree: blocked node " + std::to_string(k) +
                                   " not entered by an action edge");
        }
    }

    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
        const Subtree::Node& n = tree.nodes[k];
        bool starts_path = n.parent < 0 || !n.incoming.is_epsilon();
        if (!starts_path) continue;
        if (n.blocked_by >= 0) {
            out.blocked_nodes.push_back(static_cast<int>(k));
            continue;
        }
        PathWorld path;
        int cur = static_cast<int>(k);
        for (;;) {
            path.nodes.push_back(cur);
            int next = -1;
            for (int c : tree.nodes[cur].children)
                if (tree.nodes[c].incoming.is_epsilon()) next = c;
            if (next < 0) break;
            cur = next;
        }
        path.end_node = cur;
        int idx = static_cast<int>(out.worlds.size());
        for (int nk : path.nodes) out.node_to_world[nk] = idx;
        out.worlds.push_back(std::move(path));
    }
    return out;
}

Extraction build_model(const Subtree& tree) {
    for (const Subtree::Node& n : tree.nodes)
        if (blatantly_inconsistent(n.label))
            throw ExtractError("subtree is closed: node label '" + n.label.render() +
                               "' is blatantly inconsistent");

    Extraction ex;
    ex.paths = maximal_epsilon_paths(tree);
    const EpsilonPaths& paths = ex.paths;
    const int nw = static_cast<int>(paths.worlds.size());

    Model& m = ex.model;
    for (const PathWorld& p : paths.worlds) m.worlds.push_back("w" + std::to_string(p.end_node));
    for (const PathWorld& p : paths.worlds) ex.world_labels.push_back(tree.nodes[p.end_node].label);

    // Agents: everyone mentioned by the seed formula, plus edge agents.
    const Formula seed = tree.nodes[0].label.formulas().at(0);
    std::set<std::string> agent_ids;
    for (const Agent& a : agents_of(seed)) agent_ids.insert(a.id);
    for (const Subtree::Node& n : tree.nodes) {
        if (n.incoming.kind == EdgeLabel::Kind::AgentStep) agent_ids.insert(n.incoming.agent.id);
        if (n.incoming.kind == EdgeLabel::Kind::Action) agent_ids.insert(n.incoming.action.agent.id);
    }

    // Indistinguishability: equivalence closure of agent-labelled edges.
    std::map<std::string, UnionFind> closures;
    for (const std::string& id : agent_ids) closures.emplace(id, UnionFind(nw));
    std::map<std::string, std::set<std::string>> agent_actions;
    std::map<std::string, std::set<std::pair<int, int>>> rels;

    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
        const Subtree::Node& n = tree.nodes[k];
        if (n.parent < 0) continue;
        if (n.incoming.kind == EdgeLabel::Kind::AgentStep) {
            int from = paths.node_to_world[n.parent];
            int to = paths.node_to_world[k];
            if (to < 0)
                throw ExtractError("malformed subtree: agent edge into a blocked node");
            closures.at(n.incoming.agent.id).unite(from, to);
        } else if (n.incoming.kind == EdgeLabel::Kind::Action) {
            const ActionSymbol& sym = n.incoming.action;
            const std::string name = sym.render();
            agent_actions[sym.agent.id].insert(name);
            int from = paths.node_to_world[n.parent];
            int to = paths.node_to_world[k];
            if (to < 0) {
                // blocked child: redirect to the world containing the blocker
                int blocker = tree.nodes[k].blocked_by;
                to = paths.node_to_world[blocker];
                assert(to >= 0);
            }
            rels[name].insert({from, to});
        }
    }

    for (const std::string& id : agent_ids) {
        Model::AgentData data;
        std::map<int, std::vector<int>> blocks;
        UnionFind& uf = closures.at(id);
        for (int w = 0; w < nw; ++w) blocks[uf.find(w)].push_back(w);
        for (auto& [root, block] : blocks) data.partition.push_back(std::move(block));
        for (const std::string& a : agent_actions[id]) data.actions.push_back(a);
        m.agents.emplace(id, std::move(data));
    }
    for (auto& [name, pairs] : rels)
        m.relations.emplace(name, std::vector<std::pair<int, int>>(pairs.begin(), pairs.end()));

    for (int w = 0; w < nw; ++w)
        for (const Formula& f : ex.world_labels[w].formulas())
            if (f.kind() == FormulaKind::Prop) m.valuation[f.prop_name()].push_back(w);

    ex.designated = paths.node_to_world[0];
    m.designated = ex.designated;
    m.normalize_and_validate();

    // Structural facts of the construction, asserted on every extraction.
    // Matching modal restrictions across each equivalence class:
    for (const auto& [agent, data] : m.agents) {
        for (const auto& block : data.partition) {
            for (std::size_t a = 1; a < block.size(); ++a) {
                for (bool negated : {false, true}) {
                    for (FormulaKind modal : {FormulaKind::Know, FormulaKind::KnowHow}) {
                        if (label_restriction(ex.world_labels[block[0]], modal, negated, agent) !=
                            label_restriction(ex.world_labels[block[a]], modal, negated, agent))
                            throw std::logic_error(
                                "extraction invariant violated: modal restrictions differ inside "
                                "an equivalence class of agent '" + agent + "'");
                    }
                }
            }
        }
    }
    // End labels are closed over sub+ formulas of their members:
    for (int w = 0; w < nw; ++w) {
        const LabelSet& label = ex.world_labels[w];
        for (const Formula& f : label.formulas()) {
            const ClosureSet member_closure(f);
            for (const Formula& psi : member_closure.formulas()) {
                if (!label.contains(psi) && !label.contains(complement(psi)))
                    throw std::logic_error(
                        "extraction invariant violated: end label not closed over sub+ (missing " +
                        pretty(psi) + " and its complement)");
            }
        }
    }

    return ex;
}

TruthReport truth_lemma_check(const Extraction& ex) {
    TruthReport report;
    Evaluator ev(ex.model);
    for (std::size_t w = 0; w < ex.world_labels.size(); ++w) {
        for (const Formula& f : ex.world_labels[w].formulas()) {
            ++report.checks;
            if (!ev.at(static_cast<int>(w), f))
                report.violations.push_back({static_cast<int>(w), f});
        }
    }
    return report;
}

std::string model_to_dot(const Model& m) {
    std::ostringstream os;
    os << "digraph model {\n";
    for (std::size_t w = 0; w < m.worlds.size(); ++w) {
        std::string props;
        for (const auto& [p, ws] : m.valuation)
            if (std::binary_search(ws.begin(), ws.end(), static_cast<int>(w)))
                props += props.empty() ? p : ", " + p;
        bool is_designated = m.designated && *m.designated == static_cast<int>(w);
        os << "  " << m.worlds[w] << " [shape=" << (is_designated ? "doublecircle" : "circle")
           << " label=\"" << m.worlds[w] << "\\n{" << props << "}\"];\n";
    }
    for (const auto& [agent, data] : m.agents)
        for (const auto& block : data.partition)
            for (std::size_t a = 0; a < block.size(); ++a)
                for (std::size_t b = a + 1; b < block.size(); ++b)
                    os << "  " << m.worlds[block[a]] << " -> " << m.worlds[block[b]]
                       << " [dir=none style=dashed label=\"~" << agent << "\"];\n";
    for (const auto& [action, pairs] : m.relations)
        for (const auto& [s, t] : pairs)
            os << "  " << m.worlds[s] << " -> " << m.worlds[t] << " [label=\"" << action
               << "\"];\n";
    os << "}\n";
    return os.str();
}

}  // namespace elkh
