// extract.hpp — countermodel construction from an open complete subtree.
//
// Worlds are the unblocked maximal epsilon-paths of the subtree; agent
// indistinguishability is the equivalence closure of agent-labelled edges;
// action relations follow the action-labelled edges, with edges into blocked
// leaves redirected to the world containing the blocker. The induced model is
// then checked against the labels: every formula on a world's end label must
// evaluate true there.

#pragma once

#include <string>
#include <vector>

#include "elkh/kripke.hpp"
#include "elkh/tableau.hpp"

namespace elkh {

struct ExtractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A maximal epsilon-path: consecutive nodes joined by epsilon edges, not
// extendable on either side. Its label is the end node's label.
struct PathWorld {
    std::vector<int> nodes;  // subtree node indices, root-to-end order
    int end_node = -1;
};

struct EpsilonPaths {
    std::vector<PathWorld> worlds;       // unblocked paths, in subtree preorder
    std::vector<int> blocked_nodes;      // blocked singletons, excluded from worlds
    std::vector<int> node_to_world;      // subtree node -> world index, -1 for blocked
};

EpsilonPaths maximal_epsilon_paths(const Subtree& tree);

struct Extraction {
    Model model;
    int designated = -1;
    EpsilonPaths paths;
    std::vector<LabelSet> world_labels;  // end-node label per world
};

// Builds the induced model and asserts the structural facts the construction
// guarantees: matching modal restrictions inside every equivalence class,
// action-set disjointness across agents, closure of end labels.
Extraction build_model(const Subtree& tree);

struct TruthReport {
    struct Violation {
        int world;
        Formula formula;
    };
    std::vector<Violation> violations;
    std::uint64_t checks = 0;

    bool ok() const { return violations.empty(); }
};

// Every formula on a world's label must evaluate true at that world; in
// particular the seed formula holds at the designated world.
TruthReport truth_lemma_check(const Extraction& ex);

// DOT rendering of the extracted model: worlds as nodes, indistinguishability
// as per-agent dashed undirected edges, action relations as labelled arrows.
std::string model_to_dot(const Model& m);

}  // namespace elkh
