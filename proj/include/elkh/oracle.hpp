// oracle.hpp — independent ground truth at desk scale: exhaustive strategy
// enumeration for the Kh clause, and a bounded model search that sweeps every
// model shape up to small bounds. Deliberately ignorant of the tableau: the
// two sides only ever meet in agreement checks.

#pragma once

#include <cstdint>

#include "elkh/kripke.hpp"

namespace elkh {

// Direct unfolding of the existential strategy quantifier: tries every
// partial map from the agent's classes to uniformly executable actions and
// accepts when all complete executions terminate inside the goal. Refuses
// models with more than 12 classes. The first witness in enumeration order
// (empty strategy first) is reported when requested.
bool strategy_enumerate(const Model& m, const std::string& agent, int start_class,
                        const std::vector<bool>& goal_worlds, Strategy* witness = nullptr);

struct SearchBounds {
    int max_worlds = 3;
    int max_actions_per_agent = 1;
};

struct SearchResult {
    bool found = false;
    Model model;  // meaningful iff found; eval-verified before returning
    int world = -1;
    std::uint64_t structures_tried = 0;
};

// Enumerates models up to the bounds — all partitions per occurring agent
// (first agent pruned to representatives modulo world renaming), all
// relations per action of every Kh-mentioning agent, all valuations over the
// formula's propositions — and returns the first pointed model satisfying the
// formula. Candidates are scored in bulk with bitmask tables over all
// valuations at once; every hit is re-verified with the plain satisfaction
// relation before being returned. A miss is NOT an unsatisfiability proof.
//
// Practical limits (enforced): max_worlds in [1,4], at most 2 propositions
// and 2 agents in the formula, at most 2 actions per agent.
SearchResult bounded_model_search(const Formula& phi, const SearchBounds& bounds = {});

}  // namespace elkh
