// gen.hpp — deterministic random formula / model generators and the
// exhaustive small-formula enumerator used by the agreement suites. All
// sampling is hand-rolled on top of a seeded mt19937_64 so identical seeds
// reproduce identical corpora everywhere.

#pragma once

#include <random>
#include <vector>

#include "elkh/kripke.hpp"

namespace elkh {

struct FormulaGenConfig {
    int max_size = 8;  // AST node count; actual size is sampled in [1, max_size]
    int num_agents = 2;
    int num_props = 2;
};

Formula random_formula(std::mt19937_64& rng, const FormulaGenConfig& cfg);

// Every formula with exactly or at most max_size AST nodes over the given
// vocabulary, in a fixed construction order.
std::vector<Formula> enumerate_formulas(int max_size, int num_props, int num_agents);

// Agent and proposition vocabularies shared by generators and suites:
// agents "i", "j", "k", ...; propositions "p", "q", "r", ...
std::vector<Agent> default_agents(int count);
std::vector<std::string> default_props(int count);

struct ModelGenConfig {
    int max_worlds = 5;
    int num_agents = 2;
    int max_actions_per_agent = 2;
    int num_props = 3;
};

Model random_model(std::mt19937_64& rng, const ModelGenConfig& cfg);

// Uniform integer in [0, bound) drawn from the generator's raw stream.
std::uint64_t gen_below(std::mt19937_64& rng, std::uint64_t bound);

}  // namespace elkh
