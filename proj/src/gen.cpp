// gen.cpp — corpus generators.

#include "elkh/gen.hpp"

#include <cassert>

namespace elkh {

std::uint64_t gen_below(std::mt19937_64& rng, std::uint64_t bound) {
    assert(bound > 0);
    // rejection sampling to stay unbiased and platform-independent
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

std::vector<Agent> default_agents(int count) {
    static const char* names[] = {"i", "j", "k", "l", "m", "n"};
    assert(count <= 6);
    std::vector<Agent> out;
    for (int k = 0; k < count; ++k) out.push_back(Agent{names[k]});
    return out;
}

std::vector<std::string> default_props(int count) {
    static const char* names[] = {"p", "q", "r", "s", "t", "u"};
    assert(count <= 6);
    std::vector<std::string> out;
    for (int k = 0; k < count; ++k) out.emplace_back(names[k]);
    return out;
}

namespace {

Formula random_formula_of_size(std::mt19937_64& rng, int size, const std::vector<Agent>& agents,
                               const std::vector<std::string>& props) {
    assert(size >= 1);
    if (size == 1) {
        // bottom kept rare: contradictions swamp a corpus otherwise
        if (gen_below(rng, 8) == 0) return Formula::bottom();
        return Formula::prop(props[gen_below(rng, props.size())]);
    }
    // weights: ~ 3, & 3 (when it fits), K 2, Kh 3
    const bool can_and = size >= 3;
    const std::uint64_t total = can_and ? 11 : 8;
    std::uint64_t pick = gen_below(rng, total);
    if (pick < 3) return Formula::neg(random_formula_of_size(rng, size - 1, agents, props));
    if (pick < 5)
        return Formula::know(agents[gen_below(rng, agents.size())],
                             random_formula_of_size(rng, size - 1, agents, props));
    if (pick < 8)
        return Formula::know_how(agents[gen_below(rng, agents.size())],
                                 random_formula_of_size(rng, size - 1, agents, props));
    int left = 1 + static_cast<int>(gen_below(rng, static_cast<std::uint64_t>(size) - 2));
    return Formula::conj(random_formula_of_size(rng, left, agents, props),
                         random_formula_of_size(rng, size - 1 - left, agents, props));
}

}  // namespace

Formula random_formula(std::mt19937_64& rng, const FormulaGenConfig& cfg) {
    assert(cfg.max_size >= 1 && cfg.num_agents >= 1 && cfg.num_props >= 1);
    std::vector<Agent> agents = default_agents(cfg.num_agents);
    std::vector<std::string> props = default_props(cfg.num_props);
    int size = 1 + static_cast<int>(gen_below(rng, static_cast<std::uint64_t>(cfg.max_size)));
    return random_formula_of_size(rng, size, agents, props);
}

std::vector<Formula> enumerate_formulas(int max_size, int num_props, int num_agents) {
    std::vector<Agent> agents = default_agents(num_agents);
    std::vector<std::string> props = default_props(num_props);

    std::vector<std::vector<Formula>> by_size(max_size + 1);
    if (max_size >= 1) {
        by_size[1].push_back(Formula::bottom());
        for (const std::string& p : props) by_size[1].push_back(Formula::prop(p));
    }
    for (int size = 2; size <= max_size; ++size) {
        for (const Formula& f : by_size[size - 1]) {
            by_size[size].push_back(Formula::neg(f));
            for (const Agent& a : agents) by_size[size].push_back(Formula::know(a, f));
            for (const Agent& a : agents) by_size[size].push_back(Formula::know_how(a, f));
        }
        for (int left = 1; left <= size - 2; ++left)
            for (const Formula& l : by_size[left])
                for (const Formula& r : by_size[size - 1 - left])
                    by_size[size].push_back(Formula::conj(l, r));
    }

    std::vector<Formula> out;
    for (int size = 1; size <= max_size; ++size)
        out.insert(out.end(), by_size[size].begin(), by_size[size].end());
    return out;
}

Model random_model(std::mt19937_64& rng, const ModelGenConfig& cfg) {
    assert(cfg.max_worlds >= 1 && cfg.num_agents >= 1);
    Model m;
    const int n = 1 + static_cast<int>(gen_below(rng, static_cast<std::uint64_t>(cfg.max_worlds)));
    for (int w = 0; w < n; ++w) m.worlds.push_back("w" + std::to_string(w + 1));

    for (const Agent& agent : default_agents(cfg.num_agents)) {
        Model::AgentData data;
        // random restricted-growth string => uniform-ish random partition
        std::vector<int> class_of(n, 0);
        int classes = 1;
        for (int w = 1; w < n; ++w) {
            int v = static_cast<int>(gen_below(rng, static_cast<std::uint64_t>(classes) + 1));
            class_of[w] = v;
            if (v == classes) ++classes;
        }
        data.partition.resize(classes);
        for (int w = 0; w < n; ++w) data.partition[class_of[w]].push_back(w);

        int actions =
            1 + static_cast<int>(gen_below(rng, static_cast<std::uint64_t>(cfg.max_actions_per_agent)));
        for (int a = 0; a < actions; ++a) {
            std::string name = agent.id + "_a" + std::to_string(a + 1);
            std::vector<std::pair<int, int>> pairs;
            for (int s = 0; s < n; ++s)
                for (int t = 0; t < n; ++t)
                    if (gen_below(rng, 2)) pairs.emplace_back(s, t);
            data.actions.push_back(name);
            m.relations.emplace(std::move(name), std::move(pairs));
        }
        m.agents.emplace(agent.id, std::move(data));
    }

    for (const std::string& p : default_props(cfg.num_props)) {
        std::vector<int> worlds;
        for (int w = 0; w < n; ++w)
            if (gen_below(rng, 2)) worlds.push_back(w);
        m.valuation.emplace(p, std::move(worlds));
    }

    m.designated = 0;
    m.normalize_and_validate();
    return m;
}

}  // namespace elkh
