#include <doctest.h>

#include <algorithm>
#include <random>

#include "elkh/gen.hpp"
#include "elkh/kripke.hpp"
#include "elkh/oracle.hpp"

using namespace elkh;

namespace {

const Agent kI{"i"};
const Agent kJ{"j"};
const Formula kP = Formula::prop("p");
const Formula kQ = Formula::prop("q");

// Two-class model: class {w1,w2} can reach the p-world w3 by action a.
const char* kThreeWorld = R"({
  "worlds": ["w1", "w2", "w3"],
  "agents": {"i": {"partition": [["w1", "w2"], ["w3"]], "actions": ["a"]}},
  "relations": {"a": [["w1", "w3"], ["w2", "w3"]]},
  "valuation": {"p": ["w3"]},
  "designated": "w1"
})";

std::vector<bool> goal_from(const Model& m, const std::vector<int>& worlds) {
    std::vector<bool> mask(m.worlds.size(), false);
    for (int w : worlds) mask[w] = true;
    return mask;
}

Formula implies(Formula a, Formula b) {
    return Formula::neg(Formula::conj(std::move(a), Formula::neg(std::move(b))));
}

}  // namespace

TEST_CASE("class_of: partition lookup") {
    Model m = load_model(kThreeWorld);
    CHECK(class_of(m, "i", m.world_index("w1")) == class_of(m, "i", m.world_index("w2")));
    CHECK(class_of(m, "i", m.world_index("w1")) != class_of(m, "i", m.world_index("w3")));

    Model single = load_model(R"({"worlds":["w"],
        "agents":{"i":{"partition":[["w"]],"actions":[]}}})");
    CHECK(class_of(single, "i", 0) == 0);

    // per-agent partitions are independent
    Model two = load_model(R"({"worlds":["w1","w2"],
        "agents":{"i":{"partition":[["w1","w2"]],"actions":[]},
                  "j":{"partition":[["w1"],["w2"]],"actions":[]}}})");
    CHECK(class_of(two, "i", 0) == class_of(two, "i", 1));
    CHECK(class_of(two, "j", 0) != class_of(two, "j", 1));
}

TEST_CASE("uniformly_executable") {
    Model m = load_model(kThreeWorld);
    int c12 = class_of(m, "i", m.world_index("w1"));
    int c3 = class_of(m, "i", m.world_index("w3"));
    CHECK(uniformly_executable(m, "i", c12, "a"));       // both members have an edge
    CHECK_FALSE(uniformly_executable(m, "i", c3, "a"));  // w3 has none

    Model partial = load_model(R"({
        "worlds": ["w1", "w2", "w3"],
        "agents": {"i": {"partition": [["w1", "w2"], ["w3"]], "actions": ["a"]}},
        "relations": {"a": [["w1", "w3"]]}})");
    CHECK_FALSE(uniformly_executable(partial, "i", 0, "a"));  // w2 lacks an edge

    Model empty_rel = load_model(R"({
        "worlds": ["w1", "w2"],
        "agents": {"i": {"partition": [["w1"], ["w2"]], "actions": ["a"]}}})");
    CHECK_FALSE(uniformly_executable(empty_rel, "i", 0, "a"));
    CHECK_FALSE(uniformly_executable(empty_rel, "i", 1, "a"));

    CHECK_THROWS_AS(uniformly_executable(m, "i", c12, "nope"), ModelError);
    CHECK_THROWS_AS(uniformly_executable(m, "x", 0, "a"), ModelError);
}

TEST_CASE("class_successors: lifted relation") {
    Model m = load_model(R"({
        "worlds": ["w1", "w2", "w3"],
        "agents": {"i": {"partition": [["w1", "w2"], ["w3"]], "actions": ["a"]}},
        "relations": {"a": [["w1", "w3"]]}})");
    int c12 = class_of(m, "i", 0);
    int c3 = class_of(m, "i", 2);
    CHECK(class_successors(m, "i", c12, "a") == std::vector<int>{c3});
    CHECK(class_successors(m, "i", c3, "a").empty());

    // a pair inside one block makes the class its own successor
    Model self = load_model(R"({
        "worlds": ["w1", "w2"],
        "agents": {"i": {"partition": [["w1", "w2"]], "actions": ["a"]}},
        "relations": {"a": [["w1", "w2"]]}})");
    CHECK(class_successors(self, "i", 0, "a") == std::vector<int>{0});
}

TEST_CASE("ece: executions end outside the domain or diverge") {
    Model m = load_model(kThreeWorld);
    int c12 = class_of(m, "i", 0);
    int c3 = class_of(m, "i", 2);

    SUBCASE("empty strategy stops immediately") {
        ExecutionOutcome out = ece(m, Strategy{"i", {}}, c12);
        CHECK(out == ExecutionOutcome{false, {c12}});
    }
    SUBCASE("single step") {
        ExecutionOutcome out = ece(m, Strategy{"i", {{c12, "a"}}}, c12);
        CHECK(out == ExecutionOutcome{false, {c3}});
    }
    SUBCASE("self-loop diverges") {
        Model loop = load_model(R"({
            "worlds": ["w1"],
            "agents": {"i": {"partition": [["w1"]], "actions": ["a"]}},
            "relations": {"a": [["w1", "w1"]]}})");
        ExecutionOutcome out = ece(loop, Strategy{"i", {{0, "a"}}}, 0);
        CHECK(out.diverges);
    }
    SUBCASE("assigning a non-executable action is rejected") {
        CHECK_THROWS_AS(ece(m, Strategy{"i", {{c3, "a"}}}, c3), ModelError);
    }
}

TEST_CASE("eval on the three-world model") {
    Model m = load_model(kThreeWorld);
    int w1 = m.world_index("w1");
    CHECK(eval(m, w1, Formula::know_how(kI, kP)));
    CHECK_FALSE(eval(m, w1, kP));
    CHECK_FALSE(eval(m, w1, Formula::know(kI, kP)));
    CHECK_FALSE(eval(m, w1, Formula::bottom()));
    CHECK(eval(m, w1, Formula::neg(Formula::bottom())));
    // unknown propositions evaluate false
    CHECK_FALSE(eval(m, w1, Formula::prop("zzz")));
    // unknown agents are errors
    CHECK_THROWS_AS(eval(m, w1, Formula::know(Agent{"x"}, kP)), ModelError);
}

TEST_CASE("kh_classes on the three-world model") {
    Model m = load_model(kThreeWorld);
    auto goal = goal_from(m, {m.world_index("w3")});
    std::vector<int> win = kh_classes(m, "i", goal);
    CHECK(win.size() == 2);  // both classes: {w3} trivially, {w1,w2} via a

    // goal = all worlds: every class wins immediately
    CHECK(kh_classes(m, "i", goal_from(m, {0, 1, 2})).size() == 2);

    // single class, self-loop only, empty goal: nothing wins
    Model loop = load_model(R"({
        "worlds": ["w1"],
        "agents": {"i": {"partition": [["w1"]], "actions": ["a"]}},
        "relations": {"a": [["w1", "w1"]]}})");
    CHECK(kh_classes(loop, "i", goal_from(loop, {})).empty());
}

TEST_CASE("kh_classes: monotone in the goal") {
    std::mt19937_64 rng(11);
    ModelGenConfig cfg{5, 2, 2, 2};
    for (int k = 0; k < 200; ++k) {
        Model m = random_model(rng, cfg);
        std::vector<bool> small(m.worlds.size()), big(m.worlds.size());
        for (std::size_t w = 0; w < m.worlds.size(); ++w) {
            small[w] = gen_below(rng, 2) != 0;
            big[w] = small[w] || gen_below(rng, 2) != 0;
        }
        for (const auto& [agent, data] : m.agents) {
            std::vector<int> ws = kh_classes(m, agent, small);
            std::vector<int> wb = kh_classes(m, agent, big);
            CHECK(std::includes(wb.begin(), wb.end(), ws.begin(), ws.end()));
        }
    }
}

TEST_CASE("kh_classes: least fixpoint is iteration-order independent") {
    // reference fixpoint iterating classes in shuffled order each round
    auto shuffled_fixpoint = [](const Model& m, const std::string& agent,
                                const std::vector<bool>& goal, std::mt19937_64& rng) {
        const auto& data = m.agent_data(agent);
        const int nc = static_cast<int>(data.partition.size());
        std::vector<char> win(nc, 0);
        for (int c = 0; c < nc; ++c) {
            bool inside = true;
            for (int w : data.partition[c]) inside = inside && goal[w];
            win[c] = inside;
        }
        std::vector<int> order(nc);
        for (int c = 0; c < nc; ++c) order[c] = c;
        bool changed = true;
        while (changed) {
            changed = false;
            for (int k = nc - 1; k > 0; --k)
                std::swap(order[k], order[gen_below(rng, static_cast<std::uint64_t>(k) + 1)]);
            for (int c : order) {
                if (win[c]) continue;
                for (const std::string& a : data.actions) {
                    if (!uniformly_executable(m, agent, c, a)) continue;
                    auto succ = class_successors(m, agent, c, a);
                    bool all = !succ.empty();
                    for (int d : succ) all = all && win[d];
                    if (all) {
                        win[c] = 1;
                        changed = true;
                        break;
                    }
                }
            }
        }
        std::vector<int> out;
        for (int c = 0; c < nc; ++c)
            if (win[c]) out.push_back(c);
        return out;
    };

    std::mt19937_64 rng(77);
    ModelGenConfig cfg{5, 2, 2, 2};
    for (int k = 0; k < 100; ++k) {
        Model m = random_model(rng, cfg);
        std::vector<bool> goal(m.worlds.size());
        for (std::size_t w = 0; w < m.worlds.size(); ++w) goal[w] = gen_below(rng, 2) != 0;
        for (const auto& [agent, data] : m.agents)
            CHECK(kh_classes(m, agent, goal) == shuffled_fixpoint(m, agent, goal, rng));
    }
}

TEST_CASE("ece: end classes never intersect the strategy domain") {
    std::mt19937_64 rng(13);
    ModelGenConfig cfg{5, 2, 2, 2};
    for (int k = 0; k < 200; ++k) {
        Model m = random_model(rng, cfg);
        for (const auto& [agent, data] : m.agents) {
            Strategy s{agent, {}};
            for (std::size_t c = 0; c < data.partition.size(); ++c) {
                std::vector<std::string> execable;
                for (const std::string& a : data.actions)
                    if (uniformly_executable(m, agent, static_cast<int>(c), a)) execable.push_back(a);
                if (!execable.empty() && gen_below(rng, 2))
                    s.assignment.emplace(static_cast<int>(c),
                                         execable[gen_below(rng, execable.size())]);
            }
            for (std::size_t c = 0; c < data.partition.size(); ++c) {
                ExecutionOutcome out = ece(m, s, static_cast<int>(c));
                if (out.diverges) continue;
                for (int e : out.ends) CHECK_FALSE(s.assignment.count(e));
            }
        }
    }
}

TEST_CASE("eval: Kh is constant across each equivalence class") {
    std::mt19937_64 rng(17);
    ModelGenConfig cfg{6, 2, 2, 2};
    std::mt19937_64 frng(18);
    FormulaGenConfig fcfg{6, 2, 2};
    for (int k = 0; k < 100; ++k) {
        Model m = random_model(rng, cfg);
        Formula goal = random_formula(frng, fcfg);
        for (const auto& [agent, data] : m.agents) {
            Formula kh = Formula::know_how(Agent{agent}, goal);
            for (const auto& block : data.partition) {
                bool first = eval(m, block[0], kh);
                for (int w : block) CHECK(eval(m, w, kh) == first);
            }
        }
    }
}

TEST_CASE("validity schemata hold on random models") {
    std::mt19937_64 rng(23);
    ModelGenConfig cfg{6, 2, 2, 3};
    const std::vector<Formula> instances = {kP, Formula::know(kJ, kQ), Formula::know_how(kJ, kQ)};
    int models = 0;
    while (models < 500) {
        Model m = random_model(rng, cfg);
        ++models;
        for (const Formula& phi : instances) {
            Formula kh = Formula::know_how(kI, phi);
            Formula k = Formula::know(kI, phi);
            const Formula schemata[] = {
                implies(k, kh),                                          // K -> Kh
                implies(kh, Formula::know(kI, kh)),                      // Kh -> K Kh
                implies(Formula::neg(kh), Formula::know(kI, Formula::neg(kh))),
                implies(kh, Formula::know_how(kI, k)),                   // Kh -> Kh K
                implies(Formula::know_how(kI, kh), kh),                  // Kh Kh -> Kh
            };
            Evaluator ev(m);
            for (const Formula& schema : schemata)
                for (std::size_t w = 0; w < m.worlds.size(); ++w)
                    CHECK(ev.at(static_cast<int>(w), schema));
        }
    }
}

TEST_CASE("kh_classes agrees with exhaustive strategy enumeration") {
    std::mt19937_64 rng(31);
    ModelGenConfig cfg{5, 2, 2, 2};
    for (int k = 0; k < 150; ++k) {
        Model m = random_model(rng, cfg);
        std::vector<bool> goal(m.worlds.size());
        for (std::size_t w = 0; w < m.worlds.size(); ++w) goal[w] = gen_below(rng, 2) != 0;
        for (const auto& [agent, data] : m.agents) {
            std::vector<int> win = kh_classes(m, agent, goal);
            for (std::size_t c = 0; c < data.partition.size(); ++c) {
                bool fix = std::binary_search(win.begin(), win.end(), static_cast<int>(c));
                bool brute = strategy_enumerate(m, agent, static_cast<int>(c), goal);
                CHECK(fix == brute);
            }
        }
    }
}

TEST_CASE("model JSON: save/load round-trip") {
    std::mt19937_64 rng(37);
    ModelGenConfig cfg{5, 2, 2, 3};
    for (int k = 0; k < 50; ++k) {
        Model m = random_model(rng, cfg);
        Model back = load_model(save_model(m));
        CHECK(back.worlds == m.worlds);
        CHECK(back.relations == m.relations);
        CHECK(back.valuation == m.valuation);
        CHECK(back.designated == m.designated);
        CHECK(back.agents.size() == m.agents.size());
        for (const auto& [agent, data] : m.agents) {
            CHECK(back.agent_data(agent).partition == data.partition);
            CHECK(back.agent_data(agent).actions == data.actions);
        }
        CHECK(save_model(back) == save_model(m));  // byte-stable
    }
}

TEST_CASE("model loader: field-path diagnostics") {
    auto rejects = [](const char* text, const char* needle) {
        try {
            load_model(text);
            FAIL_CHECK("expected rejection: " << needle);
        } catch (const ModelError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    rejects(R"({"worlds":[]})", "worlds");
    rejects(R"({"worlds":["w","w"]})", "duplicate");
    rejects(R"({"worlds":["w1","w2"],
               "agents":{"i":{"partition":[["w1"]],"actions":[]}}})",
            "agents.i.partition");
    rejects(R"({"worlds":["w1"],
               "agents":{"i":{"partition":[["w1"],["w1"]],"actions":[]}}})",
            "two blocks");
    rejects(R"({"worlds":["w1"],
               "agents":{"i":{"partition":[["w1"]],"actions":["a"]},
                         "j":{"partition":[["w1"]],"actions":["a"]}}})",
            "already declared");
    rejects(R"({"worlds":["w1"],"relations":{"a":[["w1","w1"]]}})", "not declared");
    rejects(R"({"worlds":["w1"],"valuation":{"p":["w9"]}})", "valuation.p");
    rejects(R"({"worlds":["w1"],"designated":"w9"})", "designated");
    rejects("{", "invalid JSON");
}
