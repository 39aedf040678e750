// kripke.hpp — finite models for ELKh: worlds, per-agent equivalence
// partitions, per-agent action sets with transition relations, and a
// valuation. Carries the satisfaction relation, including the
// strategy-existence clause for Kh computed as a least fixpoint, plus the
// strategy/execution machinery it is checked against.

#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "elkh/formula.hpp"

namespace elkh {

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Worlds are referred to by index into Model::worlds; classes by index into
// the agent's canonical partition (blocks ordered by least world index).
struct Model {
    struct AgentData {
        std::vector<std::vector<int>> partition;  // blocks of world indices
        std::vector<std::string> actions;         // sorted, unique
    };

    std::vector<std::string> worlds;
    std::map<std::string, AgentData> agents;
    std::map<std::string, std::vector<std::pair<int, int>>> relations;  // action -> pairs
    std::map<std::string, std::vector<int>> valuation;                  // prop -> worlds
    std::optional<int> designated;

    int world_index(std::string_view id) const;  // throws ModelError on unknown id
    const AgentData& agent_data(const std::string& agent) const;
    const std::vector<std::pair<int, int>>& relation(const std::string& action) const;

    // Sorts blocks/pairs/world lists into canonical order and verifies every
    // structural invariant; throws ModelError with a field path otherwise.
    void normalize_and_validate();
};

// JSON model file format:
//   {"worlds":["w1","w2"],
//    "agents":{"i":{"partition":[["w1","w2"]],"actions":["a1"]}},
//    "relations":{"a1":[["w1","w2"]]},
//    "valuation":{"p":["w2"]},
//    "designated":"w1"}
// "designated" is optional; a missing relation entry means an empty relation.
Model load_model(const std::string& json_text);
Model load_model_file(const std::string& path);
std::string save_model(const Model& m);  // deterministic bytes

// Equivalence class of a world under the agent's partition.
int class_of(const Model& m, const std::string& agent, int world);

// True iff every world of the class has an outgoing edge under the action.
bool uniformly_executable(const Model& m, const std::string& agent, int class_id,
                          const std::string& action);

// Classes reachable from the class via the lifted relation: some member of
// the source and some member of the target are related by the action.
std::vector<int> class_successors(const Model& m, const std::string& agent, int class_id,
                                  const std::string& action);

// Partial map from one agent's classes to that agent's actions; each assigned
// action must be uniformly executable on its class. The empty map is valid.
struct Strategy {
    std::string agent;
    std::map<int, std::string> assignment;  // class id -> action
};

void validate_strategy(const Model& m, const Strategy& s);

// End classes of all complete executions of the strategy, or divergence when
// some complete execution is infinite.
struct ExecutionOutcome {
    bool diverges = false;
    std::vector<int> ends;  // sorted class ids; meaningful when !diverges

    friend bool operator==(const ExecutionOutcome&, const ExecutionOutcome&) = default;
};

ExecutionOutcome ece(const Model& m, const Strategy& s, int start_class);

// Least fixpoint of the Kh winning condition: a class wins if it already sits
// inside the goal, or some action of the agent is uniformly executable on it
// with all lifted successors winning (and at least one successor).
std::vector<int> kh_classes(const Model& m, const std::string& agent,
                            const std::vector<bool>& goal_worlds);

// Satisfaction. Unknown propositions evaluate false; unknown agents or worlds
// are errors. Evaluator memoizes per-subformula world sets, which makes
// repeated queries against one model cheap.
class Evaluator {
public:
    explicit Evaluator(const Model& m) : model_(m) {}

    const std::vector<bool>& world_set(const Formula& phi);
    bool at(int world, const Formula& phi);

private:
    const Model& model_;
    std::map<Formula, std::vector<bool>> memo_;
};

bool eval(const Model& m, int world, const Formula& phi);

}  // namespace elkh
