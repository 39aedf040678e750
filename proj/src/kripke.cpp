// kripke.cpp — model validation, JSON loading/saving, class machinery,
// executions, the Kh fixpoint, and the satisfaction relation.

#include "elkh/kripke.hpp"

#include <algorithm>
#include <cassert>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace elkh {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void model_fail(const std::string& path, const std::string& what) {
    throw ModelError(path + ": " + what);
}

}  // namespace

int Model::world_index(std::string_view id) const {
    for (std::size_t k = 0; k < worlds.size(); ++k)
        if (worlds[k] == id) return static_cast<int>(k);
    throw ModelError("worlds: unknown world '" + std::string(id) + "'");
}

const Model::AgentData& Model::agent_data(const std::string& agent) const {
    auto it = agents.find(agent);
    if (it == agents.end()) throw ModelError("agents: unknown agent '" + agent + "'");
    return it->second;
}

const std::vector<std::pair<int, int>>& Model::relation(const std::string& action) const {
    static const std::vector<std::pair<int, int>> empty;
    auto it = relations.find(action);
    return it == relations.end() ? empty : it->second;
}

void Model::normalize_and_validate() {
    if (worlds.empty()) model_fail("worlds", "model must have at least one world");
    {
        std::set<std::string> seen;
        for (std::size_t k = 0; k < worlds.size(); ++k) {
            if (worlds[k].empty()) model_fail("worlds[" + std::to_string(k) + "]", "empty id");
            if (!seen.insert(worlds[k]).second)
                model_fail("worlds[" + std::to_string(k) + "]", "duplicate id '" + worlds[k] + "'");
        }
    }
    const int n = static_cast<int>(worlds.size());

    std::map<std::string, std::string> action_owner;
    for (auto& [agent, data] : agents) {
        const std::string path = "agents." + agent;
        if (agent.empty()) model_fail("agents", "empty agent id");
        std::vector<char> covered(n, 0);
        for (std::size_t b = 0; b < data.partition.size(); ++b) {
            auto& block = data.partition[b];
            if (block.empty())
                model_fail(path + ".partition[" + std::to_string(b) + "]", "empty block");
            for (int w : block) {
                if (w < 0 || w >= n)
                    model_fail(path + ".partition[" + std::to_string(b) + "]",
                               "world index out of range");
                if (covered[w])
                    model_fail(path + ".partition",
                               "world '" + worlds[w] + "' appears in two blocks");
                covered[w] = 1;
            }
            std::sort(block.begin(), block.end());
        }
        for (int w = 0; w < n; ++w)
            if (!covered[w])
                model_fail(path + ".partition", "world '" + worlds[w] + "' missing from all blocks");
        std::sort(data.partition.begin(), data.partition.end());

        std::sort(data.actions.begin(), data.actions.end());
        for (std::size_t k = 0; k < data.actions.size(); ++k) {
            const std::string& a = data.actions[k];
            if (a.empty()) model_fail(path + ".actions", "empty action name");
            if (k > 0 && data.actions[k - 1] == a)
                model_fail(path + ".actions", "duplicate action '" + a + "'");
            auto [it, fresh] = action_owner.emplace(a, agent);
            if (!fresh)
                model_fail(path + ".actions",
                           "action '" + a + "' already declared by agent '" + it->second + "'");
        }
    }

    for (auto& [action, pairs] : relations) {
        const std::string path = "relations." + action;
        if (!action_owner.count(action))
            model_fail(path, "action '" + action + "' not declared by any agent");
        for (auto& [s, t] : pairs)
            if (s < 0 || s >= n || t < 0 || t >= n) model_fail(path, "world index out of range");
        std::sort(pairs.begin(), pairs.end());
        pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    }

    for (auto& [prop, ws] : valuation) {
        const std::string path = "valuation." + prop;
        if (prop.empty()) model_fail("valuation", "empty proposition name");
        for (int w : ws)
            if (w < 0 || w >= n) model_fail(path, "world index out of range");
        std::sort(ws.begin(), ws.end());
        ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
    }

    if (designated && (*designated < 0 || *designated >= n))
        model_fail("designated", "world index out of range");
}

// ── JSON ────────────────────────────────────────────────────────────────────

namespace {

int lookup_world(const Model& m, const json& v, const std::string& path) {
    if (!v.is_string()) model_fail(path, "expected a world id string");
    const std::string id = v.get<std::string>();
    for (std::size_t k = 0; k < m.worlds.size(); ++k)
        if (m.worlds[k] == id) return static_cast<int>(k);
    model_fail(path, "unknown world '" + id + "'");
}

}  // namespace

Model load_model(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ModelError(std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) model_fail("$", "expected a JSON object");

    Model m;
    if (!j.contains("worlds") || !j["worlds"].is_array())
        model_fail("worlds", "missing or not an array");
    for (const auto& w : j["worlds"]) {
        if (!w.is_string()) model_fail("worlds", "expected world id strings");
        m.worlds.push_back(w.get<std::string>());
    }

    if (j.contains("agents")) {
        if (!j["agents"].is_object()) model_fail("agents", "expected an object");
        for (const auto& [agent, spec] : j["agents"].items()) {
            const std::string path = "agents." + agent;
            if (!spec.is_object()) model_fail(path, "expected an object");
            Model::AgentData data;
            if (!spec.contains("partition") || !spec["partition"].is_array())
                model_fail(path + ".partition", "missing or not an array");
            for (const auto& blk : spec["partition"]) {
                if (!blk.is_array()) model_fail(path + ".partition", "expected arrays of world ids");
                std::vector<int> block;
                for (const auto& w : blk) block.push_back(lookup_world(m, w, path + ".partition"));
                data.partition.push_back(std::move(block));
            }
            if (spec.contains("actions")) {
                if (!spec["actions"].is_array()) model_fail(path + ".actions", "expected an array");
                for (const auto& a : spec["actions"]) {
                    if (!a.is_string()) model_fail(path + ".actions", "expected action name strings");
                    data.actions.push_back(a.get<std::string>());
                }
            }
            m.agents.emplace(agent, std::move(data));
        }
    }

    if (j.contains("relations")) {
        if (!j["relations"].is_object()) model_fail("relations", "expected an object");
        for (const auto& [action, pairs] : j["relations"].items()) {
            const std::string path = "relations." + action;
            if (!pairs.is_array()) model_fail(path, "expected an array of pairs");
            std::vector<std::pair<int, int>> rel;
            for (std::size_t k = 0; k < pairs.size(); ++k) {
                const auto& pr = pairs[k];
                const std::string ppath = path + "[" + std::to_string(k) + "]";
                if (!pr.is_array() || pr.size() != 2) model_fail(ppath, "expected [from, to]");
                rel.emplace_back(lookup_world(m, pr[0], ppath), lookup_world(m, pr[1], ppath));
            }
            m.relations.emplace(action, std::move(rel));
        }
    }

    if (j.contains("valuation")) {
        if (!j["valuation"].is_object()) model_fail("valuation", "expected an object");
        for (const auto& [prop, ws] : j["valuation"].items()) {
            const std::string path = "valuation." + prop;
            if (!ws.is_array()) model_fail(path, "expected an array of world ids");
            std::vector<int> worlds;
            for (std::size_t k = 0; k < ws.size(); ++k)
                worlds.push_back(lookup_world(m, ws[k], path + "[" + std::to_string(k) + "]"));
            m.valuation.emplace(prop, std::move(worlds));
        }
    }

    if (j.contains("designated")) m.designated = lookup_world(m, j["designated"], "designated");

    m.normalize_and_validate();
    return m;
}

Model load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot open model file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_model(buf.str());
}

std::string save_model(const Model& m) {
    ordered_json j;
    j["worlds"] = m.worlds;
    ordered_json agents = ordered_json::object();
    for (const auto& [agent, data] : m.agents) {
        ordered_json spec;
        ordered_json part = ordered_json::array();
        for (const auto& block : data.partition) {
            ordered_json blk = ordered_json::array();
            for (int w : block) blk.push_back(m.worlds[w]);
            part.push_back(std::move(blk));
        }
        spec["partition"] = std::move(part);
        spec["actions"] = data.actions;
        agents[agent] = std::move(spec);
    }
    j["agents"] = std::move(agents);
    ordered_json rels = ordered_json::object();
    for (const auto& [action, pairs] : m.relations) {
        ordered_json arr = ordered_json::array();
        for (const auto& [s, t] : pairs)
            arr.push_back(ordered_json::array({m.worlds[s], m.worlds[t]}));
        rels[action] = std::move(arr);
    }
    j["relations"] = std::move(rels);
    ordered_json val = ordered_json::object();
    for (const auto& [prop, ws] : m.valuation) {
        ordered_json arr = ordered_json::array();
        for (int w : ws) arr.push_back(m.worlds[w]);
        val[prop] = std::move(arr);
    }
    j["valuation"] = std::move(val);
    if (m.designated) j["designated"] = m.worlds[*m.designated];
    return j.dump(2) + "\n";
}

// ── Class machinery ─────────────────────────────────────────────────────────

int class_of(const Model& m, const std::string& agent, int world) {
    if (world < 0 || world >= static_cast<int>(m.worlds.size()))
        throw ModelError("worlds: world index out of range");
    const auto& data = m.agent_data(agent);
    for (std::size_t c = 0; c < data.partition.size(); ++c)
        if (std::binary_search(data.partition[c].begin(), data.partition[c].end(), world))
            return static_cast<int>(c);
    throw ModelError("agents." + agent + ".partition: world not covered");
}

namespace {

const std::vector<int>& class_block(const Model& m, const std::string& agent, int class_id) {
    const auto& data = m.agent_data(agent);
    if (class_id < 0 || class_id >= static_cast<int>(data.partition.size()))
        throw ModelError("agents." + agent + ".partition: class index out of range");
    return data.partition[class_id];
}

void require_action(const Model& m, const std::string& agent, const std::string& action) {
    const auto& data = m.agent_data(agent);
    if (!std::binary_search(data.actions.begin(), data.actions.end(), action))
        throw ModelError("agents." + agent + ".actions: unknown action '" + action + "'");
}

}  // namespace

bool uniformly_executable(const Model& m, const std::string& agent, int class_id,
                          const std::string& action) {
    require_action(m, agent, action);
    const auto& block = class_block(m, agent, class_id);
    const auto& rel = m.relation(action);
    for (int w : block) {
        auto it = std::lower_bound(rel.begin(), rel.end(), std::pair<int, int>{w, -1});
        if (it == rel.end() || it->first != w) return false;
    }
    return true;
}

std::vector<int> class_successors(const Model& m, const std::string& agent, int class_id,
                                  const std::string& action) {
    require_action(m, agent, action);
    const auto& block = class_block(m, agent, class_id);
    std::set<int> out;
    for (const auto& [s, t] : m.relation(action))
        if (std::binary_search(block.begin(), block.end(), s)) out.insert(class_of(m, agent, t));
    return {out.begin(), out.end()};
}

// ── Strategies and executions ───────────────────────────────────────────────

void validate_strategy(const Model& m, const Strategy& s) {
    const auto& data = m.agent_data(s.agent);
    for (const auto& [c, a] : s.assignment) {
        if (c < 0 || c >= static_cast<int>(data.partition.size()))
            throw ModelError("strategy: class index out of range");
        if (!uniformly_executable(m, s.agent, c, a))
            throw ModelError("strategy: action '" + a + "' not uniformly executable on class " +
                             std::to_string(c));
    }
}

ExecutionOutcome ece(const Model& m, const Strategy& s, int start_class) {
    validate_strategy(m, s);
    (void)class_block(m, s.agent, start_class);

    std::set<int> ends;
    std::set<int> visited;
    // Depth-first walk over the class graph induced by the strategy. A cycle
    // through assigned classes is an infinite complete execution.
    std::vector<char> on_stack(m.agent_data(s.agent).partition.size(), 0);
    bool diverges = false;

    auto walk = [&](auto&& self, int c) -> void {
        if (diverges) return;
        auto it = s.assignment.find(c);
        if (it == s.assignment.end()) {
            ends.insert(c);
            return;
        }
        if (on_stack[c]) {
            diverges = true;
            return;
        }
        if (visited.count(c)) return;
        visited.insert(c);
        on_stack[c] = 1;
        for (int d : class_successors(m, s.agent, c, it->second)) self(self, d);
        on_stack[c] = 0;
    };
    walk(walk, start_class);

    if (diverges) return {true, {}};
    return {false, {ends.begin(), ends.end()}};
}

// ── Kh fixpoint ─────────────────────────────────────────────────────────────

std::vector<int> kh_classes(const Model& m, const std::string& agent,
                            const std::vector<bool>& goal_worlds) {
    if (goal_worlds.size() != m.worlds.size())
        throw ModelError("kh_classes: goal mask size mismatch");
    const auto& data = m.agent_data(agent);
    const int nc = static_cast<int>(data.partition.size());

    std::vector<char> win(nc, 0);
    for (int c = 0; c < nc; ++c) {
        bool inside = true;
        for (int w : data.partition[c]) inside = inside && goal_worlds[w];
        win[c] = inside;
    }

    bool changed = true;
    while (changed) {
        changed = false;
        for (int c = 0; c < nc; ++c) {
            if (win[c]) continue;
            for (const std::string& a : data.actions) {
                if (!uniformly_executable(m, agent, c, a)) continue;
                std::vector<int> succ = class_successors(m, agent, c, a);
                if (succ.empty()) continue;  // guard; uniform executability implies non-empty
                bool all_win = true;
                for (int d : succ) all_win = all_win && win[d];
                if (all_win) {
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
}

// ── Satisfaction ────────────────────────────────────────────────────────────

const std::vector<bool>& Evaluator::world_set(const Formula& phi) {
    auto it = memo_.find(phi);
    if (it != memo_.end()) return it->second;

    const int n = static_cast<int>(model_.worlds.size());
    std::vector<bool> out(n, false);
    switch (phi.kind()) {
        case FormulaKind::Bottom: break;
        case FormulaKind::Prop: {
            auto v = model_.valuation.find(phi.prop_name());
            if (v != model_.valuation.end())
                for (int w : v->second) out[w] = true;
            // unknown propositions are false everywhere
            break;
        }
        case FormulaKind::Not: {
            const auto& c = world_set(phi.child());
            for (int w = 0; w < n; ++w) out[w] = !c[w];
            break;
        }
        case FormulaKind::And: {
            const auto& l = world_set(phi.left());
            const auto& r = world_set(phi.right());
            for (int w = 0; w < n; ++w) out[w] = l[w] && r[w];
            break;
        }
        case FormulaKind::Know: {
            const auto& c = world_set(phi.child());
            const auto& data = model_.agent_data(phi.agent().id);
            for (const auto& block : data.partition) {
                bool all = true;
                for (int w : block) all = all && c[w];
                if (all)
                    for (int w : block) out[w] = true;
            }
            break;
        }
        case FormulaKind::KnowHow: {
            const auto& goal = world_set(phi.child());
            const auto& data = model_.agent_data(phi.agent().id);
            for (int c : kh_classes(model_, phi.agent().id, goal))
                for (int w : data.partition[c]) out[w] = true;
            break;
        }
    }
    return memo_.emplace(phi, std::move(out)).first->second;
}

bool Evaluator::at(int world, const Formula& phi) {
    if (world < 0 || world >= static_cast<int>(model_.worlds.size()))
        throw ModelError("worlds: world index out of range");
    return world_set(phi)[world];
}

bool eval(const Model& m, int world, const Formula& phi) {
    Evaluator ev(m);
    return ev.at(world, phi);
}

}  // namespace elkh
