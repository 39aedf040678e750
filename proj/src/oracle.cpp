// oracle.cpp — strategy enumeration and the bounded model sweep.

#include "elkh/oracle.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <numeric>
#include <set>

namespace elkh {

// ── Strategy enumeration ────────────────────────────────────────────────────

bool strategy_enumerate(const Model& m, const std::string& agent, int start_class,
                        const std::vector<bool>& goal_worlds, Strategy* witness) {
    const auto& data = m.agent_data(agent);
    const int nc = static_cast<int>(data.partition.size());
    if (nc > 12) throw ModelError("strategy_enumerate: refusing a model with more than 12 classes");
    if (start_class < 0 || start_class >= nc)
        throw ModelError("strategy_enumerate: class index out of range");
    if (goal_worlds.size() != m.worlds.size())
        throw ModelError("strategy_enumerate: goal mask size mismatch");

    // Per class: the unassigned option followed by every uniformly executable
    // action, in canonical action order.
    std::vector<std::vector<const std::string*>> options(nc);
    for (int c = 0; c < nc; ++c) {
        options[c].push_back(nullptr);
        for (const std::string& a : data.actions)
            if (uniformly_executable(m, agent, c, a)) options[c].push_back(&a);
    }

    std::vector<std::size_t> pick(nc, 0);  // odometer, last class fastest
    for (;;) {
        Strategy s{agent, {}};
        for (int c = 0; c < nc; ++c)
            if (options[c][pick[c]]) s.assignment.emplace(c, *options[c][pick[c]]);

        ExecutionOutcome outcome = ece(m, s, start_class);
        if (!outcome.diverges) {
            bool all_goal = true;
            for (int c : outcome.ends)
                for (int w : data.partition[c]) all_goal = all_goal && goal_worlds[w];
            if (all_goal) {
                if (witness) *witness = std::move(s);
                return true;
            }
        }

        int k = nc - 1;
        while (k >= 0 && ++pick[k] == options[k].size()) pick[k--] = 0;
        if (k < 0) return false;
    }
}

// ── Bounded model search ────────────────────────────────────────────────────

namespace {

// Set partition of {0..n-1} as blocks plus a world->class map.
struct Partition {
    std::vector<std::vector<int>> blocks;
    std::vector<int> class_of;
};

std::vector<Partition> partitions_of(int n) {
    std::vector<Partition> out;
    std::vector<int> rgs(n, 0);
    auto emit = [&] {
        Partition p;
        p.class_of = rgs;
        int nc = *std::max_element(rgs.begin(), rgs.end()) + 1;
        p.blocks.resize(nc);
        for (int w = 0; w < n; ++w) p.blocks[rgs[w]].push_back(w);
        out.push_back(std::move(p));
    };
    auto rec = [&](auto&& self, int k, int maxv) -> void {
        if (k == n) {
            emit();
            return;
        }
        for (int v = 0; v <= maxv + 1; ++v) {
            rgs[k] = v;
            self(self, k + 1, std::max(maxv, v));
        }
    };
    rec(rec, 1, 0);  // rgs[0] = 0 always
    return out;
}

std::vector<int> rgs_of_blocks(int n, const std::vector<std::vector<int>>& blocks) {
    std::vector<int> class_of(n, -1);
    for (std::size_t c = 0; c < blocks.size(); ++c)
        for (int w : blocks[c]) class_of[w] = static_cast<int>(c);
    std::vector<int> rgs(n);
    std::vector<int> relabel(blocks.size(), -1);
    int next = 0;
    for (int w = 0; w < n; ++w) {
        if (relabel[class_of[w]] < 0) relabel[class_of[w]] = next++;
        rgs[w] = relabel[class_of[w]];
    }
    return rgs;
}

// True when the partition's restricted-growth string is lexicographically
// minimal over all world permutations, i.e. it represents its renaming orbit.
bool shape_representative(int n, const Partition& p) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    const std::vector<int> own = rgs_of_blocks(n, p.blocks);
    do {
        std::vector<std::vector<int>> renamed(p.blocks.size());
        for (std::size_t c = 0; c < p.blocks.size(); ++c) {
            for (int w : p.blocks[c]) renamed[c].push_back(perm[w]);
            std::sort(renamed[c].begin(), renamed[c].end());
        }
        std::sort(renamed.begin(), renamed.end());
        if (rgs_of_blocks(n, renamed) < own) return false;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return true;
}

constexpr int kMaxValuations = 256;  // n<=4, <=2 props
using TruthTable = std::array<std::uint8_t, kMaxValuations>;

struct AgentTables {
    std::vector<int> class_of;
    std::vector<std::uint8_t> class_mask;
    std::array<std::uint8_t, 16> know;  // world mask -> worlds whose class sits inside it
    std::array<std::uint8_t, 16> know_how;  // goal mask -> worlds of winning classes
    bool has_actions = false;
};

// Shared state of one sweep; relations are flat slots grouped per Kh agent.
struct Sweep {
    const Formula& phi;
    int n = 0;
    std::uint8_t full = 0;
    std::vector<std::string> props;
    std::vector<std::string> occ_agents;   // sorted agent ids occurring in phi
    std::vector<std::string> kh_agents;    // subset with Kh occurrences
    int actions_per_agent = 1;
    int num_valuations = 1;

    std::vector<const Partition*> parts;   // per occ agent
    std::vector<std::uint32_t> rel_masks;  // per (kh agent, action) slot
    std::map<std::string, AgentTables> tables;
    std::uint64_t structures = 0;

    std::uint8_t eval_prop_mask(int prop_index, int valuation) const {
        return static_cast<std::uint8_t>((valuation >> (prop_index * n)) & full);
    }
};

void build_tables(Sweep& sw) {
    for (std::size_t a = 0; a < sw.occ_agents.size(); ++a) {
        AgentTables& t = sw.tables[sw.occ_agents[a]];
        const Partition& p = *sw.parts[a];
        t.class_of = p.class_of;
        t.class_mask.assign(p.blocks.size(), 0);
        for (std::size_t c = 0; c < p.blocks.size(); ++c)
            for (int w : p.blocks[c]) t.class_mask[c] |= std::uint8_t(1u << w);
        for (int m = 0; m <= sw.full; ++m) {
            std::uint8_t acc = 0;
            for (std::uint8_t cm : t.class_mask)
                if ((cm & ~m) == 0) acc |= cm;
            t.know[m] = acc;
        }
        t.has_actions = false;
    }

    // Winning-class fixpoint per goal mask, from the relation slots.
    int slot = 0;
    for (const std::string& agent : sw.kh_agents) {
        AgentTables& t = sw.tables[agent];
        t.has_actions = true;
        const int nc = static_cast<int>(t.class_mask.size());

        // per (class, action): uniform executability and successor class set
        std::vector<std::uint8_t> succ(nc * sw.actions_per_agent, 0);
        std::vector<char> exec(nc * sw.actions_per_agent, 0);
        for (int act = 0; act < sw.actions_per_agent; ++act) {
            const std::uint32_t rel = sw.rel_masks[slot + act];
            for (int c = 0; c < nc; ++c) {
                bool all = true;
                std::uint8_t classes = 0;
                std::uint8_t members = t.class_mask[c];
                for (int w = 0; w < sw.n; ++w) {
                    if (!(members & (1u << w))) continue;
                    std::uint8_t row = static_cast<std::uint8_t>((rel >> (w * sw.n)) & sw.full);
                    if (row == 0) all = false;
                    for (int v = 0; v < sw.n; ++v)
                        if (row & (1u << v)) classes |= std::uint8_t(1u << t.class_of[v]);
                }
                exec[c * sw.actions_per_agent + act] = all;
                succ[c * sw.actions_per_agent + act] = classes;
            }
        }
        slot += sw.actions_per_agent;

        for (int goal = 0; goal <= sw.full; ++goal) {
            std::uint16_t win = 0;
            for (int c = 0; c < nc; ++c)
                if ((t.class_mask[c] & ~goal) == 0) win |= std::uint16_t(1u << c);
            bool changed = true;
            while (changed) {
                changed = false;
                for (int c = 0; c < nc; ++c) {
                    if (win & (1u << c)) continue;
                    for (int act = 0; act < sw.actions_per_agent; ++act) {
                        std::uint8_t s = succ[c * sw.actions_per_agent + act];
                        if (exec[c * sw.actions_per_agent + act] && s != 0 && (s & ~win) == 0) {
                            win |= std::uint16_t(1u << c);
                            changed = true;
                            break;
                        }
                    }
                }
            }
            std::uint8_t worlds = 0;
            for (int c = 0; c < nc; ++c)
                if (win & (1u << c)) worlds |= t.class_mask[c];
            t.know_how[goal] = worlds;
        }
    }
}

void eval_table(const Sweep& sw, const Formula& f, TruthTable& out) {
    const int nv = sw.num_valuations;
    switch (f.kind()) {
        case FormulaKind::Bottom:
            std::fill_n(out.begin(), nv, 0);
            break;
        case FormulaKind::Prop: {
            int idx = -1;
            for (std::size_t k = 0; k < sw.props.size(); ++k)
                if (sw.props[k] == f.prop_name()) idx = static_cast<int>(k);
            assert(idx >= 0);
            for (int v = 0; v < nv; ++v) out[v] = sw.eval_prop_mask(idx, v);
            break;
        }
        case FormulaKind::Not: {
            eval_table(sw, f.child(), out);
            for (int v = 0; v < nv; ++v) out[v] = static_cast<std::uint8_t>(sw.full & ~out[v]);
            break;
        }
        case FormulaKind::And: {
            TruthTable rhs;
            eval_table(sw, f.left(), out);
            eval_table(sw, f.right(), rhs);
            for (int v = 0; v < nv; ++v) out[v] &= rhs[v];
            break;
        }
        case FormulaKind::Know: {
            eval_table(sw, f.child(), out);
            const AgentTables& t = sw.tables.at(f.agent().id);
            for (int v = 0; v < nv; ++v) out[v] = t.know[out[v]];
            break;
        }
        case FormulaKind::KnowHow: {
            eval_table(sw, f.child(), out);
            const AgentTables& t = sw.tables.at(f.agent().id);
            for (int v = 0; v < nv; ++v) out[v] = t.know_how[out[v]];
            break;
        }
    }
}

Model materialize(const Sweep& sw, int valuation) {
    Model m;
    for (int w = 0; w < sw.n; ++w) m.worlds.push_back("w" + std::to_string(w + 1));
    int slot = 0;
    for (std::size_t a = 0; a < sw.occ_agents.size(); ++a) {
        Model::AgentData data;
        data.partition = sw.parts[a]->blocks;
        if (std::count(sw.kh_agents.begin(), sw.kh_agents.end(), sw.occ_agents[a])) {
            for (int act = 0; act < sw.actions_per_agent; ++act) {
                std::string name = sw.occ_agents[a] + "_a" + std::to_string(act + 1);
                const std::uint32_t rel = sw.rel_masks[slot + act];
                std::vector<std::pair<int, int>> pairs;
                for (int s = 0; s < sw.n; ++s)
                    for (int t = 0; t < sw.n; ++t)
                        if (rel & (1u << (s * sw.n + t))) pairs.emplace_back(s, t);
                data.actions.push_back(name);
                m.relations.emplace(std::move(name), std::move(pairs));
            }
            slot += sw.actions_per_agent;
        }
        m.agents.emplace(sw.occ_agents[a], std::move(data));
    }
    for (std::size_t k = 0; k < sw.props.size(); ++k) {
        std::uint8_t mask = sw.eval_prop_mask(static_cast<int>(k), valuation);
        std::vector<int> worlds;
        for (int w = 0; w < sw.n; ++w)
            if (mask & (1u << w)) worlds.push_back(w);
        m.valuation.emplace(sw.props[k], std::move(worlds));
    }
    m.normalize_and_validate();
    return m;
}

// Evaluates the current structure over all valuations; fills the hit if any.
bool scan_structure(Sweep& sw, SearchResult& result) {
    ++sw.structures;
    build_tables(sw);
    TruthTable root;
    eval_table(sw, sw.phi, root);
    for (int v = 0; v < sw.num_valuations; ++v) {
        if (!root[v]) continue;
        for (int w = 0; w < sw.n; ++w) {
            if (!(root[v] & (1u << w))) continue;
            Model m = materialize(sw, v);
            m.designated = w;
            if (!eval(m, w, sw.phi))
                throw std::logic_error(
                    "oracle sweep disagrees with the satisfaction relation (internal bug)");
            result.found = true;
            result.model = std::move(m);
            result.world = w;
            return true;
        }
    }
    return false;
}

// Relation odometer: per Kh agent a group of `actions_per_agent` slots kept
// nondecreasing (actions of one agent are interchangeable up to renaming).
bool enumerate_relations(Sweep& sw, std::size_t slot, std::uint32_t group_min,
                         SearchResult& result) {
    if (slot == sw.rel_masks.size()) return scan_structure(sw, result);
    const std::uint32_t limit = 1u << (sw.n * sw.n);
    bool group_start = slot % sw.actions_per_agent == 0;
    for (std::uint32_t mask = group_start ? 0 : group_min; mask < limit; ++mask) {
        sw.rel_masks[slot] = mask;
        bool last_in_group = (slot + 1) % sw.actions_per_agent == 0;
        if (enumerate_relations(sw, slot + 1, last_in_group ? 0 : mask, result)) return true;
    }
    return false;
}

bool enumerate_partitions(Sweep& sw, const std::vector<Partition>& all,
                          const std::vector<const Partition*>& reps, std::size_t agent_idx,
                          SearchResult& result) {
    if (agent_idx == sw.occ_agents.size()) return enumerate_relations(sw, 0, 0, result);
    if (agent_idx == 0) {
        for (const Partition* p : reps) {
            sw.parts[agent_idx] = p;
            if (enumerate_partitions(sw, all, reps, agent_idx + 1, result)) return true;
        }
    } else {
        for (const Partition& p : all) {
            sw.parts[agent_idx] = &p;
            if (enumerate_partitions(sw, all, reps, agent_idx + 1, result)) return true;
        }
    }
    return false;
}

}  // namespace

SearchResult bounded_model_search(const Formula& phi, const SearchBounds& bounds) {
    if (bounds.max_worlds < 1 || bounds.max_worlds > 4)
        throw std::invalid_argument("bounded_model_search: max_worlds must be in [1,4]");
    if (bounds.max_actions_per_agent < 1 || bounds.max_actions_per_agent > 2)
        throw std::invalid_argument("bounded_model_search: max_actions_per_agent must be 1 or 2");

    std::vector<std::string> props = props_of(phi);
    if (props.size() > 2)
        throw std::invalid_argument("bounded_model_search: at most 2 propositions supported");
    std::vector<Agent> agents = agents_of(phi);
    if (agents.size() > 2)
        throw std::invalid_argument("bounded_model_search: at most 2 agents supported");

    SearchResult result;
    for (int n = 1; n <= bounds.max_worlds; ++n) {
        Sweep sw{phi, 0, 0, {}, {}, {}, 1, 1, {}, {}, {}, 0};
        sw.n = n;
        sw.full = static_cast<std::uint8_t>((1u << n) - 1);
        sw.props = props;
        for (const Agent& a : agents) {
            sw.occ_agents.push_back(a.id);
            if (mentions_know_how(phi, a)) sw.kh_agents.push_back(a.id);
        }
        sw.actions_per_agent = bounds.max_actions_per_agent;
        sw.num_valuations = 1 << (n * static_cast<int>(props.size()));
        sw.parts.resize(sw.occ_agents.size());
        sw.rel_masks.assign(sw.kh_agents.size() * sw.actions_per_agent, 0);

        std::vector<Partition> all = partitions_of(n);
        std::vector<const Partition*> reps;
        for (const Partition& p : all)
            if (shape_representative(n, p)) reps.push_back(&p);

        bool found = sw.occ_agents.empty()
                         ? enumerate_relations(sw, 0, 0, result)
                         : enumerate_partitions(sw, all, reps, 0, result);
        result.structures_tried += sw.structures;
        if (found) return result;
    }
    return result;
}

}  // namespace elkh
