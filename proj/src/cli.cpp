// cli.cpp — subcommands sat / valid / check / trace / fuzz.

#include "elkh/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "elkh/extract.hpp"
#include "elkh/gen.hpp"
#include "elkh/oracle.hpp"
#include "elkh/tableau.hpp"

namespace elkh::cli {

namespace {

using nlohmann::ordered_json;

constexpr int kExitSat = 10;
constexpr int kExitUnsat = 20;
constexpr int kExitUsage = 2;
constexpr int kExitBudget = 3;
constexpr int kExitViolation = 1;

struct FormulaInput {
    std::string text;
    std::string file;

    Formula resolve() const {
        if (!file.empty()) {
            std::ifstream in(file, std::ios::binary);
            if (!in) throw ParseError("cannot open formula file '" + file + "'", 1);
            std::ostringstream buf;
            buf << in.rdbuf();
            return parse_formula(buf.str());
        }
        return parse_formula(text);
    }
};

void add_formula_options(CLI::App* cmd, FormulaInput& input, bool positional_required) {
    auto* pos = cmd->add_option("formula", input.text, "formula text");
    auto* file = cmd->add_option("-f,--file", input.file, "read the formula from a file");
    pos->excludes(file);
    if (positional_required) {
        // one of the two must be present; checked after parsing
    }
}

Formula require_formula(const FormulaInput& input) {
    if (input.text.empty() && input.file.empty())
        throw CLI::ValidationError("formula", "missing formula (argument or -f file)");
    return input.resolve();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file '" + path + "'");
    out << bytes;
}

struct DecideReport {
    Verdict verdict;
    bool countermodel_ok = false;
    std::string model_json;  // set when open and extraction ran
    Extraction extraction;   // valid when open
};

DecideReport decide_and_extract(const Formula& f, std::uint64_t budget) {
    DecideReport rep;
    DecideOptions opts;
    opts.node_budget = budget;
    rep.verdict = decide(f, opts);
    if (!rep.verdict.closed) {
        rep.extraction = build_model(*rep.verdict.open);
        TruthReport truth = truth_lemma_check(rep.extraction);
        bool designated_ok =
            eval(rep.extraction.model, rep.extraction.designated, f);
        rep.countermodel_ok = truth.ok() && designated_ok;
        rep.model_json = save_model(rep.extraction.model);
    }
    return rep;
}

void print_stats_lines(std::ostream& out, const RunStats& s) {
    out << "m: " << s.closure_size << "\n";
    out << "nodes: " << s.nodes_visited << "\n";
    out << "max-depth: " << s.max_depth << "\n";
    out << "bounds: " << (assert_bounds(s) ? "ok" : "VIOLATED") << "\n";
}

ordered_json stats_json(const RunStats& s) {
    return ordered_json{{"m", s.closure_size},
                        {"nodes", s.nodes_visited},
                        {"max_depth", s.max_depth},
                        {"max_children", s.max_children},
                        {"peak_path", s.peak_path},
                        {"bounds_ok", assert_bounds(s)}};
}

int run_sat(const Formula& f, std::uint64_t budget, const std::string& model_path, bool json,
            bool extra_stats, std::ostream& out) {
    DecideReport rep = decide_and_extract(f, budget);
    const bool sat = !rep.verdict.closed;
    if (sat && !model_path.empty()) write_file(model_path, rep.model_json);

    if (json) {
        ordered_json j{{"formula", pretty(f)},
                       {"verdict", sat ? "SAT" : "UNSAT"},
                       {"stats", stats_json(rep.verdict.stats)}};
        if (sat) j["countermodel_check"] = rep.countermodel_ok ? "ok" : "FAILED";
        if (sat && !model_path.empty()) j["model"] = model_path;
        out << j.dump(2) << "\n";
    } else {
        out << (sat ? "SAT" : "UNSAT") << "\n";
        out << "formula: " << pretty(f) << "\n";
        print_stats_lines(out, rep.verdict.stats);
        if (extra_stats)
            out << "max-children: " << rep.verdict.stats.max_children
                << "\npeak-path: " << rep.verdict.stats.peak_path << "\n";
        if (sat) out << "countermodel-check: " << (rep.countermodel_ok ? "ok" : "FAILED") << "\n";
        if (sat && !model_path.empty()) out << "model: " << model_path << "\n";
    }
    if (sat && !rep.countermodel_ok) return kExitViolation;
    return sat ? kExitSat : kExitUnsat;
}

int run_valid(const Formula& f, std::uint64_t budget, const std::string& model_path, bool json,
              bool extra_stats, std::ostream& out) {
    const Formula comp = complement(f);
    DecideReport rep = decide_and_extract(comp, budget);
    const bool is_valid = rep.verdict.closed;
    if (!is_valid && !model_path.empty()) write_file(model_path, rep.model_json);

    if (json) {
        ordered_json j{{"formula", pretty(f)},
                       {"complement", pretty(comp)},
                       {"verdict", is_valid ? "VALID" : "NOT-VALID"},
                       {"stats", stats_json(rep.verdict.stats)}};
        if (!is_valid) j["countermodel_check"] = rep.countermodel_ok ? "ok" : "FAILED";
        if (!is_valid && !model_path.empty()) j["model"] = model_path;
        out << j.dump(2) << "\n";
    } else {
        out << (is_valid ? "VALID" : "NOT-VALID") << "\n";
        out << "formula: " << pretty(f) << "\n";
        out << "complement: " << pretty(comp) << "\n";
        print_stats_lines(out, rep.verdict.stats);
        if (extra_stats)
            out << "max-children: " << rep.verdict.stats.max_children
                << "\npeak-path: " << rep.verdict.stats.peak_path << "\n";
        if (!is_valid)
            out << "countermodel-check: " << (rep.countermodel_ok ? "ok" : "FAILED") << "\n";
        if (!is_valid && !model_path.empty()) out << "model: " << model_path << "\n";
    }
    if (!is_valid && !rep.countermodel_ok) return kExitViolation;
    return is_valid ? kExitUnsat : kExitSat;
}

int run_check(const std::string& model_path, const std::string& world, const Formula& f,
              bool json, std::ostream& out) {
    Model m = load_model_file(model_path);
    int w;
    if (!world.empty()) {
        w = m.world_index(world);
    } else if (m.designated) {
        w = *m.designated;
    } else {
        throw ModelError("designated: model has no designated world; pass --world");
    }
    bool holds = eval(m, w, f);
    if (json) {
        ordered_json j{{"model", model_path},
                       {"world", m.worlds[w]},
                       {"formula", pretty(f)},
                       {"holds", holds}};
        out << j.dump(2) << "\n";
    } else {
        out << (holds ? "true" : "false") << "\n";
    }
    return 0;
}

int run_trace(const Formula& f, std::uint64_t budget, const std::string& dot_path, bool open_only,
              std::ostream& out) {
    TraceLog trace;
    DecideOptions opts;
    opts.node_budget = budget;
    opts.trace = &trace;
    Verdict verdict = decide(f, opts);

    std::string dot;
    if (open_only) {
        if (verdict.closed) throw std::runtime_error("no open subtree: the tableau is closed");
        dot = verdict.open->to_dot();
    } else {
        dot = trace.to_dot();
    }
    write_file(dot_path, dot);
    out << (verdict.closed ? "UNSAT" : "SAT") << "\n";
    out << "dot: " << dot_path << "\n";
    out << "nodes: " << (open_only ? verdict.open->nodes.size() : trace.rows.size()) << "\n";
    return verdict.closed ? kExitUnsat : kExitSat;
}

struct FuzzOutcome {
    std::uint64_t cases = 0;
    std::uint64_t open_count = 0;
    std::uint64_t oracle_found = 0;
    std::uint64_t violations = 0;
};

int run_fuzz(std::uint64_t seed, int count, int size, int agents, int props, int max_worlds,
             std::uint64_t budget, bool json, bool extra_stats, std::ostream& out) {
    std::mt19937_64 rng(seed);
    FormulaGenConfig cfg{size, agents, props};
    FuzzOutcome sum;
    ordered_json cases = ordered_json::array();

    if (!json)
        out << "fuzz: seed=" << seed << " count=" << count << " size=" << size
            << " agents=" << agents << " props=" << props << " max-worlds=" << max_worlds << "\n";

    for (int k = 0; k < count; ++k) {
        Formula f = random_formula(rng, cfg);
        ++sum.cases;
        std::string problem;

        DecideReport rep = decide_and_extract(f, budget);
        bool open = !rep.verdict.closed;
        if (open) {
            ++sum.open_count;
            if (!rep.countermodel_ok) problem = "countermodel check failed";
        }

        SearchBounds bounds;
        bounds.max_worlds = max_worlds;
        SearchResult oracle = bounded_model_search(f, bounds);
        if (oracle.found) ++sum.oracle_found;
        if (oracle.found && rep.verdict.closed) problem = "oracle found a model but tableau closed";

        if (!problem.empty()) ++sum.violations;
        if (json) {
            ordered_json c{{"formula", pretty(f)},
                           {"verdict", open ? "open" : "closed"},
                           {"oracle", oracle.found ? "found" : "not-found-within-bounds"}};
            if (open) c["countermodel_check"] = rep.countermodel_ok ? "ok" : "FAILED";
            if (!problem.empty()) c["violation"] = problem;
            cases.push_back(std::move(c));
        } else {
            out << "[" << k << "] " << (open ? "open " : "closed") << " oracle="
                << (oracle.found ? "found    " : "not-found") << " ";
            if (extra_stats) out << "nodes=" << rep.verdict.stats.nodes_visited << " ";
            out << (problem.empty() ? "ok" : ("VIOLATION: " + problem));
            out << "  " << pretty(f) << "\n";
        }
    }

    if (json) {
        ordered_json j{{"seed", seed},      {"count", sum.cases},
                       {"open", sum.open_count}, {"oracle_found", sum.oracle_found},
                       {"violations", sum.violations}, {"cases", std::move(cases)}};
        out << j.dump(2) << "\n";
    } else {
        out << "cases: " << sum.cases << "\n";
        out << "open: " << sum.open_count << "\n";
        out << "oracle-found: " << sum.oracle_found << "\n";
        out << "violations: " << sum.violations << "\n";
    }
    return sum.violations ? kExitViolation : 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"satisfiability, validity and model checking for the epistemic logic of "
                 "strategically knowing how"};
    app.require_subcommand(1);

    std::uint64_t budget = 10'000'000;
    bool json = false;
    bool extra_stats = false;
    app.add_option("--budget", budget, "tableau node budget (0 disables)");
    app.add_flag("--json", json, "machine-readable output");
    app.add_flag("--stats", extra_stats, "extra statistics in reports");

    FormulaInput sat_in, valid_in, trace_in, check_in;
    std::string sat_model, valid_model, check_model, check_world, trace_dot;
    bool trace_open_only = false;
    std::uint64_t fuzz_seed = 1;
    int fuzz_count = 100, fuzz_size = 8, fuzz_agents = 2, fuzz_props = 2, fuzz_worlds = 3;

    CLI::App* sat = app.add_subcommand("sat", "decide satisfiability");
    sat->fallthrough();
    add_formula_options(sat, sat_in, true);
    sat->add_option("--model", sat_model, "write the countermodel as JSON");

    CLI::App* valid = app.add_subcommand("valid", "decide validity (complement is refuted)");
    valid->fallthrough();
    add_formula_options(valid, valid_in, true);
    valid->add_option("--model", valid_model, "write a countermodel when not valid");

    CLI::App* check = app.add_subcommand("check", "evaluate a formula in a model file");
    check->fallthrough();
    check->add_option("--model", check_model, "model JSON file")->required();
    check->add_option("--world", check_world, "world id (defaults to the designated world)");
    check->add_option("--formula", check_in.text, "formula text");
    check->add_option("-f,--file", check_in.file, "read the formula from a file");

    CLI::App* trace = app.add_subcommand("trace", "export the explored tableau as DOT");
    trace->fallthrough();
    add_formula_options(trace, trace_in, true);
    trace->add_option("--dot", trace_dot, "output DOT path")->required();
    trace->add_flag("--open-only", trace_open_only, "restrict to the open subtree");

    CLI::App* fuzz = app.add_subcommand("fuzz", "random agreement suite");
    fuzz->fallthrough();
    fuzz->add_option("--seed", fuzz_seed, "random seed");
    fuzz->add_option("--count", fuzz_count, "number of formulas");
    fuzz->add_option("--size", fuzz_size, "maximum AST size");
    fuzz->add_option("--agents", fuzz_agents, "agent count");
    fuzz->add_option("--props", fuzz_props, "proposition count");
    fuzz->add_option("--max-worlds", fuzz_worlds, "oracle world bound");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            out << app.help();
            return 0;
        }
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (sat->parsed()) return run_sat(require_formula(sat_in), budget, sat_model, json,
                                          extra_stats, out);
        if (valid->parsed())
            return run_valid(require_formula(valid_in), budget, valid_model, json, extra_stats,
                             out);
        if (check->parsed())
            return run_check(check_model, check_world, require_formula(check_in), json, out);
        if (trace->parsed())
            return run_trace(require_formula(trace_in), budget, trace_dot, trace_open_only, out);
        if (fuzz->parsed())
            return run_fuzz(fuzz_seed, fuzz_count, fuzz_size, fuzz_agents, fuzz_props, fuzz_worlds,
                            budget, json, extra_stats, out);
    } catch (const CLI::Error& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ModelError& e) {
        err << "model error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const BudgetError& e) {
        err << "budget error: " << e.what() << "\n";
        return kExitBudget;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitViolation;
    }
    return kExitUsage;
}

}  // namespace elkh::cli
