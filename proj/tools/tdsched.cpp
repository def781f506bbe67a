// Command-line front end: instance generation, single solves, oracle
// cross-checks and the savings benchmark.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "tdsched/ddd.hpp"
#include "tdsched/instgen.hpp"
#include "tdsched/io.hpp"
#include "tdsched/random_problem.hpp"
#include "tdsched/replen.hpp"
#include "tdsched/savings.hpp"

namespace {

using namespace tdsched;

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void emit(const std::string& text, const std::string& output) {
    if (output.empty() || output == "-")
        std::cout << text;
    else
        write_text_file(output, text);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load_json(const std::string& path) {
    try {
        return read_json_file(path);
    } catch (const std::runtime_error& e) {
        throw UsageError(e.what());
    }
}

instgen::GeneratorConfig load_config(const std::string& path) {
    if (path.empty()) return {};
    return instgen::config_from_json(load_json(path));
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
    std::string solomon;
    std::string variant = "none";
    std::string synthetic;
    std::size_t customers = 0;
    std::uint64_t seed = 1;
    std::string config;
    std::string output;
};

int run_generate(const GenerateArgs& a) {
    auto cfg = load_config(a.config);
    const auto variant = instgen::parse_variant(a.variant);
    instgen::SolomonData raw;
    if (!a.synthetic.empty()) {
        if (a.customers == 0) throw UsageError("--synthetic needs --customers");
        raw = instgen::synthetic_solomon(instgen::parse_family(a.synthetic), a.customers, a.seed);
    } else {
        if (a.solomon.empty()) throw UsageError("generate needs a Solomon file or --synthetic");
        raw = instgen::parse_solomon(read_text(a.solomon));
        if (a.customers > 0) raw = instgen::truncate(raw, a.customers);
    }
    emit(instgen::instance_to_json(instgen::generate_instance(raw, variant, cfg)).dump() + "\n", a.output);
    return kOk;
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
    std::string problem;
    std::string algo = "ddd-replen";
    std::string preload;
    double eps = 0;
    std::string output;
};

int run_solve(const SolveArgs& a) {
    Problem p = problem_from_json(load_json(a.problem));
    if (a.eps > 0) p.eps = to_ticks(a.eps);
    std::vector<Vertex> warm;
    if (!a.preload.empty()) warm = path_from_json(load_json(a.preload));

    bool may_replenish = false, must_replenish = false;
    for (const auto& act : p.activities) {
        may_replenish = may_replenish || act.may_replenish();
        must_replenish = must_replenish || act.must_replenish();
    }
    if (a.algo == "ddd" && must_replenish) throw UsageError("--algo ddd cannot honour required replenishments");

    SolveResult r;
    auto tight = tighten_windows(p);
    if (tight) {
        if (a.algo == "greedy") {
            r.schedule = greedy_earliest(*tight);
        } else if (a.algo == "ten-full") {
            if (may_replenish) {
                r = replen::solve_full(*tight);
            } else {
                const auto net = ten::full_expand(*tight);
                r.stats.vertices_created = net.vertex_count();
                auto pr = ten::solve(net, *tight, &r.stats);
                r.schedule = std::move(pr.schedule);
                r.path = std::move(pr.path);
            }
        } else if (a.algo == "ddd") {
            r = ddd::solve(*tight, {}, warm);
        } else if (a.algo == "ddd-replen") {
            r = replen::solve_ddd_replen(*tight, {}, {}, warm);
        } else {
            throw UsageError("unknown --algo " + a.algo);
        }
    }
    if (r.schedule) {
        if (auto v = validate_schedule(*tight, *r.schedule)) throw std::logic_error("solver bug: " + v->message());
    }
    json out = schedule_to_json(r.schedule, r.stats);
    if (r.schedule && !r.path.empty()) out["path"] = path_to_json(r.path);
    emit(out.dump(2) + "\n", a.output);
    return r.schedule ? kOk : kFailed;
}

// ---------------------------------------------------------------- validate

struct ValidateArgs {
    std::size_t instances = 1000;
    std::uint64_t seed = 1;
    std::string output;
};

/// Random oracle comparison; the first mismatch of each suite is dumped as a problem file.
int run_validate(const ValidateArgs& a) {
    bool ok = true;
    auto suite = [&](const char* name, bool replenish) {
        std::mt19937_64 rng(a.seed);
        RandomProblemConfig cfg;
        cfg.replenishment = replenish;
        cfg.random_modes = replenish;
        if (replenish) cfg.max_activities = 6;
        std::size_t matched = 0;
        bool dumped = false;
        for (std::size_t k = 0; k < a.instances; ++k) {
            const Problem raw = random_problem(rng, cfg);
            auto p = tighten_windows(raw);
            bool same = true;
            std::string why;
            if (p) {
                SolveResult fast = replenish ? replen::solve_ddd_replen(*p) : ddd::solve(*p);
                std::optional<Schedule> slow;
                if (replenish)
                    slow = replen::solve_full(*p).schedule;
                else
                    slow = ten::solve(ten::full_expand(*p), *p).schedule;
                same = fast.schedule.has_value() == slow.has_value() &&
                       (!slow || fast.schedule->completion == slow->completion);
                if (!same) why = "objective differs from the full expansion";
                if (same && fast.schedule) {
                    if (auto v = validate_schedule(*p, *fast.schedule)) {
                        same = false;
                        why = v->message();
                    }
                }
            }
            if (same) {
                ++matched;
                continue;
            }
            ok = false;
            std::cerr << name << " instance " << k << " (seed " << a.seed << "): " << why << "\n";
            if (!dumped) {
                const std::string file = (a.output.empty() ? std::string("mismatch") : a.output) + "-" + name + ".json";
                write_text_file(file, problem_to_json(raw).dump(2) + "\n");
                std::cerr << "reproducer written to " << file << "\n";
                dumped = true;
            }
        }
        std::cout << name << ": " << matched << "/" << a.instances << " match\n";
    };
    suite("TDASP", false);
    suite("TDASPR", true);
    return ok ? kOk : kFailed;
}

// ---------------------------------------------------------------- bench / report

struct BenchArgs {
    std::vector<std::string> instances;
    std::vector<std::string> evaluators{"DDD", "DDD-PL"};
    std::vector<std::string> variants{"none", "depot", "depot+3"};
    double time_limit = 7200;
    double eps = 1;
    std::string config;
    std::string output;
};

int run_bench(const BenchArgs& a) {
    const auto cfg = load_config(a.config);
    std::vector<savings::Evaluator> evaluators;
    for (const auto& e : a.evaluators) evaluators.push_back(savings::parse_evaluator(e));
    std::vector<instgen::Variant> variants;
    for (const auto& v : a.variants) variants.push_back(instgen::parse_variant(v));

    std::vector<savings::ReportRow> rows;
    bool all_feasible = true;
    for (const auto& file : a.instances) {
        const auto base = instgen::instance_from_json(load_json(file));
        for (auto variant : variants) {
            const auto inst = variant == base.variant ? base : instgen::with_variant(base, variant, cfg);
            for (auto ev : evaluators) {
                const auto sol =
                    savings::savings_solve(inst, {.evaluator = ev, .time_limit = a.time_limit, .eps = to_ticks(a.eps)});
                all_feasible = all_feasible && sol.feasible;
                rows.push_back(savings::make_row(inst.name, savings::family_of(inst.name), ev, variant, sol));
                std::cerr << inst.name << " " << instgen::to_string(variant) << " " << savings::to_string(ev)
                          << ": " << sol.vehicles() << " vehicles, " << sol.evaluations << " evaluations\n";
            }
        }
    }
    emit(savings::report(rows), a.output);
    return all_feasible ? kOk : kFailed;
}

struct ReportArgs {
    std::vector<std::string> inputs;
    std::string output;
};

int run_report(const ReportArgs& a) {
    std::vector<savings::ReportRow> rows;
    for (const auto& file : a.inputs) {
        auto parsed = savings::parse_report(read_text(file));
        rows.insert(rows.end(), parsed.begin(), parsed.end());
    }
    emit(savings::report(rows), a.output);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-dependent activity scheduling with replenishments"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Build a routing instance from a Solomon file");
    g->add_option("solomon", gen.solomon, "Solomon VRPTW text file");
    g->add_option("--variant", gen.variant, "none, depot, depot+1, depot+3 or depot+5");
    g->add_option("--synthetic", gen.synthetic, "Generate a clustered C1 or C2 style base instance instead");
    g->add_option("--customers", gen.customers, "Number of customers (truncates a Solomon file)");
    g->add_option("--seed", gen.seed, "Seed for --synthetic");
    g->add_option("--config", gen.config, "Generator configuration (JSON)");
    g->add_option("-o,--output", gen.output, "Output file (default stdout)");

    SolveArgs sol;
    auto* s = app.add_subcommand("solve", "Solve one problem file");
    s->add_option("problem", sol.problem, "Problem JSON")->required();
    s->add_option("--algo", sol.algo, "greedy, ten-full, ddd or ddd-replen")
        ->check(CLI::IsMember({"greedy", "ten-full", "ddd", "ddd-replen"}));
    s->add_option("--preload", sol.preload, "Solution path to seed the network with");
    s->add_option("--eps", sol.eps, "Override the time grid step");
    s->add_option("-o,--output", sol.output, "Output file (default stdout)");

    ValidateArgs val;
    auto* v = app.add_subcommand("validate", "Compare the solvers with the full expansion on random problems");
    v->add_option("-n,--instances", val.instances, "Problems per suite");
    v->add_option("--seed", val.seed, "Random seed");
    v->add_option("-o,--output", val.output, "Prefix for reproducer files");

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "Run the savings heuristic and print the result table");
    b->add_option("instances", bench.instances, "Instance JSON files")->required();
    b->add_option("--evaluators", bench.evaluators, "DDD and/or DDD-PL")->delimiter(',');
    b->add_option("--variants", bench.variants, "Station variants")->delimiter(',');
    b->add_option("--time-limit", bench.time_limit, "Seconds per run");
    b->add_option("--eps", bench.eps, "Time grid step");
    b->add_option("--config", bench.config, "Generator configuration used for the instances");
    b->add_option("-o,--output", bench.output, "CSV file (default stdout)");

    ReportArgs rep;
    auto* r = app.add_subcommand("report", "Merge result tables and recompute the family means");
    r->add_option("inputs", rep.inputs, "CSV files written by bench")->required();
    r->add_option("-o,--output", rep.output, "CSV file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*g) return run_generate(gen);
        if (*s) return run_solve(sol);
        if (*v) return run_validate(val);
        if (*b) return run_bench(bench);
        if (*r) return run_report(rep);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const instgen::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailed;
    }
    return kUsage;
}
