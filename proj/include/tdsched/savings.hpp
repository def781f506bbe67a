#pragma once

#include <algorithm>
#include <chrono>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "tdsched/instgen.hpp"
#include "tdsched/replen.hpp"

namespace tdsched::savings {

using instgen::Instance;
using instgen::Variant;

enum class Evaluator { ddd, ddd_pl };

inline std::string_view to_string(Evaluator e) { return e == Evaluator::ddd ? "DDD" : "DDD-PL"; }

inline Evaluator parse_evaluator(std::string_view s) {
    if (s == "DDD" || s == "ddd") return Evaluator::ddd;
    if (s == "DDD-PL" || s == "ddd-pl") return Evaluator::ddd_pl;
    throw std::invalid_argument("unknown evaluator: " + std::string(s));
}

/// Customer visits (indices into Instance::customers) plus an optional committed station per leg.
struct Route {
    std::vector<std::size_t> customers;
    /// One entry per leg (customers.size() + 1); a value routes the leg via that station location and charges there.
    std::vector<std::optional<std::size_t>> via;

    std::size_t legs() const { return customers.size() + 1; }
    std::size_t from(std::size_t leg, const Instance& inst) const {
        return leg == 0 ? 0 : inst.customers[customers[leg - 1]].location;
    }
    std::size_t to(std::size_t leg, const Instance& inst) const {
        return leg == customers.size() ? 0 : inst.customers[customers[leg]].location;
    }
};

struct RouteProblem {
    Problem problem;
    /// Identifies the activity sequence for the preload cache.
    std::vector<std::int64_t> key;
    /// Leg index of each activity (service activities belong to the leg that follows them).
    std::vector<std::size_t> leg;
};

/// Largest grid start in [lo, due] whose completion is at most due; lo - eps when there is none.
inline Tick last_start_arriving_by(const PwlFunction& tau, Tick lo, Tick due, Tick eps) {
    lo = ceil_to_grid(lo, eps);
    auto fits = [&](Tick t) { return t + tau(t) <= due; };
    if (lo > due || !fits(lo)) return lo - eps;
    Tick a = lo / eps, b = floor_to_grid(due, eps) / eps;
    while (a < b) {
        const Tick mid = a + (b - a + 1) / 2;
        if (fits(mid * eps))
            a = mid;
        else
            b = mid - 1;
    }
    return a * eps;
}

/**
 * Encodes a route as an activity sequence: a travel activity per leg and a
 * service activity per customer. A leg with a committed station becomes two
 * travel activities, and the first one must be followed by a replenishment.
 * Travel into a customer must arrive by its due time; the last leg must
 * reach the depot by the end of the horizon.
 */
inline RouteProblem route_to_problem(const Route& route, const Instance& inst, Tick eps = kTicksPerUnit) {
    RouteProblem out;
    Problem& p = out.problem;
    p.eps = eps;
    p.capacity = to_ticks(inst.battery);
    const bool chargeable = inst.variant != Variant::none;
    const auto delta = PwlFunction::constant(to_ticks(inst.replenishment));
    const Tick horizon = to_ticks(inst.horizon);

    auto travel = [&](std::size_t a, std::size_t b, Tick earliest, Tick latest, std::size_t leg, bool charge) {
        const auto& f = inst.leg(a, b);
        Activity act;
        act.earliest = earliest;
        act.latest = latest;
        act.duration = f.tau;
        act.consumption = f.rho;
        if (chargeable) act.replenishment = delta;
        act.mode = charge ? ReplenishmentMode::required : ReplenishmentMode::forbidden;
        p.activities.push_back(std::move(act));
        out.key.push_back(static_cast<std::int64_t>(charge ? 2 : 1) << 40 | std::int64_t(a) << 20 | std::int64_t(b));
        out.leg.push_back(leg);
    };

    Tick ready = to_ticks(inst.depot_ready);
    for (std::size_t k = 0; k < route.legs(); ++k) {
        const std::size_t a = route.from(k, inst), b = route.to(k, inst);
        const bool into_depot = k == route.customers.size();
        const Tick due = into_depot ? horizon : to_ticks(inst.customers[route.customers[k]].due);
        const auto via = k < route.via.size() ? route.via[k] : std::nullopt;
        if (via) {
            travel(a, *via, ready, horizon, k, true);
            travel(*via, b, ready, last_start_arriving_by(inst.leg(*via, b).tau, ready, due, eps), k, false);
        } else {
            travel(a, b, ready, last_start_arriving_by(inst.leg(a, b).tau, ready, due, eps), k, false);
        }
        if (into_depot) break;
        const auto& c = inst.customers[route.customers[k]];
        Activity service;
        service.earliest = to_ticks(c.ready);
        service.latest = to_ticks(c.due);
        service.duration = PwlFunction::constant(to_ticks(c.service));
        service.consumption = PwlFunction::constant(0);
        if (chargeable) service.replenishment = delta;
        p.activities.push_back(std::move(service));
        out.key.push_back(std::int64_t(3) << 40 | std::int64_t(c.location));
        out.leg.push_back(k + 1);
        ready = to_ticks(c.ready + c.service);
    }
    return out;
}

/// Station with the smallest detour on a -> b, if the detour is at most sqrt(2) times d(a,b).
inline std::optional<std::size_t> eligible_station(std::size_t a, std::size_t b, const Instance& inst) {
    const double direct = inst.free_distance(a, b);
    std::optional<std::size_t> best;
    double best_detour = std::numeric_limits<double>::infinity();
    for (std::size_t s : inst.stations) {
        if (s == a || s == b) continue;
        const double detour = inst.free_distance(a, s) + inst.free_distance(s, b) - direct;
        if (detour <= std::sqrt(2.0) * direct + 1e-9 && detour < best_detour) {
            best_detour = detour;
            best = s;
        }
    }
    return best;
}

/**
 * Solution paths of earlier evaluations keyed by activity sequence. A lookup
 * returns the stored path of the key sharing the longest prefix, cut to that
 * prefix; in lexicographic order that key is a neighbour of the lookup key.
 */
class PreloadCache {
public:
    std::vector<Vertex> lookup(const std::vector<std::int64_t>& key) const {
        auto common = [&](const std::vector<std::int64_t>& other) {
            std::size_t n = 0;
            while (n < key.size() && n < other.size() && key[n] == other[n]) ++n;
            return n;
        };
        auto it = paths_.lower_bound(key);
        const std::vector<Vertex>* best = nullptr;
        std::size_t best_len = 0;
        if (it != paths_.end() && common(it->first) > best_len) {
            best_len = common(it->first);
            best = &it->second;
        }
        if (it != paths_.begin() && common(std::prev(it)->first) > best_len) {
            best_len = common(std::prev(it)->first);
            best = &std::prev(it)->second;
        }
        std::vector<Vertex> out;
        if (best)
            for (const Vertex& v : *best)
                if (v.activity < best_len) out.push_back(v);
        return out;
    }

    void store(const std::vector<std::int64_t>& key, std::vector<Vertex> path) { paths_[key] = std::move(path); }
    std::size_t size() const { return paths_.size(); }

private:
    std::map<std::vector<std::int64_t>, std::vector<Vertex>> paths_;
};

struct Evaluation {
    bool feasible = false;
    Route route;
    /// The windows-tightened problem the schedule belongs to.
    Problem problem;
    std::optional<Schedule> schedule;
    SolverStats stats;
    std::size_t solver_calls = 0;
    double cpu_seconds = 0;

    Tick completion() const { return schedule ? schedule->completion : 0; }
    std::size_t replenishments() const { return schedule ? schedule->replenishment_count() : 0; }
};

namespace detail {

inline double cpu_now() { return static_cast<double>(std::clock()) / CLOCKS_PER_SEC; }

/// Index of the leg whose activity first pushes the running consumption estimate above Q, if any.
template <typename Bound>
std::optional<std::size_t> first_overflow_leg(const RouteProblem& rp, const Problem& p, Bound bound) {
    Amount running = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        running += bound(p[i]);
        if (running > p.capacity) return rp.leg[i];
        if (p[i].must_replenish()) running = 0;
    }
    return std::nullopt;
}

} // namespace detail

/**
 * Evaluates a route: freight check, then an attempt without charging, then
 * stations committed one at a time on the leg where the consumption bound
 * first exceeds the battery (the latest uncommitted leg with an eligible
 * station at or before it). With a cache, previous solution paths are preloaded.
 */
inline Evaluation evaluate_route(std::span<const std::size_t> customers, const Instance& inst,
                                 PreloadCache* cache = nullptr, Tick eps = kTicksPerUnit) {
    Evaluation ev;
    const double started = detail::cpu_now();
    ev.route.customers.assign(customers.begin(), customers.end());
    ev.route.via.assign(ev.route.legs(), std::nullopt);
    double load = 0;
    for (auto c : customers) load += inst.customers.at(c).demand;
    if (load > inst.vehicle_capacity + 1e-9) return ev;

    for (;;) {
        const RouteProblem rp = route_to_problem(ev.route, inst, eps);
        auto tight = tighten_windows(rp.problem);
        if (!tight) break;
        std::vector<Vertex> warm;
        if (cache) warm = cache->lookup(rp.key);
        SolveResult r = replen::solve_ddd_replen(*tight, {}, {}, warm);
        ++ev.solver_calls;
        ev.stats.merge(r.stats);
        if (r.schedule) {
            if (cache) cache->store(rp.key, r.path);
            ev.feasible = true;
            ev.problem = std::move(*tight);
            ev.schedule = std::move(r.schedule);
            break;
        }
        if (inst.stations.empty()) break;

        auto overflow = detail::first_overflow_leg(
            rp, *tight, [](const Activity& a) { return a.consumption.min_on(a.earliest, a.latest); });
        if (!overflow)
            overflow = detail::first_overflow_leg(
                rp, *tight, [](const Activity& a) { return a.consumption.max_on(a.earliest, a.latest); });
        if (!overflow) break;
        std::optional<std::size_t> pick;
        for (std::size_t k = *overflow + 1; k-- > 0;) {
            if (ev.route.via[k]) break;
            if (auto s = eligible_station(ev.route.from(k, inst), ev.route.to(k, inst), inst)) {
                ev.route.via[k] = s;
                pick = k;
                break;
            }
        }
        if (!pick) break;
    }
    ev.cpu_seconds = detail::cpu_now() - started;
    return ev;
}

struct Options {
    Evaluator evaluator = Evaluator::ddd;
    double time_limit = 7200;
    Tick eps = kTicksPerUnit;
};

struct Solution {
    std::vector<Evaluation> routes;
    /// False when some single-customer route is already infeasible.
    bool feasible = true;
    bool terminated = false;
    std::size_t evaluations = 0;
    double eval_cpu_seconds = 0;
    double cpu_seconds = 0;
    SolverStats stats;

    std::size_t vehicles() const { return routes.size(); }
    double total_completion() const {
        double sum = 0;
        for (const auto& r : routes) sum += to_units(r.completion());
        return sum;
    }
    std::size_t replenishments() const {
        std::size_t n = 0;
        for (const auto& r : routes) n += r.replenishments();
        return n;
    }
    std::size_t routes_with_replenishment() const {
        std::size_t n = 0;
        for (const auto& r : routes) n += r.replenishments() > 0 ? 1 : 0;
        return n;
    }
    double cpu_per_evaluation() const { return evaluations ? eval_cpu_seconds / double(evaluations) : 0; }
};

/**
 * Savings construction: one route per customer, then repeated passes over the
 * savings list (largest first) merging the route ending at i with the route
 * starting at j whenever the merged route evaluates feasible.
 */
inline Solution savings_solve(const Instance& inst, const Options& options = {}) {
    const double started = detail::cpu_now();
    const auto wall_start = std::chrono::steady_clock::now();
    Solution sol;
    PreloadCache cache;
    PreloadCache* cache_ptr = options.evaluator == Evaluator::ddd_pl ? &cache : nullptr;
    std::map<std::vector<std::size_t>, Evaluation> memo;

    auto out_of_time = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count() >
               options.time_limit;
    };
    auto evaluate = [&](const std::vector<std::size_t>& seq) -> const Evaluation& {
        auto it = memo.find(seq);
        if (it != memo.end()) return it->second;
        Evaluation ev = evaluate_route(seq, inst, cache_ptr, options.eps);
        ++sol.evaluations;
        sol.eval_cpu_seconds += ev.cpu_seconds;
        sol.stats.merge(ev.stats);
        return memo.emplace(seq, std::move(ev)).first->second;
    };

    const std::size_t n = inst.customers.size();
    std::vector<std::optional<Evaluation>> routes;
    for (std::size_t c = 0; c < n; ++c) {
        routes.push_back(evaluate({c}));
        sol.feasible = sol.feasible && routes.back()->feasible;
    }

    struct Saving {
        double value;
        std::size_t i, j;
    };
    std::vector<Saving> list;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const auto li = inst.customers[i].location, lj = inst.customers[j].location;
            list.push_back({inst.free_distance(li, 0) + inst.free_distance(0, lj) - inst.free_distance(li, lj), i, j});
        }
    std::stable_sort(list.begin(), list.end(), [](const Saving& a, const Saving& b) { return a.value > b.value; });

    // route index of each customer; only merge routes that are feasible on their own
    std::vector<std::size_t> owner(n);
    for (std::size_t c = 0; c < n; ++c) owner[c] = c;
    for (bool merged = true; merged && !sol.terminated;) {
        merged = false;
        for (const auto& s : list) {
            const std::size_t a = owner[s.i], b = owner[s.j];
            if (a == b || !routes[a] || !routes[b] || !routes[a]->feasible || !routes[b]->feasible) continue;
            const auto& ra = routes[a]->route.customers;
            const auto& rb = routes[b]->route.customers;
            if (ra.back() != s.i || rb.front() != s.j) continue;
            double load = 0;
            for (auto c : ra) load += inst.customers[c].demand;
            for (auto c : rb) load += inst.customers[c].demand;
            if (load > inst.vehicle_capacity + 1e-9) continue;
            if (out_of_time()) {
                sol.terminated = true;
                break;
            }
            std::vector<std::size_t> seq = ra;
            seq.insert(seq.end(), rb.begin(), rb.end());
            const Evaluation& ev = evaluate(seq);
            if (!ev.feasible) continue;
            for (auto c : rb) owner[c] = a;
            routes[a] = ev;
            routes[b].reset();
            merged = true;
        }
    }
    for (auto& r : routes)
        if (r) sol.routes.push_back(std::move(*r));
    sol.cpu_seconds = detail::cpu_now() - started;
    return sol;
}

// ---------------------------------------------------------------- reporting

struct ReportRow {
    std::string instance;
    std::string family;
    std::string solver;
    std::string charging;
    double cpu = 0;
    double cpu_per_evaluation = 0;
    double vehicles = 0;
    double completion = 0;
    double replenishments = 0;
    double routes_with_replenishment = 0;
    /// 0/1 per instance; the number of terminated runs on aggregate rows.
    double terminated = 0;
};

/// Solomon family of an instance name: the leading letters plus the first digit ("c104" -> "C1").
inline std::string family_of(std::string_view name) {
    std::string out;
    std::size_t k = 0;
    while (k < name.size() && std::isalpha(static_cast<unsigned char>(name[k])))
        out += char(std::toupper(static_cast<unsigned char>(name[k++])));
    if (out.empty()) return std::string(name);
    if (k < name.size() && std::isdigit(static_cast<unsigned char>(name[k]))) out += name[k];
    return out;
}

inline ReportRow make_row(const std::string& instance, const std::string& family, Evaluator evaluator,
                          Variant variant, const Solution& sol) {
    return {instance,
            family,
            std::string(to_string(evaluator)),
            std::string(instgen::to_string(variant)),
            sol.cpu_seconds,
            sol.cpu_per_evaluation(),
            double(sol.vehicles()),
            sol.total_completion(),
            double(sol.replenishments()),
            double(sol.routes_with_replenishment()),
            sol.terminated ? 1.0 : 0.0};
}

inline const char* kReportHeader =
    "Instance,Solver,Charging,Avg. CPU,CPU per Evaluation,Avg. Veh.,Avg. Compl.,Replenishments,Routes w. Repl.,"
    "Terminated";

/// Per-run rows, then one mean row per (family, solver, charging) group.
inline std::vector<ReportRow> aggregate(const std::vector<ReportRow>& rows) {
    std::map<std::tuple<std::string, std::string, std::string>, std::vector<const ReportRow*>> groups;
    std::vector<std::tuple<std::string, std::string, std::string>> order;
    for (const auto& r : rows) {
        auto key = std::make_tuple(r.family, r.solver, r.charging);
        if (!groups.count(key)) order.push_back(key);
        groups[key].push_back(&r);
    }
    std::vector<ReportRow> out;
    for (const auto& key : order) {
        const auto& g = groups[key];
        ReportRow m;
        m.instance = std::get<0>(key) + " (mean of " + std::to_string(g.size()) + ")";
        m.family = std::get<0>(key);
        m.solver = std::get<1>(key);
        m.charging = std::get<2>(key);
        for (const ReportRow* r : g) {
            m.cpu += r->cpu;
            m.cpu_per_evaluation += r->cpu_per_evaluation;
            m.vehicles += r->vehicles;
            m.completion += r->completion;
            m.replenishments += r->replenishments;
            m.routes_with_replenishment += r->routes_with_replenishment;
            m.terminated += r->terminated;
        }
        const double k = double(g.size());
        m.cpu /= k;
        m.cpu_per_evaluation /= k;
        m.vehicles /= k;
        m.completion /= k;
        m.replenishments /= k;
        m.routes_with_replenishment /= k;
        out.push_back(std::move(m));
    }
    return out;
}

inline std::string report(const std::vector<ReportRow>& rows) {
    std::ostringstream out;
    out << kReportHeader << "\n";
    auto line = [&](const ReportRow& r) {
        out << r.instance << ',' << r.solver << ',' << r.charging << ',' << std::setprecision(6) << r.cpu << ','
            << r.cpu_per_evaluation << ',' << r.vehicles << ',' << std::fixed << std::setprecision(2) << r.completion
            << std::defaultfloat << ',' << r.replenishments << ',' << r.routes_with_replenishment << ','
            << r.terminated << "\n";
    };
    for (const auto& r : rows) line(r);
    for (const auto& r : aggregate(rows)) line(r);
    return out.str();
}

/// Reads the per-run rows of a table written by report(); mean rows are dropped.
inline std::vector<ReportRow> parse_report(std::string_view text) {
    std::vector<ReportRow> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line == kReportHeader) continue;
        std::vector<std::string> f;
        std::istringstream fields(line);
        for (std::string cell; std::getline(fields, cell, ',');) f.push_back(cell);
        if (f.size() != 10) throw std::invalid_argument("report line " + std::to_string(number) + ": expected 10 fields");
        if (f[0].find(" (mean of ") != std::string::npos) continue;
        auto num = [&](std::size_t k) {
            try {
                return std::stod(f[k]);
            } catch (const std::exception&) {
                throw std::invalid_argument("report line " + std::to_string(number) + ": bad number '" + f[k] + "'");
            }
        };
        rows.push_back({f[0], family_of(f[0]), f[1], f[2], num(3), num(4), num(5), num(6), num(7), num(8), num(9)});
    }
    return rows;
}

} // namespace tdsched::savings
