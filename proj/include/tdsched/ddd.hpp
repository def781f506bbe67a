#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdsched/ten.hpp"

namespace tdsched {

/// A solver answer together with the path it came from and run statistics.
struct SolveResult {
    std::optional<Schedule> schedule;
    std::vector<Vertex> path;
    SolverStats stats;

    bool feasible() const { return schedule.has_value(); }
};

struct DddOptions {
    /// Refine every violated path vertex per iteration instead of only the first.
    bool refine_all = false;
    /// Re-check the network invariants after every refinement (slow).
    bool audit = false;
};

namespace ddd {

/// Consumption bound of (i,t) given the next vertex time of the same activity.
inline Amount consumption_bound(const Problem& p, std::size_t i, Tick t, std::optional<Tick> next) {
    const auto& a = p[i];
    if (t == a.latest) return a.consumption(t);
    return min_over_grid(a.consumption, t, next.value_or(a.latest + p.eps), p.eps);
}

/**
 * Inserts (i,t), sets its q and the q of its predecessor in time, then adds the
 * earliest reachable vertex of activity i+1. The chain stops at an existing
 * vertex, at the last activity, or after an activity that must replenish.
 * Returns the vertices actually inserted.
 */
inline std::vector<Vertex> add_recursive(TimeExpandedNetwork& net, const Problem& p, Vertex v,
                                         SolverStats* stats = nullptr) {
    std::vector<Vertex> inserted;
    for (;;) {
        const auto& a = p[v.activity];
        if (v.time < a.earliest || v.time > a.latest || v.time % p.eps != 0)
            throw std::invalid_argument("add_recursive: vertex (" + std::to_string(v.activity + 1) + "," +
                                        std::to_string(v.time) + ") outside window or off grid");
        if (stats) ++stats->add_recursive_calls;
        if (net.contains(v)) break;

        const auto& layer = net.layer(v.activity);
        auto after = layer.upper_bound(v.time);
        std::optional<Tick> next;
        if (after != layer.end()) next = after->first;
        net.insert(v, consumption_bound(p, v.activity, v.time, next));
        inserted.push_back(v);
        if (stats) ++stats->vertices_created;

        auto here = net.layer(v.activity).find(v.time);
        if (v.time > a.earliest && here != net.layer(v.activity).begin()) {
            const Tick prev = std::prev(here)->first;
            net.set_q({v.activity, prev}, min_over_grid(a.consumption, prev, v.time, p.eps));
        }

        if (v.activity + 1 == p.size() || a.must_replenish()) break;
        const auto& b = p[v.activity + 1];
        const Tick reach = std::max(b.earliest, ceil_to_grid(a.completion(v.time), p.eps));
        if (reach > b.latest) break;
        v = {v.activity + 1, reach};
    }
    return inserted;
}

/// Adds (i,l_i) and (i,e_i) for i = n..1, each through add_recursive.
inline TimeExpandedNetwork initialise(const Problem& p, SolverStats* stats = nullptr) {
    TimeExpandedNetwork net(p.size());
    for (std::size_t i = p.size(); i-- > 0;) {
        add_recursive(net, p, {i, p[i].latest}, stats);
        add_recursive(net, p, {i, p[i].earliest}, stats);
    }
    return net;
}

/**
 * Seeds a network with a previous solution path: each in-window path vertex
 * and its grid successor are added, so the path vertices carry exact
 * consumption values. Returns the number of vertices inserted.
 */
inline std::size_t preload(TimeExpandedNetwork& net, const Problem& p, std::span<const Vertex> path,
                           SolverStats* stats = nullptr) {
    std::size_t added = 0;
    auto try_add = [&](Vertex v) {
        if (v.activity >= p.size()) return;
        const auto& a = p[v.activity];
        if (v.time < a.earliest || v.time > a.latest || v.time % p.eps != 0) return;
        added += add_recursive(net, p, v, stats).size();
    };
    for (const Vertex& v : path) {
        try_add(v);
        try_add({v.activity, v.time + p.eps});
    }
    if (stats) stats->vertices_preloaded += added;
    return added;
}

/// Returns a description of the first broken network invariant, or an empty string.
inline std::string audit(const TimeExpandedNetwork& net, const Problem& p) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& a = p[i];
        const auto& layer = net.layer(i);
        const std::string at = " at activity " + std::to_string(i + 1);
        if (!layer.contains(a.earliest) || !layer.contains(a.latest)) return "missing window boundary" + at;
        for (auto it = layer.begin(); it != layer.end(); ++it) {
            const auto [t, q] = *it;
            if (t < a.earliest || t > a.latest || t % p.eps != 0) return "vertex outside window or off grid" + at;
            auto nx = std::next(it);
            const Amount want = (t == a.latest) ? a.consumption(t) : min_over_grid(a.consumption, t, nx->first, p.eps);
            if (q != want) return "stale consumption bound at t=" + std::to_string(t) + at;
            if (i + 1 < p.size() && !a.must_replenish()) {
                const auto& b = p[i + 1];
                const Tick s = ceil_to_grid(a.completion(t), p.eps);
                if (s > b.earliest && s < b.latest && !net.contains({i + 1, s}))
                    return "missing successor of t=" + std::to_string(t) + at;
            }
        }
    }
    return {};
}

/// Bisects towards t_i until the grid minimum over [t_i, t) exceeds q_(i,t_i), then adds (i,t).
inline void refine(TimeExpandedNetwork& net, const Problem& p, Vertex v, SolverStats* stats = nullptr) {
    const auto& layer = net.layer(v.activity);
    auto after = layer.upper_bound(v.time);
    if (after == layer.end()) throw std::logic_error("refine: vertex has no successor in time");
    const Amount q = net.q(v);
    const auto& rho = p[v.activity].consumption;
    Tick t = after->first;
    do {
        t = p.eps * detail::ceil_div(v.time + t, 2 * p.eps);
    } while (!(min_over_grid(rho, v.time, t, p.eps) > q));
    add_recursive(net, p, {v.activity, t}, stats);
}

/**
 * Refinement loop shared by the plain and the replenishment variant: solve the
 * restricted problem, stop when every path vertex was evaluated with its exact
 * consumption, otherwise refine the earliest offending vertex and repeat.
 */
template <typename RestrictedSolver>
SolveResult refine_loop(TimeExpandedNetwork& net, const Problem& p, const DddOptions& options,
                        RestrictedSolver&& restricted, SolveResult result = {}) {
    for (;;) {
        ++result.stats.iterations;
        const std::size_t before = net.vertex_count();
        PathResult r = restricted(net, result.stats);
        if (!r.schedule) return result;
        result.stats.iteration_completions.push_back(r.schedule->completion);

        bool certified = true;
        bool refined = false;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const Vertex v = r.path[i];
            const Amount exact = p[i].consumption(v.time);
            if (exact <= r.q_used[i]) continue;
            certified = false;
            // the bound may already have been raised while the restricted solve grew the network
            if (exact <= net.q(v)) continue;
            refine(net, p, v, &result.stats);
            refined = true;
            if (!options.refine_all) break;
        }
        if (certified) {
            result.schedule = std::move(r.schedule);
            result.path = std::move(r.path);
            return result;
        }
        if (options.audit) {
            if (auto msg = audit(net, p); !msg.empty()) throw std::logic_error("ddd audit: " + msg);
        }
        if (!refined && net.vertex_count() == before) throw std::logic_error("ddd: refinement made no progress");
    }
}

/// Dynamic discretization discovery for problems without replenishment.
inline SolveResult solve(const Problem& p, const DddOptions& options = {}, std::span<const Vertex> warm_start = {}) {
    const auto started = std::chrono::steady_clock::now();
    SolveResult result;
    if (p.size() == 0) return result;
    TimeExpandedNetwork net = initialise(p, &result.stats);
    if (!warm_start.empty()) preload(net, p, warm_start, &result.stats);
    result = refine_loop(net, p, options,
                         [&](TimeExpandedNetwork& n, SolverStats& s) { return ten::solve(n, p, &s); },
                         std::move(result));
    result.stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

} // namespace ddd
} // namespace tdsched
