#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <vector>

#include "tdsched/ddd.hpp"

namespace tdsched {

struct ReplenishmentOptions {
    /// Overwrite predecessors of zero labels unconditionally, exactly as written
    /// in the original label-setting rule. The default keeps an existing
    /// predecessor whose label is already zero.
    bool strict_overwrite = false;
};

/// Per-activity solver behaviour derived from the replenishment modes.
struct ReplenishmentRule {
    /// A replenishment may follow the activity (t* is finite).
    bool allow = false;
    /// Arcs without replenishment are dropped and the successor chain of
    /// add_recursive stops here.
    bool require = false;
};

/// A replenishing arc from a permanent vertex into the next activity.
struct ReplenishmentArc {
    Vertex from;
    Vertex to;
    bool replenished = false;
    Tick earliest_after_replenishment = kInfinity;
};

namespace replen {

inline std::vector<ReplenishmentRule> apply_restrictions(const Problem& p) {
    std::vector<ReplenishmentRule> rules(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        rules[i].allow = p[i].may_replenish() && i + 1 < p.size();
        rules[i].require = p[i].must_replenish() && i + 1 < p.size();
    }
    return rules;
}

/// t*: first grid time the next activity can start after replenishing, or kInfinity when not allowed.
inline Tick earliest_after_replenishment(const Problem& p, const ReplenishmentRule& rule, std::size_t i, Tick t,
                                        Amount consumed) {
    if (!rule.allow) return kInfinity;
    const Tick ready = p[i].completion(t) + p[i].replenishment->eval(consumed);
    return std::max(ceil_to_grid(ready, p.eps), p[i + 1].earliest);
}

/**
 * Label setting with replenishments on a partially expanded network. When a
 * vertex (i,t) becomes permanent, t* is computed from theta_i(t) and the
 * replenishment duration at the accumulated consumption; (i+1,t*) is added to
 * the network, successors before t* inherit the accumulated consumption and
 * successors from t* on restart at zero. Vertices that appear mid-run are
 * labelled from the already permanent vertices of the previous activity.
 */
inline PathResult solve_restricted(TimeExpandedNetwork& net, const Problem& p, const ReplenishmentOptions& options = {},
                                   SolverStats* stats = nullptr) {
    using namespace detail;
    const std::size_t n = p.size();
    PathResult none;
    if (n == 0) return none;
    const auto bound = ten::static_lower_bounds(p);
    const auto rules = apply_restrictions(p);

    std::vector<LabelLayer> labels(n);
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& [t, q] : net.layer(i)) labels[i].emplace(t, initial_label(i));

    SelectionQueue queue;
    auto push = [&](std::size_t i, Tick t) { queue.push({p[i].completion(t) + bound[i], i, t}); };
    for (const auto& [t, q] : net.layer(0)) push(0, t);

    // An arc (i,s) -> (i+1,t) as it would have been relaxed when (i,s) became permanent.
    auto arc = [&](std::size_t i, Tick s, const Label& from, Tick t) -> std::optional<Label> {
        if (p[i].completion(s) > t) return std::nullopt;
        Label via;
        via.pred = s;
        if (t >= from.earliest_replenished) {
            via.ell = 0;
            via.replenished = rules[i].require || options.strict_overwrite || from.ell + from.q_used > 0;
            return via;
        }
        if (rules[i].require) return std::nullopt;
        via.ell = from.ell + from.q_used;
        return via;
    };

    auto adopt = [&](const std::vector<Vertex>& inserted) {
        for (const Vertex& v : inserted) {
            auto [it, fresh] = labels[v.activity].emplace(v.time, initial_label(v.activity));
            if (!fresh || v.activity == 0) continue;
            Label& lab = it->second;
            for (const auto& [s, from] : labels[v.activity - 1]) {
                if (!from.permanent) continue;
                auto via = arc(v.activity - 1, s, from, v.time);
                if (via && via->ell < lab.ell) lab = *via;
            }
            if (lab.ell != kUnreached) push(v.activity, v.time);
        }
    };

    std::optional<SelectionKey> last_key;
    while (!queue.empty()) {
        const SelectionKey key = queue.top();
        queue.pop();
        const std::size_t i = key.activity;
        Label& lab = labels[i].at(key.time);
        const Amount q = net.q({i, key.time});
        if (lab.permanent || !fits(lab.ell, q, p.capacity)) continue;
        if (last_key && key < *last_key && stats) stats->keys_monotone = false;
        last_key = key;

        lab.permanent = true;
        lab.q_used = q;
        if (stats) ++stats->labels_settled;
        if (i + 1 == n) return reconstruct(p, labels, {i, key.time});

        const Amount out = lab.ell + q;
        const Tick ready = p[i].completion(key.time);
        const Tick t_star = earliest_after_replenishment(p, rules[i], i, key.time, out);
        lab.earliest_replenished = t_star;
        if (t_star <= p[i + 1].latest) adopt(ddd::add_recursive(net, p, {i + 1, t_star}, stats));

        const Label from = labels[i].at(key.time);
        auto& next = labels[i + 1];
        for (auto it = next.lower_bound(ready); it != next.end(); ++it) {
            Label& succ = it->second;
            if (succ.permanent) continue;
            auto via = arc(i, key.time, from, it->first);
            if (!via) continue;
            bool take = via->ell < succ.ell;
            // a zero label reached by replenishing replaces a positive label or a missing predecessor
            if (via->replenished && !take)
                take = options.strict_overwrite || succ.ell > 0 || !succ.pred;
            if (!take) continue;
            succ = *via;
            push(i + 1, it->first);
        }
    }
    return none;
}

/// DDD with the replenishment-aware restricted solver.
inline SolveResult solve_ddd_replen(const Problem& p, const DddOptions& options = {},
                                    const ReplenishmentOptions& repl = {}, std::span<const Vertex> warm_start = {}) {
    const auto started = std::chrono::steady_clock::now();
    SolveResult result;
    if (p.size() == 0) return result;
    TimeExpandedNetwork net = ddd::initialise(p, &result.stats);
    if (!warm_start.empty()) ddd::preload(net, p, warm_start, &result.stats);
    result = ddd::refine_loop(
        net, p, options, [&](TimeExpandedNetwork& n, SolverStats& s) { return solve_restricted(n, p, repl, &s); },
        std::move(result));
    result.stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

/// The oracle: replenishment-aware label setting on the fully expanded network.
inline SolveResult solve_full(const Problem& p, const ReplenishmentOptions& repl = {}) {
    SolveResult result;
    TimeExpandedNetwork net = ten::full_expand(p);
    result.stats.vertices_created = net.vertex_count();
    PathResult r = solve_restricted(net, p, repl, &result.stats);
    result.schedule = std::move(r.schedule);
    result.path = std::move(r.path);
    return result;
}

} // namespace replen
} // namespace tdsched
