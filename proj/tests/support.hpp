#pragma once

// Shared fixtures and brute-force oracles. The oracles only use the model
// (PWL evaluation and the constraint definitions), never the solvers.

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "tdsched/model.hpp"
#include "tdsched/ten.hpp"

namespace tdsched::testing {

inline Tick u(double units) { return to_ticks(units); }

inline PwlFunction constant(double v) { return PwlFunction::constant(u(v)); }

inline PwlFunction pwl(std::initializer_list<std::pair<double, double>> pts) {
    std::vector<Breakpoint<Tick>> out;
    for (auto [t, v] : pts) out.push_back({u(t), u(v)});
    return PwlFunction(std::move(out));
}

inline Activity activity(double e, double l, PwlFunction tau, PwlFunction rho,
                         std::optional<PwlFunction> delta = std::nullopt) {
    Activity a;
    a.earliest = u(e);
    a.latest = u(l);
    a.duration = std::move(tau);
    a.consumption = std::move(rho);
    a.mode = default_mode(delta.has_value());
    a.replenishment = std::move(delta);
    return a;
}

/// n=2, eps=1, Q=4. A1: [0,4], tau=2, rho=5 before 2 and 1 from 2. A2: [2,6], tau=1, rho=1.
inline Problem drop_pair(double capacity = 4) {
    Problem p;
    p.capacity = u(capacity);
    p.activities.push_back(activity(0, 4, constant(2), pwl({{0, 5}, {2, 5}, {2, 1}, {4, 1}})));
    p.activities.push_back(activity(2, 6, constant(1), constant(1)));
    return p;
}

/// n=2, Q=4, rho=3 each, Delta=2, tau1=2, tau2=1, windows [0,4], [2,8].
inline Problem refill_pair(double capacity = 4, double delta = 2) {
    Problem p;
    p.capacity = u(capacity);
    p.activities.push_back(activity(0, 4, constant(2), constant(3), constant(delta)));
    p.activities.push_back(activity(2, 8, constant(1), constant(3), constant(delta)));
    return p;
}

/// Minimum completion over all network paths with theta_i(t_i) <= t_{i+1} and sum q <= Q.
inline std::optional<Tick> brute_force_paths(const TimeExpandedNetwork& net, const Problem& p) {
    std::optional<Tick> best;
    std::function<void(std::size_t, Tick, Amount)> dfs = [&](std::size_t i, Tick ready, Amount used) {
        for (const auto& [t, q] : net.layer(i)) {
            if (t < ready || used + q > p.capacity) continue;
            if (i + 1 == p.size()) {
                const Tick c = p[i].completion(t);
                if (!best || c < *best) best = c;
            } else {
                dfs(i + 1, p[i].completion(t), used + q);
            }
        }
    };
    if (p.size() > 0) dfs(0, std::numeric_limits<Tick>::min(), 0);
    return best;
}

/**
 * Minimum completion over every grid start-time vector and every replenishment
 * vector allowed by the modes, checked against the TDASPR constraints directly.
 */
inline std::optional<Tick> brute_force_tdaspr(const Problem& p) {
    std::optional<Tick> best;
    const std::size_t n = p.size();
    std::function<void(std::size_t, Tick, Amount)> dfs = [&](std::size_t i, Tick ready, Amount carried) {
        const auto& a = p[i];
        for (Tick t = ceil_to_grid(a.earliest, p.eps); t <= a.latest; t += p.eps) {
            if (t < ready) continue;
            const Amount used = carried + a.consumption(t);
            if (used > p.capacity) continue;
            if (i + 1 == n) {
                const Tick c = a.completion(t);
                if (!best || c < *best) best = c;
                continue;
            }
            const bool can_skip = !a.must_replenish();
            const bool can_replenish = a.may_replenish();
            if (can_skip) dfs(i + 1, a.completion(t), used);
            if (can_replenish) dfs(i + 1, a.completion(t) + a.replenishment->eval(used), 0);
        }
    };
    if (n > 0) dfs(0, std::numeric_limits<Tick>::min(), 0);
    return best;
}

} // namespace tdsched::testing
