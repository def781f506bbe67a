#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "tdsched/model.hpp"

namespace tdsched {

struct RandomProblemConfig {
    std::size_t min_activities = 1;
    std::size_t max_activities = 8;
    int max_horizon = 100; // units
    int max_steps = 4;
    /// Attach replenishment durations (constant or step in the consumption).
    bool replenishment = false;
    /// Draw forbidden/required/optional modes at random.
    bool random_modes = false;
    /// Non-decreasing consumption steps.
    bool monotone_consumption = false;
};

namespace detail {

inline int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Durations on a half-unit lattice with segment slopes >= -1 and upward jumps only.
inline PwlFunction random_fifo_duration(std::mt19937_64& rng, int horizon) {
    const int k = uniform(rng, 1, 4);
    std::vector<int> times;
    while (static_cast<int>(times.size()) < k) {
        int t = uniform(rng, 0, horizon);
        if (std::find(times.begin(), times.end(), t) == times.end()) times.push_back(t);
    }
    std::sort(times.begin(), times.end());
    std::vector<Breakpoint<Tick>> pts;
    int v = uniform(rng, 0, 16); // half units
    pts.push_back({times[0] * kTicksPerUnit, v * kTicksPerUnit / 2});
    for (std::size_t j = 1; j < times.size(); ++j) {
        const int dt = times[j] - times[j - 1];
        if (uniform(rng, 0, 4) == 0) {
            const int up = v + uniform(rng, 1, 6);
            pts.push_back({times[j] * kTicksPerUnit, v * kTicksPerUnit / 2});
            pts.push_back({times[j] * kTicksPerUnit, up * kTicksPerUnit / 2});
            v = up;
            continue;
        }
        const int lo = std::max(0, v - 2 * dt);
        v = uniform(rng, lo, std::max(lo, v + 8));
        pts.push_back({times[j] * kTicksPerUnit, v * kTicksPerUnit / 2});
    }
    return PwlFunction(std::move(pts));
}

inline PwlFunction random_step(std::mt19937_64& rng, int horizon, int max_steps, int max_value, bool monotone) {
    const int steps = uniform(rng, 1, max_steps);
    std::vector<int> values(steps);
    for (auto& v : values) v = uniform(rng, 0, max_value);
    if (monotone) std::sort(values.begin(), values.end());
    std::vector<int> cuts; // half units, distinct
    while (static_cast<int>(cuts.size()) < std::min(steps - 1, 2 * horizon - 1)) {
        const int c = uniform(rng, 1, 2 * horizon - 1);
        if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<Breakpoint<Tick>> pts;
    pts.push_back({0, values[0] * kTicksPerUnit});
    for (std::size_t s = 0; s < cuts.size(); ++s) {
        const Tick at = cuts[s] * kTicksPerUnit / 2;
        pts.push_back({at, values[s] * kTicksPerUnit});
        pts.push_back({at, values[s + 1] * kTicksPerUnit});
    }
    return PwlFunction(std::move(pts));
}

} // namespace detail

/// Small random problem on the unit grid; the windows follow a loosely feasible chain.
inline Problem random_problem(std::mt19937_64& rng, const RandomProblemConfig& cfg) {
    using detail::uniform;
    Problem p;
    p.eps = kTicksPerUnit;
    const int n = uniform(rng, static_cast<int>(cfg.min_activities), static_cast<int>(cfg.max_activities));
    const int horizon = uniform(rng, std::min(10, cfg.max_horizon), cfg.max_horizon);
    Tick cursor = uniform(rng, 0, horizon / 4) * kTicksPerUnit;
    Amount min_total = 0, max_total = 0, max_single = 0;
    for (int i = 0; i < n; ++i) {
        Activity a;
        a.duration = detail::random_fifo_duration(rng, horizon);
        a.consumption = detail::random_step(rng, horizon, cfg.max_steps, 10, cfg.monotone_consumption);
        const Tick h = Tick(horizon) * kTicksPerUnit;
        a.earliest = std::min(h, std::max<Tick>(0, cursor - uniform(rng, 0, 3) * kTicksPerUnit));
        a.latest = std::min(h, a.earliest + uniform(rng, 0, std::max(1, horizon / 3)) * kTicksPerUnit);
        cursor = ceil_to_grid(a.completion(a.earliest), p.eps) + uniform(rng, 0, 3) * kTicksPerUnit;
        if (cfg.replenishment) {
            if (uniform(rng, 0, 1) == 0) {
                a.replenishment = PwlFunction::constant(uniform(rng, 0, 6) * kTicksPerUnit);
            } else {
                const Tick lo = uniform(rng, 0, 4) * kTicksPerUnit;
                const Tick hi = lo + uniform(rng, 1, 5) * kTicksPerUnit;
                const Tick cut = uniform(rng, 1, 12) * kTicksPerUnit;
                a.replenishment = PwlFunction({{cut, lo}, {cut, hi}});
            }
            a.mode = ReplenishmentMode::optional;
            if (cfg.random_modes) a.mode = static_cast<ReplenishmentMode>(uniform(rng, 0, 2));
        }
        const Amount lo = a.consumption.min_on(a.earliest, a.latest);
        const Amount hi = a.consumption.max_on(a.earliest, a.latest);
        min_total += lo;
        max_total += hi;
        max_single = std::max(max_single, hi);
        p.activities.push_back(std::move(a));
    }
    if (cfg.replenishment) {
        p.capacity = max_single + uniform(rng, 0, 100) * std::max<Amount>(0, max_total / 2 - max_single) / 100;
    } else {
        p.capacity = min_total + uniform(rng, 0, 100) * (max_total - min_total) / 100;
    }
    p.capacity = floor_to_grid(p.capacity, kTicksPerUnit);
    return p;
}

} // namespace tdsched
