#pragma once

#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tdsched/pwl.hpp"

namespace tdsched {

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ReplenishmentMode { optional, forbidden, required };

inline std::string_view to_string(ReplenishmentMode mode) {
    switch (mode) {
    case ReplenishmentMode::optional: return "optional";
    case ReplenishmentMode::forbidden: return "forbidden";
    case ReplenishmentMode::required: return "required";
    }
    return "optional";
}

inline ReplenishmentMode parse_mode(std::string_view text) {
    if (text == "optional") return ReplenishmentMode::optional;
    if (text == "forbidden") return ReplenishmentMode::forbidden;
    if (text == "required") return ReplenishmentMode::required;
    throw ModelError("unknown replenishment mode: " + std::string(text));
}

/// One activity of the fixed sequence. Times and amounts are in ticks.
struct Activity {
    Tick earliest = 0;
    Tick latest = 0;
    PwlFunction duration;
    PwlFunction consumption;
    /// Replenishment duration as a function of the consumption accumulated since
    /// the last replenishment. Absent means no replenishment is possible.
    std::optional<PwlFunction> replenishment;
    ReplenishmentMode mode = ReplenishmentMode::forbidden;

    Tick completion(Tick start) const { return start + duration(start); }

    bool may_replenish() const { return replenishment.has_value() && mode != ReplenishmentMode::forbidden; }
    bool must_replenish() const { return replenishment.has_value() && mode == ReplenishmentMode::required; }
};

inline ReplenishmentMode default_mode(bool has_replenishment) {
    return has_replenishment ? ReplenishmentMode::optional : ReplenishmentMode::forbidden;
}

struct Problem {
    std::vector<Activity> activities;
    Amount capacity = 0;
    Tick eps = kTicksPerUnit;

    std::size_t size() const noexcept { return activities.size(); }
    const Activity& operator[](std::size_t i) const { return activities[i]; }
    Activity& operator[](std::size_t i) { return activities[i]; }
};

struct Schedule {
    std::vector<Tick> start;
    std::vector<bool> replenish;
    /// Consumption accumulated since the last replenishment, after each activity.
    std::vector<Amount> cumulative;
    Tick completion = 0;

    std::size_t replenishment_count() const {
        std::size_t n = 0;
        for (bool y : replenish) n += y ? 1 : 0;
        return n;
    }
};

/// Checks the structural invariants of a problem; throws ModelError.
inline void check_problem(const Problem& p) {
    if (p.eps <= 0) throw ModelError("eps must be positive");
    if (p.capacity < 0) throw ModelError("capacity must be non-negative");
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& a = p[i];
        const auto where = " (activity " + std::to_string(i + 1) + ")";
        if (a.earliest > a.latest) throw ModelError("empty time window" + where);
        if (!check_fifo(a.duration, a.earliest, a.latest)) throw ModelError("duration violates FIFO" + where);
        if (a.replenishment) {
            const auto& pts = a.replenishment->breakpoints();
            for (std::size_t k = 1; k < pts.size(); ++k)
                if (pts[k].value < pts[k - 1].value)
                    throw ModelError("replenishment duration must be non-decreasing" + where);
        } else if (a.mode == ReplenishmentMode::required) {
            throw ModelError("required replenishment without a duration function" + where);
        }
    }
}

/**
 * Rounds windows onto the eps grid and propagates them through the sequence:
 * a forward pass raises e_{i+1} to cover theta_i(e_i), a backward pass lowers
 * l_i until theta_i(l_i) <= l_{i+1}. Returns nullopt when a window empties.
 */
inline std::optional<Problem> tighten_windows(Problem problem) {
    const Tick eps = problem.eps;
    auto& acts = problem.activities;
    for (auto& a : acts) {
        a.earliest = ceil_to_grid(a.earliest, eps);
        a.latest = floor_to_grid(a.latest, eps);
        if (a.earliest > a.latest) return std::nullopt;
    }
    for (std::size_t i = 0; i + 1 < acts.size(); ++i) {
        const Tick reach = ceil_to_grid(acts[i].completion(acts[i].earliest), eps);
        acts[i + 1].earliest = std::max(acts[i + 1].earliest, reach);
        if (acts[i + 1].earliest > acts[i + 1].latest) return std::nullopt;
    }
    for (std::size_t i = acts.size(); i-- > 1;) {
        auto& a = acts[i - 1];
        const Tick bound = acts[i].latest;
        if (a.completion(a.latest) <= bound) continue;
        // theta is non-decreasing, so binary search the last grid point that fits
        Tick lo = a.earliest / eps, hi = a.latest / eps;
        if (a.completion(lo * eps) > bound) return std::nullopt;
        while (lo < hi) {
            const Tick mid = lo + (hi - lo + 1) / 2;
            if (a.completion(mid * eps) <= bound)
                lo = mid;
            else
                hi = mid - 1;
        }
        a.latest = lo * eps;
    }
    return problem;
}

/// Builds a schedule record (cumulative consumption and completion) from start times and flags.
inline Schedule make_schedule(const Problem& p, std::vector<Tick> start, std::vector<bool> replenish) {
    Schedule s;
    s.start = std::move(start);
    s.replenish = std::move(replenish);
    s.replenish.resize(s.start.size(), false);
    s.cumulative.resize(s.start.size());
    Amount running = 0;
    for (std::size_t i = 0; i < s.start.size(); ++i) {
        running += p[i].consumption(s.start[i]);
        s.cumulative[i] = running;
        if (s.replenish[i]) running = 0;
    }
    s.completion = s.start.empty() ? 0 : p[s.start.size() - 1].completion(s.start.back());
    return s;
}

/**
 * Earliest schedule on the eps grid: t_1 = e_1, t_i = max(e_i, ceil(theta_{i-1}(t_{i-1}))).
 * Optimal when every consumption function is non-decreasing; the result is
 * nullopt when the earliest schedule breaks a window or the capacity.
 */
inline std::optional<Schedule> greedy_earliest(const Problem& p) {
    if (p.size() == 0) return Schedule{};
    std::vector<Tick> start(p.size());
    Amount used = 0;
    Tick t = ceil_to_grid(p[0].earliest, p.eps);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i > 0) t = std::max(ceil_to_grid(p[i].earliest, p.eps), ceil_to_grid(p[i - 1].completion(t), p.eps));
        if (t > p[i].latest) return std::nullopt;
        used += p[i].consumption(t);
        if (used > p.capacity) return std::nullopt;
        start[i] = t;
    }
    return make_schedule(p, std::move(start), std::vector<bool>(p.size(), false));
}

struct Violation {
    std::string constraint;
    std::size_t activity = 0; // 1-based
    std::string detail;

    std::string message() const {
        return constraint + " violated at activity " + std::to_string(activity) + ": " + detail;
    }
};

/// Checks timing, windows, capacity between replenishments, and replenishment modes.
inline std::optional<Violation> validate_schedule(const Problem& p, const Schedule& s) {
    const std::size_t n = p.size();
    if (s.start.size() != n || s.replenish.size() != n)
        return Violation{"shape", 0, "schedule has " + std::to_string(s.start.size()) + " entries, expected " +
                                         std::to_string(n)};
    auto fmt = [](Tick v) {
        std::ostringstream os;
        os << to_units(v);
        return os.str();
    };
    Amount running = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = p[i];
        const Tick t = s.start[i];
        const bool y = s.replenish[i];
        if (t < a.earliest || t > a.latest)
            return Violation{"window", i + 1,
                             "start " + fmt(t) + " outside [" + fmt(a.earliest) + "," + fmt(a.latest) + "]"};
        if (y && i + 1 == n) return Violation{"replenishment", i + 1, "replenishment after the last activity"};
        if (i + 1 < n) {
            if (y && !a.may_replenish()) return Violation{"replenishment", i + 1, "replenishment not allowed"};
            if (!y && a.must_replenish()) return Violation{"replenishment", i + 1, "required replenishment missing"};
        }
        running += a.consumption(t);
        if (running > p.capacity)
            return Violation{"capacity", i + 1, "consumption " + fmt(running) + " exceeds " + fmt(p.capacity)};
        if (!s.cumulative.empty() && s.cumulative.size() == n && s.cumulative[i] != running)
            return Violation{"bookkeeping", i + 1, "recorded cumulative consumption is inconsistent"};
        if (i + 1 < n) {
            Tick ready = a.completion(t);
            if (y) ready += a.replenishment->eval(running);
            if (ready > s.start[i + 1])
                return Violation{"timing", i + 1,
                                 "ready at " + fmt(ready) + " but next activity starts at " + fmt(s.start[i + 1])};
        } else if (s.completion != a.completion(t)) {
            return Violation{"bookkeeping", i + 1, "recorded completion is inconsistent"};
        }
        if (y) running = 0;
    }
    return std::nullopt;
}

} // namespace tdsched
