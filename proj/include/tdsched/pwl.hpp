#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace tdsched {

/// Integer time (and amount) resolution. One model unit is 1000 ticks.
using Tick = std::int64_t;
using Amount = std::int64_t;

inline constexpr std::int64_t kTicksPerUnit = 1000;
inline constexpr Tick kInfinity = std::numeric_limits<Tick>::max() / 4;

inline Tick to_ticks(double units) { return static_cast<Tick>(std::llround(units * kTicksPerUnit)); }
inline double to_units(Tick ticks) { return static_cast<double>(ticks) / kTicksPerUnit; }

class DomainError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

namespace detail {

template <std::integral T>
constexpr T floor_div(T num, T den) {
    T q = num / den;
    if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
    return q;
}

template <std::integral T>
constexpr T ceil_div(T num, T den) {
    return -floor_div<T>(-num, den);
}

// Interpolated value at t strictly inside (t0, t1). Integral values are floored
// so t + f(t) stays non-decreasing whenever the exact segment slope is >= -1.
template <typename T>
T interpolate(T t0, T v0, T t1, T v1, T t) {
    if constexpr (std::is_integral_v<T>) {
        const __int128 num = static_cast<__int128>(v1 - v0) * static_cast<__int128>(t - t0);
        const __int128 den = static_cast<__int128>(t1 - t0);
        __int128 q = num / den;
        if ((num % den != 0) && (num < 0)) --q;
        return v0 + static_cast<T>(q);
    } else {
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
    }
}

template <typename T>
T grid_floor(T origin, T t, T step) {
    if constexpr (std::is_integral_v<T>)
        return origin + step * floor_div<T>(t - origin, step);
    else
        return origin + step * std::floor((t - origin) / step);
}

template <typename T>
T grid_ceil(T origin, T t, T step) {
    if constexpr (std::is_integral_v<T>)
        return origin + step * ceil_div<T>(t - origin, step);
    else
        return origin + step * std::ceil((t - origin) / step);
}

} // namespace detail

/// Smallest multiple of eps that is >= t.
inline Tick ceil_to_grid(Tick t, Tick eps) { return eps * detail::ceil_div(t, eps); }
/// Largest multiple of eps that is <= t.
inline Tick floor_to_grid(Tick t, Tick eps) { return eps * detail::floor_div(t, eps); }

template <typename T>
struct Breakpoint {
    T time{};
    T value{};
    friend bool operator==(const Breakpoint&, const Breakpoint&) = default;
};

/**
 * Non-negative, lower semi-continuous piecewise-linear function.
 *
 * Breakpoints are ordered by time. A discontinuity at time s is written as two
 * consecutive breakpoints with time s: the first holds the left limit, the
 * second the right limit. The value at s is the smaller of the two. Outside
 * the breakpoint range the function is constant (when extrapolation is on) or
 * undefined.
 */
template <typename T>
class BasicPwl {
public:
    using value_type = T;
    using point_type = Breakpoint<T>;

    BasicPwl() : points_{{T{}, T{}}} {}

    explicit BasicPwl(std::vector<point_type> points, bool extrapolate = true)
        : points_(std::move(points)), extrapolate_(extrapolate) {
        if (points_.empty()) throw std::invalid_argument("pwl: no breakpoints");
        for (std::size_t k = 0; k < points_.size(); ++k) {
            const auto& p = points_[k];
            if constexpr (std::is_floating_point_v<T>) {
                if (!std::isfinite(p.time) || !std::isfinite(p.value))
                    throw std::invalid_argument("pwl: non-finite breakpoint");
            }
            if (p.value < T{}) throw std::invalid_argument("pwl: negative value");
            if (k > 0 && p.time < points_[k - 1].time)
                throw std::invalid_argument("pwl: breakpoint times must be ordered");
            if (k > 1 && p.time == points_[k - 2].time)
                throw std::invalid_argument("pwl: at most two breakpoints may share a time");
        }
    }

    static BasicPwl constant(T value) { return BasicPwl({{T{}, value}}); }

    static BasicPwl line(point_type a, point_type b) { return BasicPwl({a, b}); }

    const std::vector<point_type>& breakpoints() const noexcept { return points_; }
    bool extrapolates() const noexcept { return extrapolate_; }
    T front_time() const noexcept { return points_.front().time; }
    T back_time() const noexcept { return points_.back().time; }

    bool is_constant() const noexcept {
        return std::all_of(points_.begin(), points_.end(),
                           [&](const point_type& p) { return p.value == points_.front().value; });
    }

    T operator()(T t) const { return eval(t); }

    T eval(T t) const {
        if (t < points_.front().time) {
            if (!extrapolate_) throw DomainError("pwl: evaluation before domain");
            return points_.front().value;
        }
        if (t > points_.back().time) {
            if (!extrapolate_) throw DomainError("pwl: evaluation after domain");
            return points_.back().value;
        }
        // first breakpoint with time > t; the one before has time <= t
        auto it = std::upper_bound(points_.begin(), points_.end(), t,
                                   [](T value, const point_type& p) { return value < p.time; });
        const auto& prev = *std::prev(it);
        if (prev.time == t) {
            auto before = std::prev(it);
            if (before != points_.begin() && std::prev(before)->time == t)
                return std::min(std::prev(before)->value, prev.value);
            return prev.value;
        }
        return detail::interpolate(prev.time, prev.value, it->time, it->value, t);
    }

    /// Exact minimum over the continuous interval [a, b].
    T min_on(T a, T b) const {
        T best = std::min(eval(a), eval(b));
        for (const auto& p : points_)
            if (p.time > a && p.time < b) best = std::min(best, eval(p.time));
        return best;
    }

    /// Exact maximum over the continuous interval [a, b] (upper one-sided limits included).
    T max_on(T a, T b) const {
        T best = std::max(eval(a), eval(b));
        for (const auto& p : points_)
            if (p.time > a && p.time < b) best = std::max(best, p.value);
        return best;
    }

    friend bool operator==(const BasicPwl&, const BasicPwl&) = default;

private:
    std::vector<point_type> points_;
    bool extrapolate_ = true;
};

using PwlFunction = BasicPwl<Tick>;
using RealPwl = BasicPwl<double>;

/// True iff t -> t + tau(t) is non-decreasing on [e, l].
template <typename T>
bool check_fifo(const BasicPwl<T>& tau, T e, T l) {
    const auto& pts = tau.breakpoints();
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const auto& a = pts[k];
        const auto& b = pts[k + 1];
        if (a.time == b.time) {
            // jump: theta must not drop, which needs left <= right
            if (a.time > e && a.time <= l && a.value > b.value) return false;
            continue;
        }
        if (b.time <= e || a.time >= l) continue;
        if (b.value - a.value < -(b.time - a.time)) return false;
    }
    return true;
}

/// Minimum of f over the grid {from, from+eps, ..., last < to}.
template <typename T>
T min_over_grid(const BasicPwl<T>& f, T from, T to_exclusive, T eps) {
    if (!(from < to_exclusive)) throw std::invalid_argument("min_over_grid: empty grid");
    if (!(eps > T{})) throw std::invalid_argument("min_over_grid: eps must be positive");
    const T last = detail::grid_ceil(from, to_exclusive, eps) - eps;
    // f is monotone between breakpoints, so per segment only the outermost
    // grid points can hold the minimum.
    T best = std::min(f.eval(from), f.eval(last));
    for (const auto& p : f.breakpoints()) {
        if (p.time < from || p.time > last) continue;
        const T lo = detail::grid_floor(from, p.time, eps);
        const T hi = detail::grid_ceil(from, p.time, eps);
        best = std::min(best, f.eval(lo));
        if (hi <= last) best = std::min(best, f.eval(hi));
    }
    return best;
}

template <typename T>
struct Sample {
    T time{};
    T value{};
};

/// Largest absolute deviation of f from the samples.
template <typename T>
T max_deviation(const BasicPwl<T>& f, std::span<const Sample<T>> samples) {
    T worst{};
    for (const auto& s : samples) {
        const T v = f.eval(s.time);
        worst = std::max(worst, v > s.value ? v - s.value : s.value - v);
    }
    return worst;
}

/**
 * Greedy max-deviation (Douglas-Peucker style) fit through a subset of samples.
 * Starts from the two end samples and keeps inserting the worst-fit sample
 * until every sample is within `tolerance` or the breakpoint budget is spent.
 * A negative tolerance selects the default of 1% of the sample value range.
 */
template <typename T>
BasicPwl<T> fit_pwl(std::span<const Sample<T>> samples, std::size_t max_breakpoints, T tolerance = T(-1)) {
    if (samples.size() < 2) throw std::invalid_argument("fit_pwl: need at least two samples");
    for (std::size_t k = 1; k < samples.size(); ++k)
        if (!(samples[k - 1].time < samples[k].time))
            throw std::invalid_argument("fit_pwl: sample times must be strictly increasing");
    max_breakpoints = std::max<std::size_t>(max_breakpoints, 2);
    if (tolerance < T{}) {
        auto [lo, hi] = std::minmax_element(samples.begin(), samples.end(),
                                            [](const auto& a, const auto& b) { return a.value < b.value; });
        tolerance = (hi->value - lo->value) / T(100);
    }

    std::vector<std::size_t> chosen{0, samples.size() - 1};
    auto build = [&] {
        std::vector<Breakpoint<T>> pts;
        pts.reserve(chosen.size());
        for (auto idx : chosen) pts.push_back({samples[idx].time, samples[idx].value});
        return BasicPwl<T>(std::move(pts));
    };

    BasicPwl<T> f = build();
    while (chosen.size() < max_breakpoints) {
        std::size_t worst_idx = 0;
        T worst{};
        for (std::size_t k = 0; k < samples.size(); ++k) {
            const T v = f.eval(samples[k].time);
            const T dev = v > samples[k].value ? v - samples[k].value : samples[k].value - v;
            if (dev > worst) {
                worst = dev;
                worst_idx = k;
            }
        }
        if (worst <= tolerance) break;
        chosen.insert(std::upper_bound(chosen.begin(), chosen.end(), worst_idx), worst_idx);
        f = build();
    }

    // Exchange pass: slide each interior breakpoint between its neighbours while
    // the worse of its two adjacent segments improves.
    auto segment_error = [&](std::size_t a, std::size_t b) {
        const BasicPwl<T> seg({{samples[a].time, samples[a].value}, {samples[b].time, samples[b].value}});
        T worst{};
        for (std::size_t k = a + 1; k < b; ++k) {
            const T v = seg.eval(samples[k].time);
            worst = std::max(worst, v > samples[k].value ? v - samples[k].value : samples[k].value - v);
        }
        return worst;
    };
    for (bool moved = true; moved;) {
        moved = false;
        for (std::size_t j = 1; j + 1 < chosen.size(); ++j) {
            const std::size_t lo = chosen[j - 1], hi = chosen[j + 1];
            T best = std::max(segment_error(lo, chosen[j]), segment_error(chosen[j], hi));
            for (std::size_t c = lo + 1; c < hi; ++c) {
                if (c == chosen[j]) continue;
                const T err = std::max(segment_error(lo, c), segment_error(c, hi));
                if (err < best) {
                    best = err;
                    chosen[j] = c;
                    moved = true;
                }
            }
        }
    }
    return build();
}

} // namespace tdsched
