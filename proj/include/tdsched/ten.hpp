#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <queue>
#include <tuple>
#include <vector>

#include "tdsched/model.hpp"

namespace tdsched {

/// A vertex (activity, start time). Activities are 0-based.
struct Vertex {
    std::size_t activity = 0;
    Tick time = 0;
    friend auto operator<=>(const Vertex&, const Vertex&) = default;
};

/**
 * Vertex sets V_i of a (fully or partially) time-expanded network with the
 * consumption bound q_(i,t) of each vertex. Edges are implicit: (i,t) connects
 * to every (i+1,t') with t' >= theta_i(t).
 */
class TimeExpandedNetwork {
public:
    using Layer = std::map<Tick, Amount>;

    TimeExpandedNetwork() = default;
    explicit TimeExpandedNetwork(std::size_t activities) : layers_(activities) {}

    std::size_t activity_count() const noexcept { return layers_.size(); }
    const Layer& layer(std::size_t i) const { return layers_.at(i); }

    bool contains(Vertex v) const { return layers_.at(v.activity).contains(v.time); }
    Amount q(Vertex v) const { return layers_.at(v.activity).at(v.time); }

    /// Inserts the vertex; returns false if it already existed.
    bool insert(Vertex v, Amount q) { return layers_.at(v.activity).emplace(v.time, q).second; }
    void set_q(Vertex v, Amount q) { layers_.at(v.activity).at(v.time) = q; }

    std::size_t vertex_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += l.size();
        return n;
    }

    std::vector<Tick> times(std::size_t i) const {
        std::vector<Tick> out;
        out.reserve(layers_.at(i).size());
        for (const auto& [t, q] : layers_.at(i)) out.push_back(t);
        return out;
    }

private:
    std::vector<Layer> layers_;
};

/// Counters shared by all solvers.
struct SolverStats {
    std::size_t iterations = 0;
    std::size_t vertices_created = 0;
    std::size_t vertices_preloaded = 0;
    std::size_t labels_settled = 0;
    std::size_t add_recursive_calls = 0;
    double wall_time = 0.0;
    /// Completion of the restricted solution found in each refinement iteration.
    std::vector<Tick> iteration_completions;
    /// False if a selection key ever decreased during label setting.
    bool keys_monotone = true;

    void merge(const SolverStats& other) {
        iterations += other.iterations;
        vertices_created += other.vertices_created;
        vertices_preloaded += other.vertices_preloaded;
        labels_settled += other.labels_settled;
        add_recursive_calls += other.add_recursive_calls;
        wall_time += other.wall_time;
        keys_monotone = keys_monotone && other.keys_monotone;
    }
};

/// Outcome of one label-setting run on a (restricted) network.
struct PathResult {
    std::optional<Schedule> schedule;
    std::vector<Vertex> path;
    /// q of each path vertex as used when the vertex was made permanent.
    std::vector<Amount> q_used;
};

namespace ten {

/// Suffix sums: bound[i] = sum over j > i of the minimum duration of j within its window.
inline std::vector<Tick> static_lower_bounds(const Problem& p) {
    std::vector<Tick> bound(p.size(), 0);
    for (std::size_t i = p.size(); i-- > 1;) bound[i - 1] = bound[i] + p[i].duration.min_on(p[i].earliest, p[i].latest);
    return bound;
}

/// Every grid time of every window, with exact consumption values.
inline TimeExpandedNetwork full_expand(const Problem& p) {
    TimeExpandedNetwork net(p.size());
    for (std::size_t i = 0; i < p.size(); ++i)
        for (Tick t = p[i].earliest; t <= p[i].latest; t += p.eps) net.insert({i, t}, p[i].consumption(t));
    return net;
}

} // namespace ten

namespace detail {

inline constexpr Amount kUnreached = kInfinity;

struct Label {
    Amount ell = kUnreached;
    std::optional<Tick> pred;
    bool replenished = false;
    bool permanent = false;
    Amount q_used = 0;   // q at selection
    Tick earliest_replenished = kInfinity; // t* at selection
};

/// Sources start at zero consumption, everything else unreached.
inline Label initial_label(std::size_t activity) {
    Label lab;
    if (activity == 0) lab.ell = 0;
    return lab;
}

using LabelLayer = std::map<Tick, Label>;

struct SelectionKey {
    Tick bound;
    std::size_t activity;
    Tick time;
    friend auto operator<=>(const SelectionKey&, const SelectionKey&) = default;
};

using SelectionQueue = std::priority_queue<SelectionKey, std::vector<SelectionKey>, std::greater<>>;

inline bool fits(Amount ell, Amount q, Amount capacity) { return ell != kUnreached && ell + q <= capacity; }

/// Walks predecessors back from the selected last vertex.
inline PathResult reconstruct(const Problem& p, const std::vector<LabelLayer>& labels, Vertex last) {
    const std::size_t n = p.size();
    PathResult r;
    r.path.resize(n);
    r.q_used.resize(n);
    std::vector<Tick> start(n);
    std::vector<bool> repl(n, false);
    Tick t = last.time;
    for (std::size_t i = n; i-- > 0;) {
        const Label& lab = labels[i].at(t);
        start[i] = t;
        r.path[i] = {i, t};
        r.q_used[i] = lab.q_used;
        if (i > 0) {
            repl[i - 1] = lab.replenished;
            t = *lab.pred;
        }
    }
    r.schedule = make_schedule(p, std::move(start), std::move(repl));
    return r;
}

} // namespace detail

namespace ten {

/**
 * Best-first label setting on a time-expanded network. Labels hold the least
 * consumption accumulated before starting (i,t). Vertices are made permanent in
 * lexicographic order of (theta_i(t) + remaining minimum durations, i, t) among
 * those whose label plus q fits the capacity; the first permanent vertex of the
 * last activity yields the earliest completion. Returns an empty schedule when
 * no path fits the capacity.
 */
inline PathResult solve(const TimeExpandedNetwork& net, const Problem& p, SolverStats* stats = nullptr) {
    using namespace detail;
    const std::size_t n = p.size();
    PathResult none;
    if (n == 0) return none;
    const auto bound = ten::static_lower_bounds(p);

    std::vector<LabelLayer> labels(n);
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& [t, q] : net.layer(i)) labels[i].emplace(t, initial_label(i));

    SelectionQueue queue;
    for (const auto& [t, q] : net.layer(0)) queue.push({p[0].completion(t) + bound[0], 0, t});

    std::optional<SelectionKey> last_key;
    while (!queue.empty()) {
        const SelectionKey key = queue.top();
        queue.pop();
        Label& lab = labels[key.activity].at(key.time);
        const Amount q = net.q({key.activity, key.time});
        if (lab.permanent || !fits(lab.ell, q, p.capacity)) continue;
        if (last_key && key < *last_key && stats) stats->keys_monotone = false;
        last_key = key;

        lab.permanent = true;
        lab.q_used = q;
        if (stats) ++stats->labels_settled;
        const std::size_t i = key.activity;
        if (i + 1 == n) return reconstruct(p, labels, {i, key.time});

        const Tick ready = p[i].completion(key.time);
        const Amount out = lab.ell + q;
        auto& next = labels[i + 1];
        for (auto it = next.lower_bound(ready); it != next.end(); ++it) {
            Label& succ = it->second;
            if (succ.permanent || out >= succ.ell) continue;
            succ.ell = out;
            succ.pred = key.time;
            queue.push({p[i + 1].completion(it->first) + bound[i + 1], i + 1, it->first});
        }
    }
    return none;
}

} // namespace ten
} // namespace tdsched
