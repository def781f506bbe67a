#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tdsched/io.hpp"
#include "tdsched/pwl.hpp"

namespace tdsched::instgen {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- Solomon data

struct SolomonNode {
    int id = 0;
    double x = 0, y = 0;
    double demand = 0, ready = 0, due = 0, service = 0;
};

/// A Solomon VRPTW instance; nodes[0] is the depot.
struct SolomonData {
    std::string name;
    int vehicles = 0;
    double capacity = 0;
    std::vector<SolomonNode> nodes;

    std::size_t customer_count() const { return nodes.empty() ? 0 : nodes.size() - 1; }
};

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    for (std::string tok; in >> tok;) out.push_back(tok);
    return out;
}

inline double parse_number(const std::string& tok, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used == tok.size()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError("line " + std::to_string(line_no) + ": not a number: '" + tok + "'");
}

inline std::string upper(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

} // namespace detail

inline SolomonData parse_solomon(std::string_view text) {
    std::vector<std::string> lines;
    {
        std::istringstream in{std::string(text)};
        for (std::string line; std::getline(in, line);) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines.push_back(line);
        }
    }
    SolomonData data;
    std::size_t k = 0;
    auto skip_blank = [&] {
        while (k < lines.size() && detail::split_fields(lines[k]).empty()) ++k;
    };
    skip_blank();
    if (k == lines.size()) throw ParseError("empty input");
    data.name = detail::split_fields(lines[k])[0];
    ++k;

    auto expect_section = [&](const char* word) {
        skip_blank();
        if (k == lines.size() || detail::upper(detail::split_fields(lines[k])[0]) != word)
            throw ParseError("line " + std::to_string(k + 1) + ": missing " + word + " header");
        ++k;
        skip_blank();
        ++k; // column titles
    };

    expect_section("VEHICLE");
    skip_blank();
    if (k == lines.size()) throw ParseError("missing vehicle number and capacity");
    {
        const auto f = detail::split_fields(lines[k]);
        if (f.size() != 2) throw ParseError("line " + std::to_string(k + 1) + ": expected vehicle number and capacity");
        data.vehicles = static_cast<int>(detail::parse_number(f[0], k + 1));
        data.capacity = detail::parse_number(f[1], k + 1);
        ++k;
    }

    expect_section("CUSTOMER");
    for (; k < lines.size(); ++k) {
        const auto f = detail::split_fields(lines[k]);
        if (f.empty()) continue;
        if (f.size() != 7)
            throw ParseError("line " + std::to_string(k + 1) + ": expected 7 fields, found " + std::to_string(f.size()));
        SolomonNode node;
        node.id = static_cast<int>(detail::parse_number(f[0], k + 1));
        node.x = detail::parse_number(f[1], k + 1);
        node.y = detail::parse_number(f[2], k + 1);
        node.demand = detail::parse_number(f[3], k + 1);
        node.ready = detail::parse_number(f[4], k + 1);
        node.due = detail::parse_number(f[5], k + 1);
        node.service = detail::parse_number(f[6], k + 1);
        data.nodes.push_back(node);
    }
    if (data.nodes.empty()) throw ParseError("no depot row");
    if (data.nodes.size() == 1) throw ParseError("no customers");
    return data;
}

inline std::string write_solomon(const SolomonData& data) {
    std::ostringstream out;
    out << data.name << "\n\nVEHICLE\nNUMBER     CAPACITY\n"
        << "  " << data.vehicles << "         " << data.capacity << "\n\n"
        << "CUSTOMER\nCUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE   TIME\n\n";
    for (const auto& n : data.nodes)
        out << "  " << n.id << "  " << n.x << "  " << n.y << "  " << n.demand << "  " << n.ready << "  " << n.due
            << "  " << n.service << "\n";
    return out.str();
}

/// Keeps the depot and the first `customers` customers, as in the usual 25/50-customer subsets.
inline SolomonData truncate(SolomonData data, std::size_t customers) {
    if (data.nodes.size() > customers + 1) data.nodes.resize(customers + 1);
    return data;
}

enum class Family { C1, C2 };

inline Family parse_family(std::string_view s) {
    if (s == "C1" || s == "c1") return Family::C1;
    if (s == "C2" || s == "c2") return Family::C2;
    throw std::invalid_argument("unknown instance family: " + std::string(s));
}

/**
 * Clustered instance in the style of the C1 (short horizon, small vehicles,
 * narrow windows) or C2 (long horizon, large vehicles, wide windows) sets.
 * Windows leave room for a single-customer tour at five times free-flow time.
 */
inline SolomonData synthetic_solomon(Family family, std::size_t customers, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const bool c1 = family == Family::C1;
    SolomonData data;
    data.name = std::string(c1 ? "c1" : "c2") + "syn" + std::to_string(seed);
    data.vehicles = 25;
    data.capacity = c1 ? 200 : 700;
    const double horizon = c1 ? 1236 : 3390;
    const double service = 90;
    const SolomonNode depot{0, c1 ? 40.0 : 35.0, c1 ? 50.0 : 35.0, 0, 0, horizon, 0};
    data.nodes.push_back(depot);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t clusters = std::max<std::size_t>(1, (customers + 9) / 10);
    std::vector<std::array<double, 2>> centers;
    for (std::size_t c = 0; c < clusters; ++c) {
        const double r = 10 + 30 * unit(rng), a = 2 * M_PI * unit(rng);
        centers.push_back({std::clamp(depot.x + r * std::cos(a), 0.0, 100.0),
                           std::clamp(depot.y + r * std::sin(a), 0.0, 100.0)});
    }
    std::normal_distribution<double> spread(0.0, 4.0);
    std::uniform_int_distribution<int> demand(1, 4);
    for (std::size_t k = 0; k < customers; ++k) {
        const auto& ctr = centers[k / 10 % clusters];
        SolomonNode node;
        node.id = static_cast<int>(k + 1);
        for (;;) {
            node.x = std::clamp(std::round(ctr[0] + spread(rng)), 0.0, 100.0);
            node.y = std::clamp(std::round(ctr[1] + spread(rng)), 0.0, 100.0);
            bool clash = node.x == depot.x && node.y == depot.y;
            for (const auto& other : data.nodes) clash = clash || (other.x == node.x && other.y == node.y);
            if (!clash) break;
        }
        node.demand = 10.0 * demand(rng);
        node.service = service;
        const double reach = 5.5 * std::hypot(node.x - depot.x, node.y - depot.y);
        const double width = c1 ? std::round(40 + 80 * unit(rng)) : std::round(160 + 480 * unit(rng));
        const double lo = std::ceil(std::max(0.0, reach - width));
        const double hi = std::floor(horizon - service - reach - width);
        if (hi < lo) throw std::logic_error("synthetic_solomon: customer too far from the depot");
        node.ready = lo + std::floor((hi - lo) * unit(rng));
        node.due = node.ready + width;
        data.nodes.push_back(node);
    }
    return data;
}

// ---------------------------------------------------------------- configuration

struct EnergyCurve {
    double c0 = 0.2, c1 = 0.4, c2 = 0.4;
    double v_free = 1.0;

    /// Consumption per unit distance at speed v.
    double operator()(double v) const { return c0 + c1 * v_free / v + c2 * (v / v_free) * (v / v_free); }
};

struct GeneratorConfig {
    /// Relative-time congestion profile on [0,1].
    std::vector<std::pair<double, double>> delta{{0.0, 0.0},  {0.15, 0.0}, {0.25, 1.0}, {0.35, 1.0}, {0.45, 0.3},
                                                 {0.55, 0.3}, {0.70, 1.0}, {0.80, 1.0}, {0.90, 0.0}, {1.0, 0.0}};
    double sigma_fraction = 0.15;
    double cap = 0.8;
    double tau_free = 1.0;
    EnergyCurve energy;
    /// Battery capacity; non-positive means "derive from battery_fraction".
    double battery = 0;
    /// Share of the battery used by an uncongested round trip along the bounding-box diagonal.
    double battery_fraction = 0.6;
    double replenishment = 60;
    std::size_t samples = 48;
    std::size_t breakpoints = 16;
    /// Distance of the extra stations from a city centre, as a multiple of sigma.
    double station_offset = 1.0;
    std::uint64_t seed = 1;
};

inline GeneratorConfig config_from_json(const json& j) {
    GeneratorConfig c;
    if (j.contains("delta")) {
        c.delta.clear();
        for (const auto& bp : j.at("delta")) c.delta.emplace_back(bp.at(0).get<double>(), bp.at(1).get<double>());
    }
    c.sigma_fraction = j.value("sigma_fraction", c.sigma_fraction);
    c.cap = j.value("cap", c.cap);
    c.tau_free = j.value("tau_free", c.tau_free);
    if (j.contains("energy")) {
        const auto& e = j.at("energy");
        c.energy.c0 = e.value("c0", c.energy.c0);
        c.energy.c1 = e.value("c1", c.energy.c1);
        c.energy.c2 = e.value("c2", c.energy.c2);
    }
    c.battery = j.value("battery", c.battery);
    c.battery_fraction = j.value("battery_fraction", c.battery_fraction);
    c.replenishment = j.value("replenishment", c.replenishment);
    c.samples = j.value("samples", c.samples);
    c.breakpoints = j.value("breakpoints", c.breakpoints);
    c.station_offset = j.value("station_offset", c.station_offset);
    c.seed = j.value("seed", c.seed);
    if (c.samples < 2) throw std::invalid_argument("config: samples must be at least 2");
    if (c.tau_free <= 0) throw std::invalid_argument("config: tau_free must be positive");
    if (c.cap < 0 || c.cap >= 1) throw std::invalid_argument("config: cap must lie in [0,1)");
    for (auto [t, v] : c.delta)
        if (v < 0 || v > 1) throw std::invalid_argument("config: delta values must lie in [0,1]");
    return c;
}

inline json config_to_json(const GeneratorConfig& c) {
    json delta = json::array();
    for (auto [t, v] : c.delta) delta.push_back({t, v});
    return {{"delta", delta},
            {"sigma_fraction", c.sigma_fraction},
            {"cap", c.cap},
            {"tau_free", c.tau_free},
            {"energy", {{"c0", c.energy.c0}, {"c1", c.energy.c1}, {"c2", c.energy.c2}}},
            {"battery", c.battery},
            {"battery_fraction", c.battery_fraction},
            {"replenishment", c.replenishment},
            {"samples", c.samples},
            {"breakpoints", c.breakpoints},
            {"station_offset", c.station_offset},
            {"seed", c.seed}};
}

// ---------------------------------------------------------------- congestion

struct Point {
    double x = 0, y = 0;
    bool operator==(const Point&) const = default;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Shortest 8-move grid distance.
inline double octile_distance(Point a, Point b) {
    const double dx = std::abs(a.x - b.x), dy = std::abs(a.y - b.y);
    return std::max(dx, dy) + (std::sqrt(2.0) - 1) * std::min(dx, dy);
}

struct BoundingBox {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double diagonal() const { return std::hypot(width(), height()); }
};

inline BoundingBox bounding_box(const std::vector<Point>& pts) {
    if (pts.empty()) throw std::invalid_argument("bounding_box: no points");
    BoundingBox b{static_cast<int>(std::floor(pts[0].x)), static_cast<int>(std::floor(pts[0].y)),
                  static_cast<int>(std::ceil(pts[0].x)), static_cast<int>(std::ceil(pts[0].y))};
    for (auto p : pts) {
        b.x0 = std::min(b.x0, static_cast<int>(std::floor(p.x)));
        b.y0 = std::min(b.y0, static_cast<int>(std::floor(p.y)));
        b.x1 = std::max(b.x1, static_cast<int>(std::ceil(p.x)));
        b.y1 = std::max(b.y1, static_cast<int>(std::ceil(p.y)));
    }
    return b;
}

class CongestionField {
public:
    CongestionField(RealPwl delta, std::vector<Point> centers, double sigma, double cap, double horizon,
                    double tau_free)
        : delta_(std::move(delta)), centers_(std::move(centers)), sigma_(sigma), cap_(cap), horizon_(horizon),
          tau_free_(tau_free) {
        if (sigma_ <= 0 || horizon_ <= 0 || tau_free_ <= 0)
            throw std::invalid_argument("CongestionField: sigma, horizon and tau_free must be positive");
    }

    /// Quadrant-midpoint centres with sigma as a fraction of the box diagonal.
    static CongestionField from_box(const BoundingBox& box, const GeneratorConfig& cfg, double horizon) {
        std::vector<Breakpoint<double>> pts;
        for (auto [t, v] : cfg.delta) pts.push_back({t, v});
        std::vector<Point> centers;
        for (double fy : {0.25, 0.75})
            for (double fx : {0.25, 0.75}) centers.push_back({box.x0 + fx * box.width(), box.y0 + fy * box.height()});
        const double sigma = std::max(cfg.sigma_fraction * box.diagonal(), 1e-9);
        return CongestionField(RealPwl(std::move(pts)), std::move(centers), sigma, cfg.cap, horizon, cfg.tau_free);
    }

    double gamma(Point p) const {
        double g = 0;
        for (auto c : centers_) {
            const double d2 = (p.x - c.x) * (p.x - c.x) + (p.y - c.y) * (p.y - c.y);
            g = std::max(g, std::exp(-d2 / (2 * sigma_ * sigma_)));
        }
        return g;
    }
    double capped_gamma(Point p) const { return std::min(cap_, gamma(p)); }
    double delta(double t) const { return delta_(t / horizon_); }
    double factor(Point p, double t) const { return capped_gamma(p) * delta(t); }
    double tau_free() const { return tau_free_; }
    double horizon() const { return horizon_; }
    double sigma() const { return sigma_; }
    double cap() const { return cap_; }
    const std::vector<Point>& centers() const { return centers_; }
    const RealPwl& delta_function() const { return delta_; }

private:
    RealPwl delta_;
    std::vector<Point> centers_;
    double sigma_, cap_, horizon_, tau_free_;
};

/// Time to travel one unit of distance at p when departing at t.
inline double unit_travel_time(const CongestionField& field, Point p, double t) {
    return field.tau_free() / (1.0 - field.factor(p, t));
}

// ---------------------------------------------------------------- grid search

struct GridPath {
    double arrival = 0;
    /// Visited grid points from the source to the target, both included; empty when source == target.
    std::vector<Point> points;
};

/**
 * Time-dependent label setting on the integer grid of a bounding box with
 * 8 moves. The unit travel time of a move is taken at its midpoint at the
 * departure time.
 */
class GridSearch {
public:
    GridSearch(const CongestionField& field, BoundingBox box, EnergyCurve curve = {})
        : field_(field), box_(box), curve_(curve), nx_(box.x1 - box.x0 + 1), ny_(box.y1 - box.y0 + 1) {
        curve_.v_free = 1.0 / field.tau_free();
        gamma_.resize(static_cast<std::size_t>(nx_ * ny_));
        for (int y = 0; y < ny_; ++y)
            for (int x = 0; x < nx_; ++x)
                for (int d = 0; d < 8; ++d) {
                    const Point mid{box_.x0 + x + kDx[d] * 0.5, box_.y0 + y + kDy[d] * 0.5};
                    gamma_[index(x, y)][d] = field_.capped_gamma(mid);
                }
    }

    struct Tree {
        std::vector<double> arrival;
        std::vector<double> energy;
        std::vector<int> pred;
    };

    /// Earliest arrival and accumulated energy at every grid point from `source` departing at t0.
    Tree run(Point source, double t0) const {
        const int n = nx_ * ny_;
        Tree tree{std::vector<double>(n, kInf), std::vector<double>(n, 0.0), std::vector<int>(n, -1)};
        std::vector<char> done(n, 0);
        using Entry = std::pair<double, int>;
        std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
        const int s = node_of(source);
        tree.arrival[s] = t0;
        heap.push({t0, s});
        while (!heap.empty()) {
            const auto [t, u] = heap.top();
            heap.pop();
            if (done[u]) continue;
            done[u] = 1;
            const int ux = u % nx_, uy = u / nx_;
            const double dl = field_.delta(t);
            for (int d = 0; d < 8; ++d) {
                const int vx = ux + kDx[d], vy = uy + kDy[d];
                if (vx < 0 || vy < 0 || vx >= nx_ || vy >= ny_) continue;
                const int v = vy * nx_ + vx;
                if (done[v]) continue;
                const double step = kLen[d] * field_.tau_free() / (1.0 - gamma_[u][d] * dl);
                const double arr = t + step;
                if (arr < tree.arrival[v]) {
                    tree.arrival[v] = arr;
                    tree.energy[v] = tree.energy[u] + kLen[d] * curve_(kLen[d] / step);
                    tree.pred[v] = u;
                    heap.push({arr, v});
                }
            }
        }
        return tree;
    }

    int node_of(Point p) const {
        const int x = static_cast<int>(std::lround(p.x)) - box_.x0, y = static_cast<int>(std::lround(p.y)) - box_.y0;
        if (x < 0 || y < 0 || x >= nx_ || y >= ny_) throw std::out_of_range("point outside the grid");
        return y * nx_ + x;
    }
    Point point_of(int node) const { return {double(box_.x0 + node % nx_), double(box_.y0 + node / nx_)}; }

    std::vector<Point> path_to(const Tree& tree, Point target) const {
        std::vector<Point> pts;
        int v = node_of(target);
        if (tree.pred[v] < 0) return pts;
        for (; v >= 0; v = tree.pred[v]) pts.push_back(point_of(v));
        std::reverse(pts.begin(), pts.end());
        return pts;
    }

    const EnergyCurve& curve() const { return curve_; }
    const CongestionField& field() const { return field_; }
    const BoundingBox& box() const { return box_; }

private:
    static constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};
    static constexpr double kLen[8] = {1, 1, 1, 1, M_SQRT2, M_SQRT2, M_SQRT2, M_SQRT2};
    static constexpr double kInf = std::numeric_limits<double>::infinity();

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y * nx_ + x); }

    CongestionField field_;
    BoundingBox box_;
    EnergyCurve curve_;
    int nx_, ny_;
    std::vector<std::array<double, 8>> gamma_;
};

inline GridPath td_grid_shortest_path(const GridSearch& grid, Point from, Point to, double t0) {
    const auto tree = grid.run(from, t0);
    return {tree.arrival[grid.node_of(to)], grid.path_to(tree, to)};
}

struct PathReplay {
    double arrival = 0;
    double energy = 0;
};

/// Walks a grid path departing at t0, accumulating time and distance times per-distance consumption.
inline PathReplay replay_path(const GridSearch& grid, const std::vector<Point>& path, double t0) {
    PathReplay r{t0, 0};
    for (std::size_t k = 1; k < path.size(); ++k) {
        const Point a = path[k - 1], b = path[k];
        const double len = distance(a, b);
        const Point mid{(a.x + b.x) / 2, (a.y + b.y) / 2};
        const double step = len * unit_travel_time(grid.field(), mid, r.arrival);
        r.energy += len * grid.curve()(len / step);
        r.arrival += step;
    }
    return r;
}

inline double energy_along_path(const GridSearch& grid, const std::vector<Point>& path, double t0) {
    return replay_path(grid, path, t0).energy;
}

// ---------------------------------------------------------------- function fitting

struct TravelFunctions {
    PwlFunction tau;
    PwlFunction rho;
};

/// Sample start times in ticks, evenly spread over [0, horizon].
inline std::vector<Tick> sample_times(double horizon, std::size_t count) {
    std::vector<Tick> out;
    for (std::size_t k = 0; k < count; ++k) out.push_back(to_ticks(horizon * double(k) / double(count - 1)));
    return out;
}

/// Raises breakpoint values where needed so every segment slope is at least -1.
inline PwlFunction enforce_fifo(const PwlFunction& f) {
    auto pts = f.breakpoints();
    for (std::size_t k = 1; k < pts.size(); ++k)
        pts[k].value = std::max(pts[k].value, pts[k - 1].value - (pts[k].time - pts[k - 1].time));
    return PwlFunction(std::move(pts));
}

inline TravelFunctions fit_travel(const std::vector<Tick>& times, const std::vector<Tick>& arrivals,
                                  const std::vector<Tick>& energies, std::size_t budget) {
    std::vector<Sample<Tick>> tau, rho;
    bool moving = false;
    for (std::size_t k = 0; k < times.size(); ++k) {
        tau.push_back({times[k], arrivals[k] - times[k]});
        rho.push_back({times[k], energies[k]});
        moving = moving || arrivals[k] != times[k];
    }
    if (!moving) return {PwlFunction::constant(0), PwlFunction::constant(0)};
    return {enforce_fifo(fit_pwl<Tick>(tau, budget)), fit_pwl<Tick>(rho, budget)};
}

/// tau and rho from `from` to every target, one search per sample start time.
inline std::vector<TravelFunctions> build_from_source(const GridSearch& grid, Point from,
                                                      const std::vector<Point>& targets, std::size_t samples,
                                                      std::size_t budget) {
    const auto times = sample_times(grid.field().horizon(), samples);
    std::vector<std::vector<Tick>> arr(targets.size()), energy(targets.size());
    for (Tick t0 : times) {
        const auto tree = grid.run(from, to_units(t0));
        for (std::size_t j = 0; j < targets.size(); ++j) {
            const int v = grid.node_of(targets[j]);
            arr[j].push_back(std::max(t0, to_ticks(tree.arrival[v])));
            energy[j].push_back(to_ticks(tree.energy[v]));
        }
    }
    std::vector<TravelFunctions> out;
    for (std::size_t j = 0; j < targets.size(); ++j) out.push_back(fit_travel(times, arr[j], energy[j], budget));
    return out;
}

inline TravelFunctions build_td_functions(const GridSearch& grid, Point from, Point to, std::size_t samples,
                                          std::size_t budget = 16) {
    if (samples < 2) throw std::invalid_argument("build_td_functions: need at least two samples");
    return build_from_source(grid, from, {to}, samples, budget).front();
}

// ---------------------------------------------------------------- instances

enum class Variant { none, depot, depot1, depot3, depot5 };

inline std::string_view to_string(Variant v) {
    switch (v) {
    case Variant::none: return "none";
    case Variant::depot: return "depot";
    case Variant::depot1: return "depot+1";
    case Variant::depot3: return "depot+3";
    case Variant::depot5: return "depot+5";
    }
    return "none";
}

inline Variant parse_variant(std::string_view s) {
    for (Variant v : {Variant::none, Variant::depot, Variant::depot1, Variant::depot3, Variant::depot5})
        if (to_string(v) == s) return v;
    throw std::invalid_argument("unknown station variant: " + std::string(s));
}

inline int stations_per_city(Variant v) {
    switch (v) {
    case Variant::depot1: return 1;
    case Variant::depot3: return 3;
    case Variant::depot5: return 5;
    default: return 0;
    }
}

/// Public stations: each centre, then pairs along the box diagonal and anti-diagonal.
inline std::vector<Point> station_layout(const CongestionField& field, const BoundingBox& box, Variant variant,
                                         double offset = 1.0) {
    const int per_city = stations_per_city(variant);
    std::vector<Point> out;
    const double d = field.sigma() * offset;
    const double ux = box.width() / std::max(box.diagonal(), 1e-9), uy = box.height() / std::max(box.diagonal(), 1e-9);
    auto snap = [&](double x, double y) {
        return Point{std::clamp(std::round(x), double(box.x0), double(box.x1)),
                     std::clamp(std::round(y), double(box.y0), double(box.y1))};
    };
    for (const Point c : field.centers()) {
        if (per_city >= 1) out.push_back(snap(c.x, c.y));
        if (per_city >= 3) {
            out.push_back(snap(c.x + d * ux, c.y + d * uy));
            out.push_back(snap(c.x - d * ux, c.y - d * uy));
        }
        if (per_city >= 5) {
            out.push_back(snap(c.x + d * ux, c.y - d * uy));
            out.push_back(snap(c.x - d * ux, c.y + d * uy));
        }
    }
    return out;
}

struct Customer {
    int id = 0;
    std::size_t location = 0;
    double demand = 0, ready = 0, due = 0, service = 0;
};

/// Generated routing instance. Location 0 is the depot, locations 1..n the customers, then public stations.
struct Instance {
    static constexpr int kVersion = 1;

    std::string name;
    Variant variant = Variant::none;
    double vehicle_capacity = 0;
    double battery = 0;
    double replenishment = 0;
    double depot_ready = 0;
    double horizon = 0;
    double tau_free = 1;
    std::vector<Point> locations;
    std::vector<Customer> customers;
    /// Location indices where a vehicle may recharge (contains 0 in every variant but none).
    std::vector<std::size_t> stations;
    std::vector<std::vector<TravelFunctions>> travel;

    const TravelFunctions& leg(std::size_t from, std::size_t to) const { return travel.at(from).at(to); }
    double free_distance(std::size_t a, std::size_t b) const { return distance(locations.at(a), locations.at(b)); }
};

/// Builds the congestion field, stations, and all pairwise travel functions.
inline Instance generate_instance(const SolomonData& raw, Variant variant, const GeneratorConfig& cfg = {}) {
    if (raw.nodes.size() < 2) throw std::invalid_argument("generate_instance: no customers");
    Instance inst;
    inst.name = raw.name;
    inst.variant = variant;
    inst.vehicle_capacity = raw.capacity;
    inst.replenishment = cfg.replenishment;
    inst.depot_ready = raw.nodes[0].ready;
    inst.horizon = raw.nodes[0].due;
    inst.tau_free = cfg.tau_free;

    for (const auto& n : raw.nodes) inst.locations.push_back({n.x, n.y});
    for (std::size_t k = 1; k < raw.nodes.size(); ++k) {
        const auto& n = raw.nodes[k];
        inst.customers.push_back({n.id, k, n.demand, n.ready, n.due, n.service});
    }
    const BoundingBox box = bounding_box(inst.locations);
    const auto field = CongestionField::from_box(box, cfg, inst.horizon);
    if (variant != Variant::none) inst.stations.push_back(0);
    for (Point s : station_layout(field, box, variant, cfg.station_offset)) {
        inst.stations.push_back(inst.locations.size());
        inst.locations.push_back(s);
    }

    EnergyCurve curve = cfg.energy;
    curve.v_free = 1.0 / cfg.tau_free;
    inst.battery = cfg.battery > 0 ? cfg.battery : 2 * box.diagonal() * curve(curve.v_free) / cfg.battery_fraction;

    const GridSearch grid(field, box, curve);
    for (const Point from : inst.locations)
        inst.travel.push_back(build_from_source(grid, from, inst.locations, cfg.samples, cfg.breakpoints));
    return inst;
}

/// The same instance with the station set of a smaller variant (its layout must be a subset).
inline Instance with_variant(const Instance& inst, Variant variant, const GeneratorConfig& cfg = {}) {
    const BoundingBox box = bounding_box(
        std::vector<Point>(inst.locations.begin(), inst.locations.begin() + 1 + inst.customers.size()));
    const auto field = CongestionField::from_box(box, cfg, inst.horizon);
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k <= inst.customers.size(); ++k) keep.push_back(k);
    std::vector<std::size_t> stations;
    if (variant != Variant::none) stations.push_back(0);
    for (Point s : station_layout(field, box, variant, cfg.station_offset)) {
        std::size_t found = inst.locations.size();
        for (std::size_t idx : inst.stations)
            if (idx != 0 && inst.locations[idx] == s && std::find(keep.begin(), keep.end(), idx) == keep.end()) {
                found = idx;
                break;
            }
        if (found == inst.locations.size()) throw std::invalid_argument("with_variant: station layout not contained");
        stations.push_back(keep.size());
        keep.push_back(found);
    }
    Instance out = inst;
    out.variant = variant;
    out.stations = std::move(stations);
    out.locations.clear();
    out.travel.clear();
    for (std::size_t a : keep) {
        out.locations.push_back(inst.locations[a]);
        std::vector<TravelFunctions> row;
        for (std::size_t b : keep) row.push_back(inst.travel[a][b]);
        out.travel.push_back(std::move(row));
    }
    return out;
}

// ---------------------------------------------------------------- JSON

inline json instance_to_json(const Instance& inst) {
    json j;
    j["version"] = Instance::kVersion;
    j["name"] = inst.name;
    j["variant"] = std::string(to_string(inst.variant));
    j["vehicle_capacity"] = inst.vehicle_capacity;
    j["battery"] = inst.battery;
    j["replenishment"] = inst.replenishment;
    j["depot_ready"] = inst.depot_ready;
    j["horizon"] = inst.horizon;
    j["tau_free"] = inst.tau_free;
    json locs = json::array();
    for (auto p : inst.locations) locs.push_back({p.x, p.y});
    j["locations"] = locs;
    json cust = json::array();
    for (const auto& c : inst.customers)
        cust.push_back({{"id", c.id},
                        {"location", c.location},
                        {"demand", c.demand},
                        {"ready", c.ready},
                        {"due", c.due},
                        {"service", c.service}});
    j["customers"] = cust;
    j["stations"] = inst.stations;
    json travel = json::array();
    for (const auto& row : inst.travel) {
        json r = json::array();
        for (const auto& f : row) r.push_back({{"tau", pwl_to_json(f.tau)}, {"rho", pwl_to_json(f.rho)}});
        travel.push_back(r);
    }
    j["travel"] = travel;
    return j;
}

inline Instance instance_from_json(const json& j) {
    if (j.value("version", 0) != Instance::kVersion)
        throw std::invalid_argument("instance: unsupported version " + j.value("version", json(0)).dump());
    Instance inst;
    inst.name = j.at("name").get<std::string>();
    inst.variant = parse_variant(j.at("variant").get<std::string>());
    inst.vehicle_capacity = j.at("vehicle_capacity").get<double>();
    inst.battery = j.at("battery").get<double>();
    inst.replenishment = j.at("replenishment").get<double>();
    inst.depot_ready = j.value("depot_ready", 0.0);
    inst.horizon = j.at("horizon").get<double>();
    inst.tau_free = j.value("tau_free", 1.0);
    for (const auto& p : j.at("locations")) inst.locations.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    for (const auto& c : j.at("customers"))
        inst.customers.push_back({c.at("id").get<int>(), c.at("location").get<std::size_t>(),
                                  c.at("demand").get<double>(), c.at("ready").get<double>(),
                                  c.at("due").get<double>(), c.at("service").get<double>()});
    inst.stations = j.at("stations").get<std::vector<std::size_t>>();
    for (const auto& row : j.at("travel")) {
        std::vector<TravelFunctions> r;
        for (const auto& f : row) r.push_back({pwl_from_json(f.at("tau")), pwl_from_json(f.at("rho"))});
        inst.travel.push_back(std::move(r));
    }
    const std::size_t n = inst.locations.size();
    if (inst.travel.size() != n) throw std::invalid_argument("instance: travel matrix size mismatch");
    for (const auto& row : inst.travel)
        if (row.size() != n) throw std::invalid_argument("instance: travel matrix size mismatch");
    for (auto s : inst.stations)
        if (s >= n) throw std::invalid_argument("instance: station index out of range");
    for (const auto& c : inst.customers)
        if (c.location >= n) throw std::invalid_argument("instance: customer location out of range");
    return inst;
}

} // namespace tdsched::instgen
