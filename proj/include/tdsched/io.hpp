#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "tdsched/ddd.hpp"
#include "tdsched/model.hpp"

namespace tdsched {

using json = nlohmann::json;

// All JSON quantities are in model units; internally they are ticks.

inline json pwl_to_json(const PwlFunction& f) {
    json pts = json::array();
    for (const auto& p : f.breakpoints()) pts.push_back({to_units(p.time), to_units(p.value)});
    return json{{"breakpoints", std::move(pts)}};
}

/// Accepts {"breakpoints":[[t,v],...]} or a bare number (constant function).
inline PwlFunction pwl_from_json(const json& j) {
    if (j.is_number()) return PwlFunction::constant(to_ticks(j.get<double>()));
    if (!j.is_object() || !j.contains("breakpoints")) throw ModelError("pwl: expected {\"breakpoints\":[...]}");
    std::vector<Breakpoint<Tick>> pts;
    for (const auto& p : j.at("breakpoints")) {
        if (!p.is_array() || p.size() != 2) throw ModelError("pwl: breakpoint must be [t, v]");
        pts.push_back({to_ticks(p[0].get<double>()), to_ticks(p[1].get<double>())});
    }
    try {
        return PwlFunction(std::move(pts));
    } catch (const std::invalid_argument& e) {
        throw ModelError(e.what());
    }
}

inline json problem_to_json(const Problem& p) {
    json acts = json::array();
    for (const auto& a : p.activities) {
        json ja{{"e", to_units(a.earliest)},
                {"l", to_units(a.latest)},
                {"tau", pwl_to_json(a.duration)},
                {"rho", pwl_to_json(a.consumption)},
                {"delta", a.replenishment ? pwl_to_json(*a.replenishment) : json(nullptr)},
                {"mode", std::string(to_string(a.mode))}};
        acts.push_back(std::move(ja));
    }
    return json{{"eps", to_units(p.eps)}, {"Q", to_units(p.capacity)}, {"activities", std::move(acts)}};
}

inline Problem problem_from_json(const json& j) {
    Problem p;
    try {
        p.eps = to_ticks(j.value("eps", 1.0));
        p.capacity = to_ticks(j.at("Q").get<double>());
        for (const auto& ja : j.at("activities")) {
            Activity a;
            a.earliest = to_ticks(ja.at("e").get<double>());
            a.latest = to_ticks(ja.at("l").get<double>());
            a.duration = pwl_from_json(ja.at("tau"));
            a.consumption = pwl_from_json(ja.at("rho"));
            if (ja.contains("delta") && !ja.at("delta").is_null()) a.replenishment = pwl_from_json(ja.at("delta"));
            a.mode = ja.contains("mode") ? parse_mode(ja.at("mode").get<std::string>())
                                         : default_mode(a.replenishment.has_value());
            p.activities.push_back(std::move(a));
        }
    } catch (const json::exception& e) {
        throw ModelError(std::string("problem json: ") + e.what());
    }
    check_problem(p);
    return p;
}

inline json stats_to_json(const SolverStats& s) {
    return json{{"iterations", s.iterations},
                {"vertices_created", s.vertices_created},
                {"vertices_preloaded", s.vertices_preloaded},
                {"labels_settled", s.labels_settled},
                {"wall_time", s.wall_time}};
}

inline json schedule_to_json(const std::optional<Schedule>& s, const SolverStats& stats) {
    if (!s) return json{{"status", "infeasible"}, {"stats", stats_to_json(stats)}};
    json t = json::array(), y = json::array();
    for (Tick v : s->start) t.push_back(to_units(v));
    for (bool b : s->replenish) y.push_back(b ? 1 : 0);
    return json{{"status", "optimal"},
                {"t", std::move(t)},
                {"y", std::move(y)},
                {"completion", to_units(s->completion)},
                {"stats", stats_to_json(stats)}};
}

/// Solution path [[activity(1-based), t], ...] as written by the solve command.
inline json path_to_json(const std::vector<Vertex>& path) {
    json out = json::array();
    for (const auto& v : path) out.push_back({v.activity + 1, to_units(v.time)});
    return out;
}

inline std::vector<Vertex> path_from_json(const json& j) {
    const json& arr = j.is_object() ? j.at("path") : j;
    std::vector<Vertex> path;
    for (const auto& e : arr) path.push_back({e.at(0).get<std::size_t>() - 1, to_ticks(e.at(1).get<double>())});
    return path;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

} // namespace tdsched
