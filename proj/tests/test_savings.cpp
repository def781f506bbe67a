#include "tdsched/savings.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace tdsched::savings {
namespace {

using instgen::Customer;
using instgen::Point;
using instgen::TravelFunctions;

struct Spec {
    Point at;
    double ready = 0, due = 1000, demand = 10, service = 10;
};

/// Hand-made instance: travel time and energy both equal the Euclidean distance.
Instance make_instance(const std::vector<Spec>& customers, std::vector<Point> stations = {}, double battery = 1000,
                       Variant variant = Variant::depot3, double capacity = 100) {
    Instance inst;
    inst.name = "micro";
    inst.variant = variant;
    inst.vehicle_capacity = capacity;
    inst.battery = battery;
    inst.replenishment = 20;
    inst.horizon = 1000;
    inst.locations.push_back({0, 0});
    for (std::size_t k = 0; k < customers.size(); ++k) {
        const auto& s = customers[k];
        inst.locations.push_back(s.at);
        inst.customers.push_back(Customer{int(k + 1), k + 1, s.demand, s.ready, s.due, s.service});
    }
    if (variant != Variant::none) inst.stations.push_back(0);
    for (Point s : stations) {
        inst.stations.push_back(inst.locations.size());
        inst.locations.push_back(s);
    }
    for (Point a : inst.locations) {
        std::vector<TravelFunctions> row;
        for (Point b : inst.locations) {
            const Tick d = to_ticks(std::round(instgen::distance(a, b)));
            row.push_back({PwlFunction::constant(d), PwlFunction::constant(d)});
        }
        inst.travel.push_back(std::move(row));
    }
    return inst;
}

TEST(RouteToProblem, SingleCustomerWithoutStations) {
    const auto inst = make_instance({{{30, 40}}}, {}, 1000, Variant::none);
    Route r{{0}, {std::nullopt, std::nullopt}};
    const auto rp = route_to_problem(r, inst);
    ASSERT_EQ(rp.problem.size(), 3u);
    for (const auto& a : rp.problem.activities) {
        EXPECT_EQ(a.mode, ReplenishmentMode::forbidden);
        EXPECT_FALSE(a.replenishment);
    }
    EXPECT_EQ(rp.problem[0].duration(0), to_ticks(50));
    EXPECT_EQ(rp.problem[1].duration(0), to_ticks(10));
    EXPECT_EQ(rp.problem[1].consumption(0), 0);
    // back at the depot by 1000: the return leg starts by 950
    EXPECT_EQ(rp.problem[2].latest, to_ticks(950));
    EXPECT_EQ(rp.problem[0].latest, to_ticks(950));
}

TEST(RouteToProblem, CommittedStationSplitsLeg) {
    const auto inst = make_instance({{{10, 0}}, {{50, 0}}}, {{30, 0}});
    Route r{{0, 1}, {std::nullopt, 2 + 1, std::nullopt}};
    const auto rp = route_to_problem(r, inst);
    ASSERT_EQ(rp.problem.size(), 6u);
    EXPECT_EQ(rp.problem[2].mode, ReplenishmentMode::required);
    EXPECT_EQ(rp.problem[2].duration(0), to_ticks(20));
    EXPECT_EQ(rp.problem[3].mode, ReplenishmentMode::forbidden);
    EXPECT_EQ(rp.problem[3].duration(0), to_ticks(20));
    EXPECT_EQ(rp.leg, (std::vector<std::size_t>{0, 1, 1, 1, 2, 2}));
    EXPECT_NO_THROW(check_problem(rp.problem));
}

TEST(RouteToProblem, DepotChargingBetweenCustomers) {
    // the second leg passes the depot, which is the only station
    const auto inst = make_instance({{{-20, 0}, 0, 1000, 10, 10}, {{20, 0}, 0, 1000, 10, 10}}, {}, 50, Variant::depot);
    Route r{{0, 1}, {std::nullopt, std::size_t{0}, std::nullopt}};
    auto tight = tighten_windows(route_to_problem(r, inst).problem);
    ASSERT_TRUE(tight);
    EXPECT_EQ((*tight)[2].mode, ReplenishmentMode::required);
    auto s = replen::solve_ddd_replen(*tight);
    ASSERT_TRUE(s.schedule);
    EXPECT_EQ(s.schedule->replenish, (std::vector<bool>{false, false, true, false, false, false}));
    EXPECT_FALSE(validate_schedule(*tight, *s.schedule));
    EXPECT_EQ(s.schedule->completion, to_ticks(20 + 10 + 20 + 20 + 20 + 10 + 20));
}

TEST(EligibleStation, DetourRule) {
    // a=(0,0) depot, b=(10,0)
    auto on_segment = make_instance({{{10, 0}}}, {{5, 0}});
    EXPECT_EQ(eligible_station(0, 1, on_segment), std::optional<std::size_t>(2));
    // detour 1.5 d: d(a,s)+d(s,b) = 25 with s on the perpendicular bisector
    const double h = std::sqrt(12.5 * 12.5 - 25.0);
    auto far = make_instance({{{10, 0}}}, {{5, h}});
    EXPECT_NEAR(far.free_distance(0, 2) + far.free_distance(2, 1) - 10, 15, 1e-9);
    EXPECT_FALSE(eligible_station(0, 1, far));
    // detours 0.3 d and 0.2 d
    auto pick = [](double detour) { return std::sqrt(std::pow((10 + detour) / 2, 2) - 25.0); };
    auto two = make_instance({{{10, 0}}}, {{5, pick(3)}, {5, pick(2)}});
    EXPECT_EQ(eligible_station(0, 1, two), std::optional<std::size_t>(3));
}

TEST(PreloadCacheTest, LongestCommonPrefix) {
    PreloadCache cache;
    EXPECT_TRUE(cache.lookup({1, 2, 3}).empty());
    cache.store({1, 2, 3}, {{0, 10}, {1, 20}, {2, 30}});
    cache.store({1, 5}, {{0, 11}, {1, 21}});
    cache.store({9}, {{0, 99}});
    EXPECT_EQ(cache.lookup({1, 2, 3, 4}), (std::vector<Vertex>{{0, 10}, {1, 20}, {2, 30}}));
    EXPECT_EQ(cache.lookup({1, 2, 7}), (std::vector<Vertex>{{0, 10}, {1, 20}}));
    EXPECT_EQ(cache.lookup({1, 5, 0}), (std::vector<Vertex>{{0, 11}, {1, 21}}));
    EXPECT_EQ(cache.lookup({2}).size(), 0u);
    EXPECT_EQ(cache.lookup({9, 1}), (std::vector<Vertex>{{0, 99}}));
}

TEST(EvaluateRoute, ShortRouteNeedsNoCharge) {
    const auto inst = make_instance({{{10, 0}}, {{20, 0}}});
    const std::vector<std::size_t> seq{0, 1};
    const auto ev = evaluate_route(seq, inst);
    ASSERT_TRUE(ev.feasible);
    EXPECT_EQ(ev.replenishments(), 0u);
    EXPECT_EQ(ev.solver_calls, 1u);
    EXPECT_EQ(ev.completion(), to_ticks(10 + 10 + 10 + 10 + 20));
    EXPECT_FALSE(validate_schedule(ev.problem, *ev.schedule));
}

TEST(EvaluateRoute, CommitsOneChargeWhenBatteryRunsOut) {
    // 40 out, 40 across, 57 back = 137 > 100; the station is within the detour bound of the return leg
    const auto inst = make_instance({{{40, 0}}, {{40, 40}}}, {{40, 20}}, 100);
    const std::vector<std::size_t> seq{0, 1};
    const auto ev = evaluate_route(seq, inst);
    ASSERT_TRUE(ev.feasible);
    EXPECT_EQ(ev.replenishments(), 1u);
    EXPECT_EQ(ev.solver_calls, 2u);
    EXPECT_EQ(ev.route.via[2], std::optional<std::size_t>(3));
    EXPECT_FALSE(validate_schedule(ev.problem, *ev.schedule));
    const auto oracle = replen::solve_full(ev.problem);
    ASSERT_TRUE(oracle.schedule);
    EXPECT_EQ(oracle.schedule->completion, ev.completion());
    // without stations the same route fails on energy
    const auto plain = make_instance({{{40, 0}}, {{40, 40}}}, {}, 100, Variant::none);
    EXPECT_FALSE(evaluate_route(seq, plain).feasible);
}

TEST(EvaluateRoute, FreightAndTimeFilters) {
    const auto heavy = make_instance({{{10, 0}, 0, 1000, 60}, {{20, 0}, 0, 1000, 60}});
    EXPECT_FALSE(evaluate_route(std::vector<std::size_t>{0, 1}, heavy).feasible);
    const auto late = make_instance({{{10, 0}, 500, 510}, {{20, 0}, 0, 100}});
    const auto ev = evaluate_route(std::vector<std::size_t>{0, 1}, late);
    EXPECT_FALSE(ev.feasible);
    EXPECT_EQ(ev.solver_calls, 0u);
}

TEST(EvaluateRoute, PreloadingIsObjectiveNeutral) {
    const auto inst = make_instance(
        {{{10, 0}, 0, 400}, {{20, 10}, 50, 600}, {{30, 0}, 100, 700}, {{25, -10}, 0, 900}}, {{20, 0}}, 150);
    PreloadCache cache;
    const std::vector<std::size_t> prefix{0, 1};
    const std::vector<std::size_t> full{0, 1, 2, 3};
    const auto cold_prefix = evaluate_route(prefix, inst);
    const auto warm_prefix = evaluate_route(prefix, inst, &cache);
    ASSERT_EQ(cold_prefix.feasible, warm_prefix.feasible);
    const auto cold = evaluate_route(full, inst);
    const auto warm = evaluate_route(full, inst, &cache);
    ASSERT_EQ(cold.feasible, warm.feasible);
    ASSERT_TRUE(cold.feasible);
    EXPECT_EQ(cold.completion(), warm.completion());
    EXPECT_EQ(cold.replenishments(), warm.replenishments());
    EXPECT_GT(warm.stats.vertices_preloaded, 0u);
}

TEST(SavingsSolve, MergesCompatibleCustomers) {
    const auto inst = make_instance({{{10, 0}}, {{12, 3}}});
    const auto sol = savings_solve(inst);
    ASSERT_EQ(sol.vehicles(), 1u);
    EXPECT_TRUE(sol.feasible);
    EXPECT_FALSE(sol.terminated);
    EXPECT_EQ(sol.routes[0].route.customers.size(), 2u);
}

TEST(SavingsSolve, FarApartWindowsStaySeparate) {
    // both windows close before the other customer can be reached
    const auto inst = make_instance({{{100, 0}, 100, 110}, {{-100, 0}, 100, 110}});
    const auto sol = savings_solve(inst);
    EXPECT_EQ(sol.vehicles(), 2u);
    EXPECT_TRUE(sol.feasible);
}

class SyntheticSavings : public ::testing::TestWithParam<instgen::Family> {};

TEST_P(SyntheticSavings, SolutionValidatesAndEvaluatorsAgree) {
    instgen::GeneratorConfig cfg;
    cfg.samples = 24;
    const auto raw = instgen::synthetic_solomon(GetParam(), 12, 17);
    const auto d3 = instgen::generate_instance(raw, Variant::depot3, cfg);
    double demand = 0;
    for (const auto& c : d3.customers) demand += c.demand;
    for (Variant v : {Variant::none, Variant::depot, Variant::depot3}) {
        const auto inst = instgen::with_variant(d3, v, cfg);
        const auto a = savings_solve(inst, {.evaluator = Evaluator::ddd});
        const auto b = savings_solve(inst, {.evaluator = Evaluator::ddd_pl});
        EXPECT_TRUE(a.feasible);
        EXPECT_GE(double(a.vehicles()), std::ceil(demand / inst.vehicle_capacity));
        EXPECT_EQ(a.vehicles(), b.vehicles());
        EXPECT_DOUBLE_EQ(a.total_completion(), b.total_completion());
        EXPECT_EQ(a.evaluations, b.evaluations);
        std::vector<int> seen(inst.customers.size(), 0);
        for (const auto& r : a.routes) {
            ASSERT_TRUE(r.schedule);
            auto viol = validate_schedule(r.problem, *r.schedule);
            EXPECT_FALSE(viol) << viol->message();
            if (v == Variant::none) {
                EXPECT_EQ(r.replenishments(), 0u);
            }
            for (auto c : r.route.customers) ++seen[c];
        }
        for (int s : seen) EXPECT_EQ(s, 1);
        // merging only ever shortens the total against one vehicle per customer
        double singles = 0;
        for (std::size_t c = 0; c < inst.customers.size(); ++c)
            singles += to_units(evaluate_route(std::vector<std::size_t>{c}, inst).completion());
        EXPECT_LE(a.vehicles(), inst.customers.size());
        EXPECT_LE(a.total_completion(), singles + 1e-9);
    }
}

INSTANTIATE_TEST_SUITE_P(Families, SyntheticSavings, ::testing::Values(instgen::Family::C1, instgen::Family::C2));

TEST(SavingsSolve, TimeLimitTerminates) {
    const auto inst = make_instance({{{10, 0}}, {{12, 3}}, {{14, 1}}});
    const auto sol = savings_solve(inst, {.evaluator = Evaluator::ddd, .time_limit = 0});
    EXPECT_TRUE(sol.terminated);
    EXPECT_EQ(sol.vehicles(), 3u);
}

TEST(Report, HeaderOnlyWhenEmpty) {
    EXPECT_EQ(report({}), std::string(kReportHeader) + "\n");
}

TEST(Report, RowsAndMeans) {
    std::vector<ReportRow> rows;
    for (int k = 0; k < 3; ++k) {
        ReportRow r;
        r.instance = "c" + std::to_string(k);
        r.family = "C1";
        r.solver = "DDD";
        r.charging = "none";
        r.vehicles = 3 + k;
        r.completion = 100 * (k + 1);
        r.terminated = k == 2;
        rows.push_back(r);
    }
    const auto agg = aggregate(rows);
    ASSERT_EQ(agg.size(), 1u);
    EXPECT_DOUBLE_EQ(agg[0].vehicles, 4);
    EXPECT_DOUBLE_EQ(agg[0].completion, 200);
    EXPECT_DOUBLE_EQ(agg[0].replenishments, 0);
    EXPECT_DOUBLE_EQ(agg[0].terminated, 1);
    const auto csv = report(rows);
    std::istringstream in(csv);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    ASSERT_EQ(lines.size(), 5u);
    EXPECT_EQ(lines[1], "c0,DDD,none,0,0,3,100.00,0,0,0");
    EXPECT_EQ(lines[4], "C1 (mean of 3),DDD,none,0,0,4,200.00,0,0,1");
}

TEST(Report, SingleInstanceWithoutStations) {
    const auto inst = make_instance({{{10, 0}}}, {}, 1000, Variant::none);
    const auto sol = savings_solve(inst);
    const auto row = make_row("micro", "C1", Evaluator::ddd, Variant::none, sol);
    EXPECT_EQ(row.replenishments, 0);
    EXPECT_EQ(row.charging, "none");
    EXPECT_EQ(row.vehicles, 1);
}

TEST(Report, FamilyFromName) {
    EXPECT_EQ(family_of("c104"), "C1");
    EXPECT_EQ(family_of("C2syn7"), "C2");
    EXPECT_EQ(family_of("rc201"), "RC2");
    EXPECT_EQ(family_of("1234"), "1234");
}

TEST(Report, ParseDropsMeansAndRoundTrips) {
    std::vector<ReportRow> rows{{"c101", "C1", "DDD", "none", 0.5, 0.01, 3, 120.25, 0, 0, 0},
                                {"c102", "C1", "DDD", "none", 1.5, 0.02, 5, 80.5, 2, 1, 1}};
    const auto back = parse_report(report(rows));
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].instance, "c102");
    EXPECT_EQ(back[1].family, "C1");
    EXPECT_DOUBLE_EQ(back[1].completion, 80.5);
    EXPECT_DOUBLE_EQ(back[1].terminated, 1);
    EXPECT_EQ(report(back), report(rows));
    EXPECT_THROW(parse_report("a,b,c\n"), std::invalid_argument);
    EXPECT_THROW(parse_report("c101,DDD,none,x,0,1,2,0,0,0\n"), std::invalid_argument);
}

} // namespace
} // namespace tdsched::savings
