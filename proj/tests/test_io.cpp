#include "tdsched/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>

#include "support.hpp"

namespace tdsched {
namespace {

using testing::constant;
using testing::drop_pair;
using testing::refill_pair;
using testing::pwl;
using testing::u;

TEST(PwlJson, RoundTripKeepsJumps) {
    const auto f = pwl({{0, 5}, {2, 5}, {2, 1}, {4, 1}});
    EXPECT_EQ(pwl_from_json(pwl_to_json(f)), f);
}

TEST(PwlJson, BareNumberIsConstant) { EXPECT_EQ(pwl_from_json(json(2.5)), constant(2.5)); }

TEST(PwlJson, RejectsMalformedBreakpoints) {
    EXPECT_THROW(pwl_from_json(json{{"points", json::array()}}), ModelError);
    EXPECT_THROW(pwl_from_json(json::parse(R"({"breakpoints": [[0, 1, 2]]})")), ModelError);
    EXPECT_THROW(pwl_from_json(json::parse(R"({"breakpoints": [[2, 1], [0, 1]]})")), ModelError);
}

TEST(ProblemJson, RoundTrip) {
    for (const Problem& p : {drop_pair(), refill_pair()}) {
        const Problem back = problem_from_json(problem_to_json(p));
        ASSERT_EQ(back.size(), p.size());
        EXPECT_EQ(back.eps, p.eps);
        EXPECT_EQ(back.capacity, p.capacity);
        for (std::size_t i = 0; i < p.size(); ++i) {
            EXPECT_EQ(back[i].earliest, p[i].earliest);
            EXPECT_EQ(back[i].latest, p[i].latest);
            EXPECT_EQ(back[i].duration, p[i].duration);
            EXPECT_EQ(back[i].consumption, p[i].consumption);
            EXPECT_EQ(back[i].replenishment, p[i].replenishment);
            EXPECT_EQ(back[i].mode, p[i].mode);
        }
    }
}

TEST(ProblemJson, DefaultsEpsAndMode) {
    const auto j = json::parse(R"({"Q": 4, "activities": [
        {"e": 0, "l": 4, "tau": 2, "rho": 3, "delta": 2},
        {"e": 2, "l": 8, "tau": 1, "rho": 3}]})");
    const Problem p = problem_from_json(j);
    EXPECT_EQ(p.eps, u(1));
    EXPECT_EQ(p[0].mode, ReplenishmentMode::optional);
    EXPECT_EQ(p[1].mode, ReplenishmentMode::forbidden);
}

TEST(ProblemJson, ErrorsAreModelErrors) {
    EXPECT_THROW(problem_from_json(json::parse(R"({"activities": []})")), ModelError);
    EXPECT_THROW(problem_from_json(json::parse(R"({"Q": 4, "activities": [{"e": 0, "l": 4, "tau": 1}]})")),
                 ModelError);
    EXPECT_THROW(problem_from_json(json::parse(R"({"Q": 4, "activities": [
        {"e": 5, "l": 4, "tau": 1, "rho": 1}]})")),
                 ModelError);
    EXPECT_THROW(problem_from_json(json::parse(R"({"Q": 4, "activities": [
        {"e": 0, "l": 4, "tau": 1, "rho": 1, "delta": 1, "mode": "sometimes"}]})")),
                 ModelError);
}

TEST(ScheduleJson, FeasibleAndInfeasible) {
    const Problem p = refill_pair();
    const Schedule s = make_schedule(p, {0, u(4)}, {true, false});
    const json j = schedule_to_json(s, {});
    EXPECT_EQ(j.at("status"), "optimal");
    EXPECT_EQ(j.at("t"), json::parse("[0.0, 4.0]"));
    EXPECT_EQ(j.at("y"), json::parse("[1, 0]"));
    EXPECT_DOUBLE_EQ(j.at("completion").get<double>(), 5.0);

    const json none = schedule_to_json(std::nullopt, {});
    EXPECT_EQ(none.at("status"), "infeasible");
    EXPECT_FALSE(none.contains("t"));
}

TEST(PathJson, RoundTripIsOneBased) {
    const std::vector<Vertex> path{{0, u(2)}, {1, u(4.5)}};
    const json j = path_to_json(path);
    EXPECT_EQ(j, json::parse("[[1, 2.0], [2, 4.5]]"));
    const auto back = path_from_json(j);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].activity, 1u);
    EXPECT_EQ(back[1].time, u(4.5));
    EXPECT_EQ(path_from_json(json{{"path", j}}).size(), 2u);
}

TEST(Files, WriteThenRead) {
    const auto file = std::filesystem::temp_directory_path() / "tdsched_io_test.json";
    write_text_file(file.string(), problem_to_json(drop_pair()).dump());
    EXPECT_EQ(problem_from_json(read_json_file(file.string())).size(), 2u);
    write_text_file(file.string(), "{ not json");
    EXPECT_THROW(read_json_file(file.string()), std::runtime_error);
    std::filesystem::remove(file);
    EXPECT_THROW(read_json_file(file.string()), std::runtime_error);
}

} // namespace
} // namespace tdsched
