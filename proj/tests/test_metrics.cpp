#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "smartflow/errors.hpp"
#include "smartflow/metrics.hpp"

using namespace smartflow;
using domain::NetworkState;

namespace {

planner::Journey journey_with_legs(int n_legs) {
    planner::Journey j;
    j.load = n_legs;
    for (int i = 0; i < n_legs; ++i) {
        planner::JourneyLeg leg;
        leg.station = i;
        leg.drop = 1;
        j.legs.push_back(leg);
    }
    return j;
}

}  // namespace

TEST_CASE("imbalance is the L1 distance to the targets") {
    auto registry = domain::StationRegistry({
        domain::Station{"a", "A", 40.0, -74.0, 20, 6},
        domain::Station{"b", "B", 40.1, -74.1, 20, 6},
    });
    CHECK(metrics::imbalance(NetworkState{{10, 2}, 0}, registry) == 8);
    CHECK(metrics::imbalance(NetworkState{{6, 6}, 0}, registry) == 0);

    auto single = domain::StationRegistry({domain::Station{"a", "A", 40.0, -74.0, 10, 7}});
    CHECK(metrics::imbalance(NetworkState{{0}, 0}, single) == 7);
}

TEST_CASE("imbalance is zero exactly at the target point and never negative") {
    std::mt19937_64 rng(31);
    auto registry = testutil::make_registry(6, 12);
    std::uniform_int_distribution<int> inv(0, 12);
    for (int trial = 0; trial < 200; ++trial) {
        NetworkState s{{}, 0};
        for (int i = 0; i < 6; ++i) s.inventories.push_back(inv(rng));
        const int v = metrics::imbalance(s, registry);
        CHECK(v >= 0);
        bool at_target = true;
        for (int i = 0; i < 6; ++i) at_target &= s.inventories[i] == registry.target(i);
        CHECK((v == 0) == at_target);
    }
}

TEST_CASE("imbalance reduction percentages") {
    CHECK(metrics::imbalance_reduction(100, 5).percent == doctest::Approx(95.0));
    CHECK_FALSE(metrics::imbalance_reduction(100, 5).degenerate);
    CHECK(metrics::imbalance_reduction(50, 80).percent == doctest::Approx(-60.0));
    const auto degenerate = metrics::imbalance_reduction(0, 4);
    CHECK(degenerate.percent == 0.0);
    CHECK(degenerate.degenerate);
}

TEST_CASE("truck utilization counts multi-leg journeys") {
    SUBCASE("two of three journeys are multi-leg") {
        std::vector<planner::Journey> js{journey_with_legs(2), journey_with_legs(3),
                                         journey_with_legs(1)};
        const auto u = metrics::truck_utilization(js);
        CHECK(u.percent == doctest::Approx(200.0 / 3.0).epsilon(1e-12));
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%.2f", u.percent);
        CHECK(std::string(buf) == "66.67");
        CHECK_FALSE(u.empty_plan);
    }
    SUBCASE("all single-leg") {
        std::vector<planner::Journey> js{journey_with_legs(1), journey_with_legs(1)};
        CHECK(metrics::truck_utilization(js).percent == 0.0);
    }
    SUBCASE("all multi-leg") {
        std::vector<planner::Journey> js{journey_with_legs(2), journey_with_legs(4)};
        CHECK(metrics::truck_utilization(js).percent == 100.0);
    }
    SUBCASE("empty plan is flagged") {
        const auto u = metrics::truck_utilization({});
        CHECK(u.percent == 0.0);
        CHECK(u.empty_plan);
    }
}

TEST_CASE("task hour density") {
    CHECK(metrics::task_hour_density({}) == std::array<int, 24>{});
    std::vector<planner::TransferTask> tasks{{0, 1, 1, 2}, {0, 1, 1, 2}, {1, 0, 1, 14}};
    const auto bins = metrics::task_hour_density(tasks);
    CHECK(bins[2] == 2);
    CHECK(bins[14] == 1);
    int total = 0;
    for (int b : bins) total += b;
    CHECK(total == 3);
}

TEST_CASE("aggregation: mean, sample std and the degenerate single run") {
    auto run_with = [](double reduction) {
        metrics::RunResult r;
        r.imbalance_reduction_pct = reduction;
        return r;
    };
    SUBCASE("textbook three-run case") {
        const auto agg =
            metrics::aggregate_runs({run_with(90.0), run_with(95.0), run_with(100.0)});
        CHECK(agg.metrics.at("imbalance_reduction_pct").mean == doctest::Approx(95.0));
        CHECK(*agg.metrics.at("imbalance_reduction_pct").stddev == doctest::Approx(5.0));
    }
    SUBCASE("identical runs have zero spread") {
        const auto agg = metrics::aggregate_runs({run_with(88.0), run_with(88.0)});
        CHECK(*agg.metrics.at("imbalance_reduction_pct").stddev ==
              doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("single run leaves std absent") {
        const auto agg = metrics::aggregate_runs({run_with(88.0)});
        CHECK_FALSE(agg.metrics.at("imbalance_reduction_pct").stddev.has_value());
        CHECK(agg.to_json().at("metrics").at("imbalance_reduction_pct").at("std").is_null());
    }
    SUBCASE("empty input is an error") {
        CHECK_THROWS_AS(metrics::aggregate_runs({}), ContractViolation);
    }
}

TEST_CASE("aggregate matches an independent two-pass oracle to 1e-12") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> v(-50.0, 150.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<metrics::RunResult> runs;
        std::vector<double> xs;
        for (int k = 0; k < 7; ++k) {
            metrics::RunResult r;
            r.total_km = v(rng);
            xs.push_back(r.total_km);
            runs.push_back(r);
        }
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= xs.size();
        double acc = 0.0;
        for (double x : xs) acc += (x - mean) * (x - mean);
        const double sd = std::sqrt(acc / (xs.size() - 1));

        const auto agg = metrics::aggregate_runs(runs);
        CHECK(std::abs(agg.metrics.at("total_km").mean - mean) < 1e-12);
        CHECK(std::abs(*agg.metrics.at("total_km").stddev - sd) < 1e-12);
    }
}

TEST_CASE("aggregate is permutation-invariant") {
    std::vector<metrics::RunResult> runs;
    for (double v : {12.0, 99.5, 40.25, 7.75}) {
        metrics::RunResult r;
        r.total_km = v;
        r.imbalance_reduction_pct = v / 2;
        runs.push_back(r);
    }
    const auto a = metrics::aggregate_runs(runs);
    std::reverse(runs.begin(), runs.end());
    const auto b = metrics::aggregate_runs(runs);
    CHECK(a.metrics.at("total_km").mean == b.metrics.at("total_km").mean);
    CHECK(*a.metrics.at("total_km").stddev == *b.metrics.at("total_km").stddev);
}

TEST_CASE("run results serialize and parse back") {
    metrics::RunResult r;
    r.seed = 42;
    r.imbalance_initial = 14;
    r.imbalance_final = 2;
    r.imbalance_reduction_pct = 85.7142;
    r.total_km = 12.5;
    r.truck_utilization_pct = 66.67;
    r.final_loss = 0.015;
    r.task_hours[3] = 4;
    r.episode_rewards = {1.0, -2.0, 3.5};
    r.moving_avg = {1.0, -0.5, 0.833};

    const auto echo = metrics::RunResult::from_json(r.to_json());
    CHECK(echo.seed == r.seed);
    CHECK(echo.imbalance_initial == r.imbalance_initial);
    CHECK(echo.task_hours == r.task_hours);
    CHECK(echo.episode_rewards == r.episode_rewards);
    CHECK(echo.moving_avg == r.moving_avg);
}

TEST_CASE("markdown summary mirrors the aggregate") {
    metrics::RunResult a, b;
    a.imbalance_reduction_pct = 90.0;
    b.imbalance_reduction_pct = 100.0;
    a.total_km = 30.0;
    b.total_km = 40.0;
    const auto md = metrics::aggregate_markdown(metrics::aggregate_runs({a, b}));
    CHECK(md.find("Imbalance Reduction") != std::string::npos);
    CHECK(md.find("95.00") != std::string::npos);
    CHECK(md.find("Truck Utilisation Rate") != std::string::npos);
    CHECK(md.find("Total Fleet Distance") != std::string::npos);
    CHECK(md.find("Final Policy Loss") != std::string::npos);
}
