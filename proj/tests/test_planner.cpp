#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "smartflow/errors.hpp"
#include "smartflow/planner.hpp"
#include "smartflow/util.hpp"

using namespace smartflow;
using planner::DistanceProvider;
using planner::Journey;
using planner::TransferTask;

namespace {

env::StepRecord step_at(int hour, int source, int dest, double reward) {
    env::StepRecord r;
    r.info.hour_executed = hour;
    r.action = {source, dest};
    r.reward = reward;
    return r;
}

/// Line geometry: station i sits at kilometre position[i].
DistanceProvider line_provider(const std::vector<double>& position) {
    const std::size_t n = position.size();
    std::vector<std::vector<double>> km(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) km[i][j] = std::abs(position[i] - position[j]);
        }
    }
    return DistanceProvider::from_matrix(std::move(km));
}

int total_delivered(const std::vector<Journey>& journeys) {
    int total = 0;
    for (const Journey& j : journeys) {
        for (const auto& leg : j.legs) total += leg.drop;
    }
    return total;
}

}  // namespace

TEST_CASE("haversine distance matches an independent spherical oracle") {
    // oracle: spherical law of cosines, a different formulation of the same
    // great circle
    auto oracle = [](double lat1, double lon1, double lat2, double lon2) {
        const double rad = 3.14159265358979323846 / 180.0;
        const double c = std::sin(lat1 * rad) * std::sin(lat2 * rad) +
                         std::cos(lat1 * rad) * std::cos(lat2 * rad) *
                             std::cos((lon2 - lon1) * rad);
        return 6371.0 * std::acos(std::clamp(c, -1.0, 1.0));
    };
    const double got = planner::haversine_km(40.7128, -74.0060, 40.7614, -73.9776);
    const double want = oracle(40.7128, -74.0060, 40.7614, -73.9776);
    CHECK(std::abs(got - want) / want < 1e-6);
    CHECK(planner::haversine_km(40.7128, -74.0060, 40.7128, -74.0060) == 0.0);
}

TEST_CASE("circuity factor scales distances exactly") {
    auto registry = testutil::make_registry(3, 10);
    const auto flat = DistanceProvider::haversine(registry, 1.0);
    const auto road = DistanceProvider::haversine(registry, 1.3);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            CHECK(road.distance_km(i, j) == doctest::Approx(1.3 * flat.distance_km(i, j))
                                                .epsilon(1e-15));
        }
    }
    CHECK(flat.distance_km(0, 0) == 0.0);
    CHECK(flat.distance_km(0, 1) > 0.0);
    CHECK(flat.distance_km(0, 1) == flat.distance_km(1, 0));
}

TEST_CASE("distance matrix files are validated") {
    testutil::TempDir tmp("dist");
    auto registry = testutil::make_registry(2, 10);

    util::write_file(tmp.file("good.csv"), "id,S0,S1\nS0,0,2.5\nS1,2.5,0\n");
    const auto p = DistanceProvider::from_matrix_file(tmp.file("good.csv"), registry);
    CHECK(p.distance_km(0, 1) == doctest::Approx(2.5));

    util::write_file(tmp.file("missing_station.csv"), "id,S0\nS0,0\n");
    CHECK_THROWS_AS(DistanceProvider::from_matrix_file(tmp.file("missing_station.csv"), registry),
                    ConfigError);
    util::write_file(tmp.file("missing_entry.csv"), "id,S0,S1\nS0,0,\nS1,2.5,0\n");
    CHECK_THROWS_AS(DistanceProvider::from_matrix_file(tmp.file("missing_entry.csv"), registry),
                    ConfigError);
    util::write_file(tmp.file("zero_offdiag.csv"), "id,S0,S1\nS0,0,0\nS1,2.5,0\n");
    CHECK_THROWS_AS(DistanceProvider::from_matrix_file(tmp.file("zero_offdiag.csv"), registry),
                    ConfigError);
}

TEST_CASE("strategic plan extraction filters and merges positive steps") {
    SUBCASE("no positive rewards, no tasks") {
        env::EpisodeLog log;
        for (int h = 0; h < 5; ++h) log.steps.push_back(step_at(h, 0, 1, -1.0));
        CHECK(planner::extract_strategic_plan(log).empty());
    }
    SUBCASE("consecutive identical moves merge with the earliest hour") {
        env::EpisodeLog log;
        log.steps.push_back(step_at(2, 0, 1, 0.4));
        log.steps.push_back(step_at(3, 0, 1, 0.3));
        const auto tasks = planner::extract_strategic_plan(log);
        REQUIRE(tasks.size() == 1);
        CHECK(tasks[0] == TransferTask{0, 1, 2, 2});
    }
    SUBCASE("interruptions and pair changes split tasks") {
        env::EpisodeLog log;
        log.steps.push_back(step_at(1, 0, 1, 0.4));
        log.steps.push_back(step_at(2, 0, 1, -1.0));  // breaks the run
        log.steps.push_back(step_at(3, 0, 1, 0.2));
        log.steps.push_back(step_at(4, 2, 1, 0.2));   // different pair
        const auto tasks = planner::extract_strategic_plan(log);
        REQUIRE(tasks.size() == 3);
        CHECK(tasks[0] == TransferTask{0, 1, 1, 1});
        CHECK(tasks[1] == TransferTask{0, 1, 1, 3});
        CHECK(tasks[2] == TransferTask{2, 1, 1, 4});
    }
}

TEST_CASE("task count equals positive-reward runs (filter-then-group oracle)") {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> reward_d(-2.0, 2.0);
    std::uniform_int_distribution<int> st_d(0, 3);
    for (int trial = 0; trial < 200; ++trial) {
        env::EpisodeLog log;
        for (int h = 0; h < 24; ++h) {
            int s = st_d(rng), d = st_d(rng);
            if (s == d) d = (d + 1) % 4;
            log.steps.push_back(step_at(h, s, d, reward_d(rng)));
        }
        // oracle: group the filtered step list by runs of equal (source,dest)
        // over consecutive step indices
        int runs = 0;
        int quantity = 0;
        for (std::size_t i = 0; i < log.steps.size(); ++i) {
            if (log.steps[i].reward <= 0.0) continue;
            ++quantity;
            const bool continues = i > 0 && log.steps[i - 1].reward > 0.0 &&
                                   log.steps[i - 1].action == log.steps[i].action;
            if (!continues) ++runs;
        }
        const auto tasks = planner::extract_strategic_plan(log);
        CHECK(tasks.size() == static_cast<std::size_t>(runs));
        int total = 0;
        for (const auto& t : tasks) total += t.quantity;
        CHECK(total == quantity);
    }
}

TEST_CASE("greedy journey construction follows the documented trace") {
    SUBCASE("surplus A serves nearest deficit first") {
        // A at 0, B at 1 (nearer), C at 3
        const auto provider = line_provider({0.0, 1.0, 3.0});
        const std::vector<TransferTask> tasks{{0, 1, 2, 8}, {0, 2, 1, 9}};
        const auto journeys = planner::build_journeys(tasks, 5, provider);
        REQUIRE(journeys.size() == 1);
        CHECK(journeys[0].pickup_station == 0);
        CHECK(journeys[0].load == 3);
        REQUIRE(journeys[0].legs.size() == 2);
        CHECK(journeys[0].legs[0].station == 1);
        CHECK(journeys[0].legs[0].drop == 2);
        CHECK(journeys[0].legs[1].station == 2);
        CHECK(journeys[0].legs[1].drop == 1);
        CHECK(journeys[0].total_km == doctest::Approx(1.0 + 2.0));
    }
    SUBCASE("capacity splits one oversized task into two journeys") {
        const auto provider = line_provider({0.0, 2.0});
        const std::vector<TransferTask> tasks{{0, 1, 6, 8}};
        const auto journeys = planner::build_journeys(tasks, 4, provider);
        REQUIRE(journeys.size() == 2);
        CHECK(journeys[0].load == 4);
        CHECK(journeys[1].load == 2);
        CHECK(journeys[0].legs[0].station == 1);
        CHECK(journeys[1].legs[0].station == 1);
    }
    SUBCASE("deterministic: equal inputs give identical journeys") {
        const auto provider = line_provider({0.0, 1.0, 2.0, 5.0});
        const std::vector<TransferTask> tasks{{0, 1, 2, 3}, {3, 2, 2, 5}, {0, 2, 1, 7}};
        const auto a = planner::build_journeys(tasks, 3, provider);
        const auto b = planner::build_journeys(tasks, 3, provider);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].pickup_station == b[i].pickup_station);
            CHECK(a[i].load == b[i].load);
            CHECK(a[i].total_km == b[i].total_km);
        }
    }
}

TEST_CASE("exhaustive small instances: delivery, conservation and capacity") {
    // every instance with <= 4 stations and up to two tasks of quantity <= 3
    const auto provider = line_provider({0.0, 1.5, 2.0, 4.0});
    for (int s1 = 0; s1 < 4; ++s1)
        for (int d1 = 0; d1 < 4; ++d1)
            for (int q1 = 1; q1 <= 3; ++q1)
                for (int s2 = 0; s2 < 4; ++s2)
                    for (int d2 = 0; d2 < 4; ++d2)
                        for (int q2 = 1; q2 <= 3; ++q2) {
                            if (s1 == d1 || s2 == d2) continue;
                            const std::vector<TransferTask> tasks{{s1, d1, q1, 4},
                                                                  {s2, d2, q2, 9}};
                            for (int cap : {1, 2, 5}) {
                                const auto journeys =
                                    planner::build_journeys(tasks, cap, provider);

                                // oracle quantities recomputed from scratch
                                std::vector<int> surplus(4, 0), deficit(4, 0);
                                for (const auto& t : tasks) {
                                    surplus[t.source] += t.quantity;
                                    deficit[t.dest] += t.quantity;
                                }
                                const int expect = std::min(
                                    std::accumulate(surplus.begin(), surplus.end(), 0),
                                    std::accumulate(deficit.begin(), deficit.end(), 0));
                                CHECK(total_delivered(journeys) == expect);

                                std::vector<int> picked(4, 0), dropped(4, 0);
                                for (const auto& j : journeys) {
                                    CHECK(j.load <= cap);
                                    int on_truck = j.load;
                                    int drops = 0;
                                    picked[j.pickup_station] += j.load;
                                    for (const auto& leg : j.legs) {
                                        CHECK(on_truck >= leg.drop);
                                        on_truck -= leg.drop;
                                        drops += leg.drop;
                                        dropped[leg.station] += leg.drop;
                                    }
                                    CHECK(drops == j.load);  // truck always empties
                                }
                                for (int i = 0; i < 4; ++i) {
                                    CHECK(picked[i] <= surplus[i]);
                                    CHECK(dropped[i] <= deficit[i]);
                                }
                            }
                        }
}

TEST_CASE("backward scheduling reproduces the hand-traced dispatch times") {
    // station 0 = depot surplus, 1 and 2 are deficits; speed 30 km/h so
    // 10 km takes 20 minutes and 5 km takes 10 minutes
    SUBCASE("single leg: deadline 08:00, travel 20 min, load 5 min -> dispatch 07:35") {
        const auto provider = line_provider({0.0, 10.0});
        const std::vector<TransferTask> tasks{{0, 1, 2, 8}};
        auto journeys = planner::build_journeys(tasks, 5, provider);
        journeys = planner::schedule_journeys(journeys, tasks, provider, 30.0, 5);
        REQUIRE(journeys.size() == 1);
        REQUIRE(journeys[0].legs.size() == 1);
        const auto& leg = journeys[0].legs[0];
        CHECK(leg.deadline_minutes == 480);
        CHECK(leg.arrival_minutes == 480);
        CHECK(leg.dispatch_minutes == 455);
        CHECK(util::format_hhmm(leg.dispatch_minutes) == "07:35");
        CHECK_FALSE(journeys[0].tight_schedule);
    }
    SUBCASE("two legs chain backwards: second travel 10 min forces 07:45 arrival") {
        const auto provider = line_provider({0.0, 10.0, 15.0});
        const std::vector<TransferTask> tasks{{0, 1, 1, 8}, {0, 2, 1, 8}};
        auto journeys = planner::build_journeys(tasks, 5, provider);
        journeys = planner::schedule_journeys(journeys, tasks, provider, 30.0, 5);
        REQUIRE(journeys.size() == 1);
        REQUIRE(journeys[0].legs.size() == 2);
        CHECK(journeys[0].legs[1].arrival_minutes == 480);
        CHECK(journeys[0].legs[0].arrival_minutes == 465);  // 07:45
        CHECK(util::format_hhmm(journeys[0].legs[0].arrival_minutes) == "07:45");
    }
    SUBCASE("dispatch before midnight clamps to 00:00 and flags the journey") {
        const auto provider = line_provider({0.0, 50.0});  // 100 min at 30 km/h
        const std::vector<TransferTask> tasks{{0, 1, 1, 1}};  // needed by 01:00
        auto journeys = planner::build_journeys(tasks, 5, provider);
        journeys = planner::schedule_journeys(journeys, tasks, provider, 30.0, 5);
        REQUIRE(journeys.size() == 1);
        CHECK(journeys[0].tight_schedule);
        CHECK(journeys[0].legs[0].dispatch_minutes == 0);
        CHECK(util::format_hhmm(journeys[0].legs[0].dispatch_minutes) == "00:00");
    }
    SUBCASE("journeys come back most-urgent-first with 1-based truck ids") {
        const auto provider = line_provider({0.0, 1.0, 2.0, 3.0});
        const std::vector<TransferTask> tasks{{0, 1, 1, 20}, {2, 3, 1, 3}};
        auto journeys = planner::build_journeys(tasks, 1, provider);
        journeys = planner::schedule_journeys(journeys, tasks, provider, 30.0, 5);
        REQUIRE(journeys.size() == 2);
        CHECK(journeys[0].truck_id == 1);
        CHECK(journeys[0].legs[0].deadline_minutes == 180);
        CHECK(journeys[1].truck_id == 2);
        CHECK(journeys[1].legs[0].deadline_minutes == 1200);
    }
}

TEST_CASE("random schedules respect deadlines unless flagged tight") {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> n_d(2, 6);
    std::uniform_int_distribution<int> task_d(1, 5);
    std::uniform_int_distribution<int> qty_d(1, 4);
    std::uniform_int_distribution<int> hour_d(0, 23);
    std::uniform_real_distribution<double> pos_d(0.0, 12.0);

    for (int trial = 0; trial < 100; ++trial) {
        const int n = n_d(rng);
        std::vector<double> pos;
        for (int i = 0; i < n; ++i) pos.push_back(pos_d(rng));
        std::vector<std::vector<double>> km(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j) km[i][j] = std::abs(pos[i] - pos[j]) + 1e-6;
        const auto provider = DistanceProvider::from_matrix(km);

        std::vector<TransferTask> tasks;
        const int k = task_d(rng);
        for (int t = 0; t < k; ++t) {
            int s = std::uniform_int_distribution<int>(0, n - 1)(rng);
            int d = std::uniform_int_distribution<int>(0, n - 1)(rng);
            if (s == d) d = (d + 1) % n;
            tasks.push_back({s, d, qty_d(rng), hour_d(rng)});
        }
        auto journeys = planner::build_journeys(tasks, 6, provider);
        journeys = planner::schedule_journeys(journeys, tasks, provider, 18.0, 5);
        for (const auto& j : journeys) {
            int prev_arrival = -1;
            for (const auto& leg : j.legs) {
                if (!j.tight_schedule) {
                    CHECK(leg.arrival_minutes <= leg.deadline_minutes);
                }
                CHECK(leg.arrival_minutes >= prev_arrival);
                prev_arrival = leg.arrival_minutes;
                CHECK(leg.dispatch_minutes >= 0);
            }
        }
    }
}

TEST_CASE("chained journeys never beat the naive round-trip baseline on km") {
    std::mt19937_64 rng(2718);
    std::uniform_int_distribution<int> n_d(3, 10);
    std::uniform_int_distribution<int> k_d(1, 6);
    std::uniform_int_distribution<int> qty_d(1, 3);
    std::uniform_int_distribution<int> hour_d(0, 23);
    std::uniform_real_distribution<double> coord_d(0.0, 10.0);

    int strict = 0;
    const int trials = 50;
    for (int trial = 0; trial < trials; ++trial) {
        const int n = n_d(rng);
        std::vector<std::vector<double>> km(n, std::vector<double>(n, 0.0));
        std::vector<std::pair<double, double>> pts;
        for (int i = 0; i < n; ++i) pts.push_back({coord_d(rng), coord_d(rng)});
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (i != j)
                    km[i][j] = std::hypot(pts[i].first - pts[j].first,
                                          pts[i].second - pts[j].second) + 1e-6;
        const auto provider = DistanceProvider::from_matrix(km);

        std::vector<TransferTask> tasks;
        const int k = k_d(rng);
        for (int t = 0; t < k; ++t) {
            int s = std::uniform_int_distribution<int>(0, n - 1)(rng);
            int d = std::uniform_int_distribution<int>(0, n - 1)(rng);
            if (s == d) d = (d + 1) % n;
            tasks.push_back({s, d, qty_d(rng), hour_d(rng)});
        }

        double naive = 0.0;
        for (const auto& t : tasks) naive += 2.0 * provider.distance_km(t.source, t.dest);
        double chained = 0.0;
        for (const auto& j : planner::build_journeys(tasks, 8, provider)) chained += j.total_km;

        CHECK(chained <= naive + 1e-9);
        if (chained < naive - 1e-9) ++strict;
    }
    CHECK(strict * 2 >= trials);
}

TEST_CASE("plan documents validate and carry the exact schema") {
    auto registry = testutil::make_registry(3, 10);
    const auto provider = DistanceProvider::haversine(registry, 1.0);
    const std::vector<TransferTask> tasks{{0, 1, 2, 8}, {0, 2, 1, 9}};
    auto journeys = planner::build_journeys(tasks, 5, provider);
    journeys = planner::schedule_journeys(journeys, tasks, provider, 20.0, 5);
    const auto plan = planner::plan_to_json(journeys, registry, "2016-07-01");

    CHECK(planner::validate_plan(plan).empty());
    CHECK(plan.at("date") == "2016-07-01");
    REQUIRE(plan.at("trucks").size() == 1);
    const auto& truck = plan.at("trucks")[0];
    CHECK(truck.at("pickup").at("station") == "Station 0");
    CHECK(truck.at("pickup").at("load") == 3);
    CHECK(truck.at("legs").size() == 2);
    CHECK(truck.at("legs")[0].contains("dispatch_time"));
    CHECK(truck.at("legs")[0].contains("arrival_time"));

    SUBCASE("violations name their paths") {
        auto broken = plan;
        broken["trucks"][0]["legs"][0]["drop"] = 0;
        const auto bad = planner::validate_plan(broken);
        CHECK_FALSE(bad.empty());
        bool found = false;
        for (const auto& p : bad) {
            if (p.find("legs[0].drop") != std::string::npos) found = true;
        }
        CHECK(found);

        CHECK_FALSE(planner::validate_plan(nlohmann::json::array()).empty());
        auto no_date = plan;
        no_date.erase("date");
        CHECK_FALSE(planner::validate_plan(no_date).empty());
    }
}
