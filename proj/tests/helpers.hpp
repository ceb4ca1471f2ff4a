#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smartflow/domain.hpp"
#include "smartflow/ingest.hpp"
#include "smartflow/util.hpp"

namespace testutil {

/// Scratch directory that cleans itself up.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("smartflow_" + tag + "_" + std::to_string(std::random_device{}()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

/// n stations on a short line through Manhattan, uniform capacity.
inline smartflow::domain::StationRegistry make_registry(int n, int capacity,
                                                        int target = -1) {
    std::vector<smartflow::domain::Station> stations;
    for (int i = 0; i < n; ++i) {
        smartflow::domain::Station s;
        s.id = "S" + std::to_string(i);
        s.name = "Station " + std::to_string(i);
        s.lat = 40.70 + 0.01 * i;
        s.lon = -74.00 + 0.005 * i;
        s.capacity = capacity;
        s.target = target >= 0 ? target : smartflow::domain::default_target(capacity);
        stations.push_back(std::move(s));
    }
    return smartflow::domain::StationRegistry(std::move(stations));
}

inline smartflow::ingest::DemandProfile zero_profile(
    const smartflow::domain::StationRegistry& registry) {
    std::vector<std::string> ids;
    for (const auto& s : registry.stations()) ids.push_back(s.id);
    return smartflow::ingest::DemandProfile(
        ids, std::vector<std::vector<int>>(registry.size(), std::vector<int>(24, 0)));
}

inline smartflow::ingest::DemandProfile profile_of(
    const smartflow::domain::StationRegistry& registry,
    std::vector<std::vector<int>> deltas) {
    std::vector<std::string> ids;
    for (const auto& s : registry.stations()) ids.push_back(s.id);
    return smartflow::ingest::DemandProfile(ids, std::move(deltas));
}

/// The synthetic tidal network used by the directional acceptance check and
/// the heavier agent tests: five stations with capacity 16 and target 6.
/// Stations 0-1 are hubs, 2-4 are residential. The hour-5 morning drain
/// empties the residential side and clips the hubs at capacity, so every
/// episode turns into the same midday rebalancing puzzle regardless of the
/// random initial inventories; hour 6 settles the rush, the hour-17 evening
/// wave pushes an untended network further off balance, and hours 20/21
/// oscillate a couple of bikes late in the day.
inline smartflow::domain::StationRegistry tidal_registry() {
    return make_registry(5, 16, 6);
}

inline smartflow::ingest::DemandProfile tidal_profile() {
    std::vector<std::vector<int>> deltas(5, std::vector<int>(24, 0));
    // morning drain: residential 2..4 empty out, hubs 0..1 overflow
    deltas[0][5] = 32;  deltas[1][5] = 32;
    deltas[2][5] = -16; deltas[3][5] = -16; deltas[4][5] = -16;
    // post-rush settle
    deltas[0][6] = -5; deltas[1][6] = -5;
    deltas[2][6] = 3;  deltas[3][6] = 3;  deltas[4][6] = 2;
    // evening wave, away from the balanced point
    deltas[0][17] = 2; deltas[1][17] = 2;
    deltas[2][17] = -2; deltas[3][17] = -1; deltas[4][17] = -1;
    // late oscillation
    deltas[0][20] = 2; deltas[1][20] = -2;
    deltas[0][21] = -2; deltas[1][21] = 2;
    return profile_of(tidal_registry(), std::move(deltas));
}

/// Schema-valid random journey plan for the report tests. Station names mix
/// plain words and street-style names with digits.
inline nlohmann::json random_plan(std::mt19937_64& rng) {
    using nlohmann::json;
    static const std::vector<std::string> names = {
        "Station Alpha", "Station Beta",  "Station Gamma", "Harbor Square",
        "W 21 St & 6 Ave", "E 47 St & Park Ave", "Old Mill Road", "Canal Plaza",
    };
    std::uniform_int_distribution<int> trucks_d(0, 3);
    std::uniform_int_distribution<int> legs_d(1, 4);
    std::uniform_int_distribution<int> drop_d(1, 6);
    std::uniform_int_distribution<int> minutes_d(0, 23 * 60);
    std::uniform_real_distribution<double> km_d(0.05, 9.0);
    std::uniform_int_distribution<std::size_t> name_d(0, names.size() - 1);

    json trucks = json::array();
    const int n_trucks = trucks_d(rng);
    for (int t = 0; t < n_trucks; ++t) {
        const int n_legs = legs_d(rng);
        json legs = json::array();
        int load = 0;
        double total = 0.0;
        int clock = minutes_d(rng) / 2;
        for (int l = 0; l < n_legs; ++l) {
            const int drop = drop_d(rng);
            const double km = smartflow::util::round2(km_d(rng));
            load += drop;
            total += km;
            const int dispatch = clock;
            clock = std::min(clock + 5 + static_cast<int>(km * 3), 23 * 60 + 59);
            legs.push_back(json{
                {"station", names[name_d(rng)]},
                {"drop", drop},
                {"dispatch_time", smartflow::util::format_hhmm(dispatch)},
                {"arrival_time", smartflow::util::format_hhmm(clock)},
                {"km", km},
            });
            clock = std::min(clock + 7, 23 * 60 + 59);
        }
        trucks.push_back(json{
            {"truck_id", t + 1},
            {"pickup", {{"station", names[name_d(rng)]}, {"load", load}}},
            {"legs", legs},
            {"total_km", smartflow::util::round2(total)},
            {"tight_schedule", false},
        });
    }
    return json{{"date", "2016-07-01"}, {"trucks", trucks}};
}

}  // namespace testutil
