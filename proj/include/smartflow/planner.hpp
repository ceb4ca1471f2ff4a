#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smartflow/domain.hpp"
#include "smartflow/env.hpp"

namespace smartflow::planner {

/// A strategically required move of `quantity` bikes, needed by `need_hour`.
struct TransferTask {
    int source = 0;
    int dest = 0;
    int quantity = 1;
    int need_hour = 0;

    bool operator==(const TransferTask&) const = default;
};

struct JourneyLeg {
    int station = 0;
    int drop = 0;
    double km = 0.0;               // distance from the previous stop
    int deadline_minutes = 0;      // earliest need among the tasks this leg serves
    int arrival_minutes = 0;
    int dispatch_minutes = 0;      // departure toward this leg
};

struct Journey {
    int truck_id = 0;
    int pickup_station = 0;
    int load = 0;
    std::vector<JourneyLeg> legs;
    double total_km = 0.0;
    bool tight_schedule = false;
};

/// Great-circle distance on a 6371 km sphere.
double haversine_km(double lat1, double lon1, double lat2, double lon2);

/// Station-to-station road distance estimates: either haversine scaled by a
/// circuity factor, or an explicit kilometre matrix loaded from file.
class DistanceProvider {
public:
    static DistanceProvider haversine(const domain::StationRegistry& registry,
                                      double circuity_factor);
    static DistanceProvider from_matrix(std::vector<std::vector<double>> km);

    /// CSV: header `id,<id>,...`, one row per station. Every registry station
    /// must appear on both axes; a missing or non-positive off-diagonal entry
    /// is a configuration error.
    static DistanceProvider from_matrix_file(const std::string& path,
                                             const domain::StationRegistry& registry);

    double distance_km(int i, int j) const;
    std::size_t size() const { return km_.size(); }

private:
    explicit DistanceProvider(std::vector<std::vector<double>> km);
    std::vector<std::vector<double>> km_;
};

/// Positive-reward steps become transfer tasks; consecutive positive steps
/// with the same source/dest pair merge into one task keeping the earliest
/// hour.
std::vector<TransferTask> extract_strategic_plan(const env::EpisodeLog& log);

/// Greedy chaining: repeatedly load a truck at the station with the greatest
/// remaining surplus and drive it to the nearest stations with remaining
/// deficits until it runs empty. Ties break toward the lowest station index.
/// Stops when either side of the plan is exhausted; leftovers are not forced.
std::vector<Journey> build_journeys(const std::vector<TransferTask>& tasks,
                                    int truck_capacity, const DistanceProvider& provider);

/// Backward just-in-time scheduling. Deadlines come from the tasks each drop
/// consumes (earliest-need first); arrivals chain backwards through travel and
/// loading time. A dispatch before 00:00 clamps to midnight and flags the
/// journey tight_schedule. Journeys come back sorted most-urgent-first with
/// 1-based truck ids.
std::vector<Journey> schedule_journeys(std::vector<Journey> journeys,
                                       const std::vector<TransferTask>& tasks,
                                       const DistanceProvider& provider,
                                       double speed_kmh, int load_minutes);

/// Travel time in whole minutes, rounded up so schedules stay conservative.
int travel_minutes(double km, double speed_kmh);

/// The journey plan document consumed by the report layer. Kilometres are
/// rounded to two decimals; times are HH:MM strings.
nlohmann::json plan_to_json(const std::vector<Journey>& journeys,
                            const domain::StationRegistry& registry,
                            const std::string& date);

/// Returns the list of violated paths, empty when the document is valid.
std::vector<std::string> validate_plan(const nlohmann::json& plan);

}  // namespace smartflow::planner
