#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "smartflow/domain.hpp"

namespace smartflow::ingest {

struct TripRecord {
    std::int64_t start_time = 0;  // seconds since epoch, no time zone
    std::int64_t end_time = 0;
    std::string start_station_id;
    std::string end_station_id;
    double start_lat = 0.0, start_lon = 0.0;
    double end_lat = 0.0, end_lon = 0.0;
};

/// Duration bounds are exclusive: a trip survives only if
/// min_seconds < duration < max_seconds.
struct CleansingRules {
    std::int64_t min_seconds = 60;
    std::int64_t max_seconds = 24 * 3600;
};

struct DropCounts {
    std::size_t malformed = 0;
    std::size_t missing_coordinates = 0;
    std::size_t invalid_duration = 0;
    std::size_t unknown_station = 0;

    std::size_t total() const {
        return malformed + missing_coordinates + invalid_duration + unknown_station;
    }
};

struct TripLoadResult {
    std::vector<TripRecord> trips;
    DropCounts dropped;
};

/// Applies the cleansing rules to parsed records. Idempotent. When
/// `known_ids` is non-null, trips touching a station id outside the set are
/// dropped as well.
std::vector<TripRecord> cleanse(const std::vector<TripRecord>& trips,
                                const CleansingRules& rules, DropCounts& counts,
                                const std::unordered_set<std::string>* known_ids = nullptr);

/// Parses a trip log CSV (Citi Bike legacy schema, columns located by header
/// name) and cleanses it. Malformed rows are skipped and counted, never fatal.
TripLoadResult load_trips(const std::string& path, const CleansingRules& rules = {},
                          const std::unordered_set<std::string>* known_ids = nullptr);

/// The k busiest station ids (departures + arrivals), busiest first,
/// ties broken by ascending id.
std::vector<std::string> select_top_k(const std::vector<TripRecord>& trips, std::size_t k);

/// Hourly inventory drift per station for one calendar day:
/// deltas(i, h) = arrivals - departures at station i during hour h.
class DemandProfile {
public:
    DemandProfile() = default;
    DemandProfile(std::vector<std::string> station_ids,
                  std::vector<std::vector<int>> deltas);

    int delta(std::size_t station, int hour) const { return deltas_.at(station).at(hour); }
    std::size_t station_count() const { return station_ids_.size(); }
    const std::vector<std::string>& station_ids() const { return station_ids_; }
    const std::vector<std::vector<int>>& deltas() const { return deltas_; }

    void save_csv(const std::string& path) const;

    /// Loads and reorders rows to match the registry; any mismatch in the
    /// station sets is an error.
    static DemandProfile load_csv(const std::string& path,
                                  const domain::StationRegistry& registry);

private:
    std::vector<std::string> station_ids_;
    std::vector<std::vector<int>> deltas_;  // station x 24
};

/// Builds the profile for the given day (days since epoch, see
/// util::parse_date). Departures count in the start hour, arrivals in the end
/// hour; endpoints at stations outside the registry are ignored.
DemandProfile build_demand_profile(const std::vector<TripRecord>& trips,
                                   const domain::StationRegistry& registry,
                                   std::int64_t date_days);

}  // namespace smartflow::ingest
