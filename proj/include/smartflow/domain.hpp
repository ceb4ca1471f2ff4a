#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace smartflow::domain {

/// One docking station. Immutable once loaded.
struct Station {
    std::string id;
    std::string name;
    double lat = 0.0;
    double lon = 0.0;
    int capacity = 1;
    int target = 0;  // desired balanced inventory, 0 <= target <= capacity
};

/// Ordered station set; the row order fixes the station indexing used by
/// every state vector, action index and demand-profile row in the system.
class StationRegistry {
public:
    StationRegistry() = default;
    explicit StationRegistry(std::vector<Station> stations);

    static StationRegistry load_csv(const std::string& path);
    void save_csv(const std::string& path) const;

    std::size_t size() const { return stations_.size(); }
    const Station& at(std::size_t i) const { return stations_.at(i); }
    const std::vector<Station>& stations() const { return stations_; }

    int capacity(std::size_t i) const { return stations_.at(i).capacity; }
    int target(std::size_t i) const { return stations_.at(i).target; }

    /// Index of a station id, or -1 when absent.
    int index_of(const std::string& id) const;

private:
    void validate() const;
    std::vector<Station> stations_;
};

/// Default balanced level when the registry file gives none.
inline int default_target(int capacity) { return capacity / 2; }

/// The MDP state: per-station inventories plus the hour of day.
struct NetworkState {
    std::vector<int> inventories;
    int hour = 0;

    /// Raw observation encoding: inventories followed by the hour (length N+1).
    std::vector<double> to_vector() const;

    /// Network input encoding: inventories scaled by per-station capacity,
    /// hour scaled by 23, all in [0, 1].
    std::vector<double> normalized(const StationRegistry& registry) const;

    bool operator==(const NetworkState&) const = default;
};

/// Move one bike from `source` to `dest`.
struct Action {
    int source = 0;
    int dest = 0;
    bool operator==(const Action&) const = default;
};

struct RewardConstants {
    double scale = 1.0;        // positive reward per unit of relative need served
    double wasted = -1.0;      // feasible move to a station with no need
    double infeasible = -10.0; // attempted move that violates feasibility
};

/// Every tunable in one place. Defaults are the documented ones; the CLI
/// config file and flags override them.
struct SimConfig {
    // MDP / training
    double gamma = 0.99;
    double learning_rate = 1e-4;
    int buffer_capacity = 50000;
    int learning_starts = 1000;
    int train_freq = 4;
    int target_sync_interval = 1000;
    int hidden1 = 128;
    int hidden2 = 128;
    int batch_size = 64;
    std::int64_t total_timesteps = 1000000;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay_fraction = 0.1;
    int moving_avg_window = 100;

    // environment
    int episode_hours = 24;
    RewardConstants rewards;

    // tactical planning
    int truck_capacity = 20;
    double truck_speed_kmh = 20.0;
    double circuity_factor = 1.3;
    int load_minutes_per_stop = 5;

    // ingest cleansing bounds, seconds
    std::int64_t min_trip_seconds = 60;
    std::int64_t max_trip_seconds = 24 * 3600;

    std::vector<std::uint64_t> seeds = {1, 2, 3};

    void validate() const;  // throws ConfigError
};

/// Flattens the ordered-pair action space (diagonal skipped) into
/// [0, n*(n-1)), lexicographic over (source, dest).
int encode_action(int source, int dest, int n);

/// Inverse of encode_action.
Action decode_action(int index, int n);

inline int action_space_size(int n) { return n * (n - 1); }

/// Shortfall of station j below its target, never negative.
int need(const NetworkState& state, int j, const StationRegistry& registry);

}  // namespace smartflow::domain
