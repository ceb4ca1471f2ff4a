#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smartflow/domain.hpp"
#include "smartflow/ingest.hpp"

namespace smartflow::env {

struct StepInfo {
    bool action_feasible = false;
    int need_served = 0;     // dest shortfall before the move, 0 when infeasible
    int hour_executed = 0;   // clock hour the action ran at
};

struct StepOutcome {
    domain::NetworkState next_state;
    double reward = 0.0;
    bool done = false;
    StepInfo info;
};

struct StepRecord {
    domain::NetworkState state_before;
    domain::Action action;
    double reward = 0.0;
    StepInfo info;
    std::vector<int> inventories_after;
};

struct EpisodeLog {
    domain::NetworkState initial_state;
    domain::NetworkState final_state;
    std::vector<StepRecord> steps;

    /// JSON Lines, one step per line with fields hour, source, dest, reward,
    /// feasible, inventories_before, inventories_after.
    void save_jsonl(const std::string& path) const;
    static EpisodeLog load_jsonl(const std::string& path);
};

/// A transfer is allowed only when the source has a bike to give and the
/// destination has a free dock.
bool is_feasible(const domain::NetworkState& state, const domain::Action& action,
                 const domain::StationRegistry& registry);

/// Shaped reward, evaluated on the state as the agent saw it (before the
/// transfer and before demand): infeasible moves earn the flat penalty,
/// moves into a station in need earn scale * need/capacity, feasible moves
/// into a station with no need earn the wasted penalty.
double compute_reward(const domain::NetworkState& state, const domain::Action& action,
                      const domain::StationRegistry& registry,
                      const domain::RewardConstants& rewards);

/// One hour of public usage: adds the profile's delta for state.hour to every
/// station and clips to [0, capacity]. The hour field is left untouched.
domain::NetworkState apply_demand(const domain::NetworkState& state,
                                  const ingest::DemandProfile& profile,
                                  const domain::StationRegistry& registry);

/// The hourly simulation. One instance is single-threaded; run one per seed
/// for parallel experiments.
class BikeEnv {
public:
    BikeEnv(domain::StationRegistry registry, ingest::DemandProfile profile,
            domain::SimConfig config);

    /// Uniform random inventories in [0, capacity] per station, hour 0.
    /// The same seed always produces the same state.
    domain::NetworkState reset(std::uint64_t seed);

    /// Validate, transfer, apply demand, clip, reward, advance clock.
    StepOutcome step(int action_index);

    const domain::NetworkState& state() const;
    bool done() const { return done_; }
    int hours_elapsed() const { return hours_elapsed_; }
    const domain::StationRegistry& registry() const { return registry_; }
    const ingest::DemandProfile& profile() const { return profile_; }
    const domain::SimConfig& config() const { return config_; }
    int station_count() const { return static_cast<int>(registry_.size()); }
    int action_count() const { return domain::action_space_size(station_count()); }

private:
    domain::StationRegistry registry_;
    ingest::DemandProfile profile_;
    domain::SimConfig config_;
    domain::NetworkState state_;
    int hours_elapsed_ = 0;
    bool has_state_ = false;
    bool done_ = false;
};

}  // namespace smartflow::env
