#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smartflow/domain.hpp"
#include "smartflow/planner.hpp"

namespace smartflow::metrics {

/// L1 deviation of inventories from target levels.
int imbalance(const domain::NetworkState& state, const domain::StationRegistry& registry);

struct ReductionResult {
    double percent = 0.0;
    bool degenerate = false;  // initial imbalance was zero
};

ReductionResult imbalance_reduction(int initial, int final_value);
ReductionResult imbalance_reduction(const domain::NetworkState& initial,
                                    const domain::NetworkState& final_state,
                                    const domain::StationRegistry& registry);

struct UtilizationResult {
    double percent = 0.0;
    bool empty_plan = false;
};

/// Share of journeys that chain two or more delivery legs.
UtilizationResult truck_utilization(const std::vector<planner::Journey>& journeys);

std::array<int, 24> task_hour_density(const std::vector<planner::TransferTask>& tasks);

struct RunResult {
    std::uint64_t seed = 0;
    int imbalance_initial = 0;
    int imbalance_final = 0;
    double imbalance_reduction_pct = 0.0;
    bool reduction_degenerate = false;
    double total_km = 0.0;
    double truck_utilization_pct = 0.0;
    bool empty_plan = false;
    double final_loss = 0.0;
    std::array<int, 24> task_hours{};
    std::vector<double> episode_rewards;
    std::vector<double> moving_avg;

    nlohmann::json to_json() const;
    static RunResult from_json(const nlohmann::json& j);
};

struct MetricStat {
    double mean = 0.0;
    std::optional<double> stddev;  // absent with fewer than two runs
};

struct Aggregate {
    std::size_t run_count = 0;
    std::map<std::string, MetricStat> metrics;

    nlohmann::json to_json() const;
};

/// Mean and sample (n-1) standard deviation per metric across runs.
Aggregate aggregate_runs(const std::vector<RunResult>& runs);

/// Markdown summary table of the aggregate.
std::string aggregate_markdown(const Aggregate& agg);

}  // namespace smartflow::metrics
