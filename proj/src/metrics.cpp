#include "smartflow/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "smartflow/errors.hpp"

using nlohmann::json;

namespace smartflow::metrics {

int imbalance(const domain::NetworkState& state, const domain::StationRegistry& registry) {
    if (state.inventories.size() != registry.size()) {
        throw ContractViolation("imbalance: state/registry size mismatch");
    }
    int total = 0;
    for (std::size_t i = 0; i < registry.size(); ++i) {
        total += std::abs(state.inventories[i] - registry.target(i));
    }
    return total;
}

ReductionResult imbalance_reduction(int initial, int final_value) {
    if (initial == 0) return ReductionResult{0.0, true};
    return ReductionResult{100.0 * static_cast<double>(initial - final_value) / initial, false};
}

ReductionResult imbalance_reduction(const domain::NetworkState& initial,
                                    const domain::NetworkState& final_state,
                                    const domain::StationRegistry& registry) {
    return imbalance_reduction(imbalance(initial, registry), imbalance(final_state, registry));
}

UtilizationResult truck_utilization(const std::vector<planner::Journey>& journeys) {
    if (journeys.empty()) return UtilizationResult{0.0, true};
    std::size_t multi = 0;
    for (const planner::Journey& j : journeys) {
        if (j.legs.size() >= 2) ++multi;
    }
    return UtilizationResult{100.0 * static_cast<double>(multi) / journeys.size(), false};
}

std::array<int, 24> task_hour_density(const std::vector<planner::TransferTask>& tasks) {
    std::array<int, 24> bins{};
    for (const planner::TransferTask& t : tasks) {
        if (t.need_hour < 0 || t.need_hour > 23) {
            throw ContractViolation("task_hour_density: need_hour out of range");
        }
        ++bins[t.need_hour];
    }
    return bins;
}

json RunResult::to_json() const {
    return json{
        {"seed", seed},
        {"imbalance_initial", imbalance_initial},
        {"imbalance_final", imbalance_final},
        {"imbalance_reduction_pct", imbalance_reduction_pct},
        {"reduction_degenerate", reduction_degenerate},
        {"total_km", total_km},
        {"truck_utilization_pct", truck_utilization_pct},
        {"empty_plan", empty_plan},
        {"final_loss", final_loss},
        {"task_hours", task_hours},
        {"learning_curve",
         {{"episode_rewards", episode_rewards}, {"moving_avg", moving_avg}}},
    };
}

RunResult RunResult::from_json(const json& j) {
    RunResult r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.imbalance_initial = j.at("imbalance_initial").get<int>();
    r.imbalance_final = j.at("imbalance_final").get<int>();
    r.imbalance_reduction_pct = j.at("imbalance_reduction_pct").get<double>();
    r.reduction_degenerate = j.at("reduction_degenerate").get<bool>();
    r.total_km = j.at("total_km").get<double>();
    r.truck_utilization_pct = j.at("truck_utilization_pct").get<double>();
    r.empty_plan = j.at("empty_plan").get<bool>();
    r.final_loss = j.at("final_loss").get<double>();
    auto hours = j.at("task_hours").get<std::vector<int>>();
    if (hours.size() != 24) throw IoError("run result task_hours must have 24 bins");
    std::copy(hours.begin(), hours.end(), r.task_hours.begin());
    r.episode_rewards = j.at("learning_curve").at("episode_rewards").get<std::vector<double>>();
    r.moving_avg = j.at("learning_curve").at("moving_avg").get<std::vector<double>>();
    return r;
}

namespace {

MetricStat stat_of(const std::vector<double>& xs) {
    MetricStat s;
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t n = 0;
    for (double x : xs) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    s.mean = mean;
    if (n >= 2) s.stddev = std::sqrt(m2 / static_cast<double>(n - 1));
    return s;
}

}  // namespace

Aggregate aggregate_runs(const std::vector<RunResult>& runs) {
    if (runs.empty()) throw ContractViolation("aggregate_runs: no runs");
    auto collect = [&runs](auto&& get) {
        std::vector<double> xs;
        xs.reserve(runs.size());
        for (const RunResult& r : runs) xs.push_back(get(r));
        return xs;
    };

    Aggregate agg;
    agg.run_count = runs.size();
    agg.metrics["imbalance_reduction_pct"] =
        stat_of(collect([](const RunResult& r) { return r.imbalance_reduction_pct; }));
    agg.metrics["total_km"] = stat_of(collect([](const RunResult& r) { return r.total_km; }));
    agg.metrics["truck_utilization_pct"] =
        stat_of(collect([](const RunResult& r) { return r.truck_utilization_pct; }));
    agg.metrics["final_loss"] = stat_of(collect([](const RunResult& r) { return r.final_loss; }));
    agg.metrics["imbalance_initial"] = stat_of(
        collect([](const RunResult& r) { return static_cast<double>(r.imbalance_initial); }));
    agg.metrics["imbalance_final"] = stat_of(
        collect([](const RunResult& r) { return static_cast<double>(r.imbalance_final); }));
    return agg;
}

json Aggregate::to_json() const {
    json metrics_json = json::object();
    for (const auto& [name, stat] : metrics) {
        json entry = {{"mean", stat.mean}};
        if (stat.stddev) {
            entry["std"] = *stat.stddev;
        } else {
            entry["std"] = nullptr;
        }
        metrics_json[name] = entry;
    }
    return json{{"runs", run_count}, {"metrics", metrics_json}};
}

std::string aggregate_markdown(const Aggregate& agg) {
    auto fmt = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return std::string(buf);
    };
    auto row = [&](const std::string& label, const std::string& key, const char* unit) {
        const MetricStat& s = agg.metrics.at(key);
        std::string value = fmt(s.mean);
        if (s.stddev) value += " ± " + fmt(*s.stddev);
        return "| " + label + " | " + value + " " + unit + " |\n";
    };

    std::ostringstream out;
    out << "# Aggregated Performance Metrics (" << agg.run_count << " runs)\n\n";
    out << "| Metric | Value (Mean ± Std Dev) |\n";
    out << "| --- | --- |\n";
    out << row("Imbalance Reduction", "imbalance_reduction_pct", "%");
    out << row("Total Fleet Distance", "total_km", "km");
    out << row("Truck Utilisation Rate", "truck_utilization_pct", "%");
    out << row("Final Policy Loss", "final_loss", "");
    return out.str();
}

}  // namespace smartflow::metrics
