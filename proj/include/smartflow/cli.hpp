#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smartflow/domain.hpp"
#include "smartflow/env.hpp"
#include "smartflow/report.hpp"

namespace smartflow::cli {

inline constexpr const char* kToolVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

/// Everything a run needs, merged from defaults, the config file and flags
/// (flags win).
struct RunSettings {
    domain::SimConfig sim;
    std::string trips_path;
    std::string stations_path;
    std::string date;
    int top_k = 30;
    std::string out_dir = "out";
    std::string data_dir;  // registry/demand location; defaults to out_dir
    std::string distance_matrix;
    int jobs = 1;

    std::string effective_data_dir() const { return data_dir.empty() ? out_dir : data_dir; }
};

/// Minimal TOML-style file: `key = value` lines, # comments, quoted strings,
/// numbers, booleans and flat lists. Unknown keys are errors.
RunSettings load_config_file(const std::string& path);
void apply_config_line(RunSettings& settings, const std::string& key, const std::string& raw);

nlohmann::json settings_json(const RunSettings& settings);

/// Artifact naming under the output directory.
struct Workspace {
    std::string dir;

    std::string registry_csv() const { return dir + "/registry.csv"; }
    std::string demand_csv() const { return dir + "/demand.csv"; }
    std::string checkpoint(std::uint64_t seed) const {
        return dir + "/checkpoint_" + std::to_string(seed) + ".json";
    }
    std::string curve(std::uint64_t seed) const {
        return dir + "/curve_" + std::to_string(seed) + ".csv";
    }
    std::string episode(std::uint64_t seed) const {
        return dir + "/episode_" + std::to_string(seed) + ".jsonl";
    }
    std::string plan(std::uint64_t seed) const {
        return dir + "/plan_" + std::to_string(seed) + ".json";
    }
    std::string report(std::uint64_t seed) const {
        return dir + "/report_" + std::to_string(seed) + ".md";
    }
    std::string map(std::uint64_t seed) const {
        return dir + "/map_" + std::to_string(seed) + ".geojson";
    }
    std::string run_json(std::uint64_t seed) const {
        return dir + "/run_" + std::to_string(seed) + ".json";
    }
    std::string manifest(const std::string& command, std::uint64_t seed) const {
        return dir + "/manifest_" + command + "_" + std::to_string(seed) + ".json";
    }
    std::string manifest(const std::string& command) const {
        return dir + "/manifest_" + command + ".json";
    }
    std::string aggregate_json() const { return dir + "/aggregate.json"; }
    std::string summary_md() const { return dir + "/summary.md"; }
};

/// GeoJSON FeatureCollection: one Point per station, one LineString per
/// journey route.
nlohmann::json map_geojson(const nlohmann::json& plan,
                           const domain::StationRegistry& registry,
                           const env::EpisodeLog& log);

/// Reproducibility record: config echo, input/output hashes, timestamps.
void write_manifest(const std::string& path, const std::string& command,
                    const RunSettings& settings, std::uint64_t seed,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs);

// Workflow commands. All throw on failure (ConfigError/IoError/SchemaError for
// bad input, TrainingError and friends for runtime trouble); the tool entry
// point maps exceptions onto exit codes.
void cmd_prepare(const RunSettings& settings, std::ostream& log);
void cmd_train(const RunSettings& settings, std::uint64_t seed, std::ostream& log);
void cmd_simulate(const RunSettings& settings, const std::string& checkpoint_path,
                  std::uint64_t seed, std::ostream& log);
void cmd_plan(const RunSettings& settings, const std::string& episode_path,
              std::uint64_t seed, std::ostream& log);
void cmd_report(const RunSettings& settings, const std::string& plan_path,
                const report::EndpointConfig& endpoint, std::uint64_t seed,
                std::ostream& log);
void cmd_map(const RunSettings& settings, const std::string& plan_path,
             const std::string& episode_path, std::uint64_t seed, std::ostream& log);

/// Returns the number of failed seeds (0 means the aggregate was written).
int cmd_run_all(const RunSettings& settings, const report::EndpointConfig& endpoint,
                std::ostream& log);

}  // namespace smartflow::cli
