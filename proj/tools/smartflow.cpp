#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "smartflow/cli.hpp"
#include "smartflow/errors.hpp"

namespace {

using smartflow::cli::RunSettings;
using smartflow::cli::Workspace;

struct Flags {
    std::string config;
    std::optional<std::string> out_dir;
    std::optional<std::string> data_dir;
    std::optional<std::string> date;
    std::optional<std::string> distance_matrix;
    std::optional<std::string> trips;
    std::optional<std::string> stations;
    std::optional<int> top_k;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> timesteps;
    std::optional<int> jobs;
    std::string checkpoint;
    std::string episode;
    std::string plan;
};

RunSettings merge(const Flags& f) {
    RunSettings s = f.config.empty() ? RunSettings{} : smartflow::cli::load_config_file(f.config);
    if (f.out_dir) s.out_dir = *f.out_dir;
    if (f.data_dir) s.data_dir = *f.data_dir;
    if (f.date) s.date = *f.date;
    if (f.distance_matrix) s.distance_matrix = *f.distance_matrix;
    if (f.trips) s.trips_path = *f.trips;
    if (f.stations) s.stations_path = *f.stations;
    if (f.top_k) s.top_k = *f.top_k;
    if (f.seed) s.sim.seeds = {*f.seed};
    if (f.timesteps) s.sim.total_timesteps = *f.timesteps;
    if (f.jobs) s.jobs = *f.jobs;
    return s;
}

std::uint64_t pick_seed(const Flags& f, const RunSettings& s) {
    if (f.seed) return *f.seed;
    return s.sim.seeds.front();
}

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "TOML-style key/value config file");
    cmd->add_option("--out-dir", f.out_dir, "artifact directory (default: out)");
    cmd->add_option("--data-dir", f.data_dir,
                    "where registry.csv/demand.csv live (default: --out-dir)");
    cmd->add_option("--seed", f.seed, "run seed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SmartFlow: DQN-driven bike-sharing rebalancing pipeline"};
    app.set_version_flag("--version", smartflow::cli::kToolVersion);
    app.require_subcommand(1);

    Flags f;

    CLI::App* prepare = app.add_subcommand(
        "prepare", "Cleanse trip logs, pick the busiest stations, build the demand profile");
    add_common(prepare, f);
    prepare->add_option("--trips", f.trips, "trip log CSV");
    prepare->add_option("--stations", f.stations, "station metadata CSV");
    prepare->add_option("--date", f.date, "representative day, YYYY-MM-DD");
    prepare->add_option("--k", f.top_k, "number of stations to keep (default 30)");

    CLI::App* train = app.add_subcommand("train", "Train the DQN agent for one seed");
    add_common(train, f);
    train->add_option("--timesteps", f.timesteps, "override total_timesteps");

    CLI::App* simulate =
        app.add_subcommand("simulate", "Greedy 24-hour rollout from a checkpoint");
    add_common(simulate, f);
    simulate->add_option("--checkpoint", f.checkpoint,
                         "checkpoint path (default: <out-dir>/checkpoint_<seed>.json)");

    CLI::App* plan = app.add_subcommand("plan", "Turn an episode log into truck journeys");
    add_common(plan, f);
    plan->add_option("--episode", f.episode,
                     "episode log path (default: <out-dir>/episode_<seed>.jsonl)");
    plan->add_option("--date", f.date, "date stamped into the plan document");
    plan->add_option("--distance-matrix", f.distance_matrix,
                     "km matrix CSV; without it distances are haversine x circuity");

    CLI::App* report = app.add_subcommand("report", "Write the dispatch report for a plan");
    add_common(report, f);
    report->add_option("--plan", f.plan, "plan path (default: <out-dir>/plan_<seed>.json)");

    CLI::App* map_cmd = app.add_subcommand("map", "Export the stations-and-routes GeoJSON");
    add_common(map_cmd, f);
    map_cmd->add_option("--plan", f.plan, "plan path (default: <out-dir>/plan_<seed>.json)");
    map_cmd->add_option("--episode", f.episode,
                        "episode log path (default: <out-dir>/episode_<seed>.jsonl)");

    CLI::App* run_all =
        app.add_subcommand("run-all", "Full pipeline across the configured seed list");
    add_common(run_all, f);
    run_all->add_option("--trips", f.trips, "trip log CSV (triggers prepare)");
    run_all->add_option("--stations", f.stations, "station metadata CSV");
    run_all->add_option("--date", f.date, "representative day, YYYY-MM-DD");
    run_all->add_option("--k", f.top_k, "station count for prepare");
    run_all->add_option("--jobs", f.jobs, "seeds to run concurrently (default 1)");
    run_all->add_option("--timesteps", f.timesteps, "override total_timesteps");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : smartflow::cli::kExitUsage;
    }

    try {
        const RunSettings settings = merge(f);
        const Workspace ws{settings.out_dir};
        const std::uint64_t seed = pick_seed(f, settings);
        const auto endpoint = smartflow::report::endpoint_from_env();

        if (app.got_subcommand(prepare)) {
            smartflow::cli::cmd_prepare(settings, std::cout);
        } else if (app.got_subcommand(train)) {
            smartflow::cli::cmd_train(settings, seed, std::cout);
        } else if (app.got_subcommand(simulate)) {
            const std::string cp = f.checkpoint.empty() ? ws.checkpoint(seed) : f.checkpoint;
            smartflow::cli::cmd_simulate(settings, cp, seed, std::cout);
        } else if (app.got_subcommand(plan)) {
            const std::string ep = f.episode.empty() ? ws.episode(seed) : f.episode;
            smartflow::cli::cmd_plan(settings, ep, seed, std::cout);
        } else if (app.got_subcommand(report)) {
            const std::string pl = f.plan.empty() ? ws.plan(seed) : f.plan;
            smartflow::cli::cmd_report(settings, pl, endpoint, seed, std::cout);
        } else if (app.got_subcommand(map_cmd)) {
            const std::string pl = f.plan.empty() ? ws.plan(seed) : f.plan;
            const std::string ep = f.episode.empty() ? ws.episode(seed) : f.episode;
            smartflow::cli::cmd_map(settings, pl, ep, seed, std::cout);
        } else if (app.got_subcommand(run_all)) {
            if (smartflow::cli::cmd_run_all(settings, endpoint, std::cout) != 0) {
                return smartflow::cli::kExitRuntime;
            }
        }
        return smartflow::cli::kExitOk;
    } catch (const smartflow::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        for (const std::string& p : e.paths()) std::cerr << "  at " << p << "\n";
        return smartflow::cli::kExitUsage;
    } catch (const smartflow::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return smartflow::cli::kExitUsage;
    } catch (const smartflow::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return smartflow::cli::kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return smartflow::cli::kExitRuntime;
    }
}
