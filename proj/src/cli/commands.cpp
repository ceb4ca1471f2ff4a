#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "smartflow/agent.hpp"
#include "smartflow/cli.hpp"
#include "smartflow/errors.hpp"
#include "smartflow/ingest.hpp"
#include "smartflow/metrics.hpp"
#include "smartflow/planner.hpp"
#include "smartflow/util.hpp"

using nlohmann::json;

namespace smartflow::cli {

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

ingest::CleansingRules rules_of(const domain::SimConfig& sim) {
    return ingest::CleansingRules{sim.min_trip_seconds, sim.max_trip_seconds};
}

std::int64_t require_date(const RunSettings& settings) {
    if (settings.date.empty()) {
        throw ConfigError("a date is required (set `date` in the config or pass --date)");
    }
    auto days = util::parse_date(settings.date);
    if (!days) throw ConfigError("date must be YYYY-MM-DD, got '" + settings.date + "'");
    return *days;
}

domain::StationRegistry load_registry(const RunSettings& settings) {
    return domain::StationRegistry::load_csv(Workspace{settings.effective_data_dir()}.registry_csv());
}

ingest::DemandProfile load_demand(const RunSettings& settings,
                                  const domain::StationRegistry& registry) {
    return ingest::DemandProfile::load_csv(Workspace{settings.effective_data_dir()}.demand_csv(),
                                           registry);
}

planner::DistanceProvider make_provider(const RunSettings& settings,
                                        const domain::StationRegistry& registry) {
    if (!settings.distance_matrix.empty()) {
        return planner::DistanceProvider::from_matrix_file(settings.distance_matrix, registry);
    }
    return planner::DistanceProvider::haversine(registry, settings.sim.circuity_factor);
}

struct SeedArtifacts {
    env::EpisodeLog episode;
    std::vector<planner::TransferTask> tasks;
    std::vector<planner::Journey> journeys;
    json plan;
    metrics::RunResult run;
};

/// The per-seed pipeline after training: simulate -> plan -> metrics.
SeedArtifacts downstream_of(const RunSettings& settings,
                            const domain::StationRegistry& registry,
                            env::EpisodeLog episode, double final_loss,
                            std::vector<double> episode_rewards,
                            std::vector<double> moving_avg, std::uint64_t seed) {
    SeedArtifacts a;
    a.episode = std::move(episode);
    a.tasks = planner::extract_strategic_plan(a.episode);
    const planner::DistanceProvider provider = make_provider(settings, registry);
    a.journeys = planner::build_journeys(a.tasks, settings.sim.truck_capacity, provider);
    a.journeys = planner::schedule_journeys(std::move(a.journeys), a.tasks, provider,
                                            settings.sim.truck_speed_kmh,
                                            settings.sim.load_minutes_per_stop);
    a.plan = planner::plan_to_json(a.journeys, registry, settings.date);

    a.run.seed = seed;
    a.run.imbalance_initial = metrics::imbalance(a.episode.initial_state, registry);
    a.run.imbalance_final = metrics::imbalance(a.episode.final_state, registry);
    const auto red = metrics::imbalance_reduction(a.run.imbalance_initial, a.run.imbalance_final);
    a.run.imbalance_reduction_pct = red.percent;
    a.run.reduction_degenerate = red.degenerate;
    a.run.total_km = 0.0;
    for (const planner::Journey& j : a.journeys) a.run.total_km += j.total_km;
    const auto util_res = metrics::truck_utilization(a.journeys);
    a.run.truck_utilization_pct = util_res.percent;
    a.run.empty_plan = util_res.empty_plan;
    a.run.final_loss = final_loss;
    a.run.task_hours = metrics::task_hour_density(a.tasks);
    a.run.episode_rewards = std::move(episode_rewards);
    a.run.moving_avg = std::move(moving_avg);
    return a;
}

}  // namespace

void cmd_prepare(const RunSettings& settings, std::ostream& log) {
    if (settings.trips_path.empty() || settings.stations_path.empty()) {
        throw ConfigError("prepare needs both a trips file and a stations file");
    }
    if (settings.top_k < 1) throw ConfigError("top_k must be >= 1");
    const std::int64_t date_days = require_date(settings);

    const domain::StationRegistry all_stations =
        domain::StationRegistry::load_csv(settings.stations_path);
    std::unordered_set<std::string> known;
    for (const auto& s : all_stations.stations()) known.insert(s.id);

    const ingest::TripLoadResult loaded =
        ingest::load_trips(settings.trips_path, rules_of(settings.sim), &known);
    log << "trips kept: " << loaded.trips.size() << "\n"
        << "dropped: " << loaded.dropped.malformed << " malformed, "
        << loaded.dropped.missing_coordinates << " missing coordinates, "
        << loaded.dropped.invalid_duration << " invalid duration, "
        << loaded.dropped.unknown_station << " unknown station\n";

    const std::vector<std::string> top =
        ingest::select_top_k(loaded.trips, static_cast<std::size_t>(settings.top_k));
    std::vector<domain::Station> picked;
    picked.reserve(top.size());
    for (const std::string& id : top) {
        picked.push_back(all_stations.at(static_cast<std::size_t>(all_stations.index_of(id))));
    }
    const domain::StationRegistry registry(std::move(picked));
    const ingest::DemandProfile profile =
        ingest::build_demand_profile(loaded.trips, registry, date_days);

    ensure_dir(settings.out_dir);
    const Workspace ws{settings.out_dir};
    registry.save_csv(ws.registry_csv());
    profile.save_csv(ws.demand_csv());
    write_manifest(ws.manifest("prepare"), "prepare", settings, 0,
                   {settings.trips_path, settings.stations_path},
                   {ws.registry_csv(), ws.demand_csv()});
    log << "wrote " << ws.registry_csv() << " (" << registry.size() << " stations) and "
        << ws.demand_csv() << "\n";
}

void cmd_train(const RunSettings& settings, std::uint64_t seed, std::ostream& log) {
    settings.sim.validate();
    const domain::StationRegistry registry = load_registry(settings);
    const ingest::DemandProfile profile = load_demand(settings, registry);

    env::BikeEnv environment(registry, profile, settings.sim);
    const agent::TrainResult result = agent::train(environment, settings.sim, seed);

    ensure_dir(settings.out_dir);
    const Workspace ws{settings.out_dir};
    agent::save_checkpoint(result.net, settings.sim, registry.size(), ws.checkpoint(seed));
    agent::save_learning_curve(result, ws.curve(seed));
    const Workspace data_ws{settings.effective_data_dir()};
    write_manifest(ws.manifest("train", seed), "train", settings, seed,
                   {data_ws.registry_csv(), data_ws.demand_csv()},
                   {ws.checkpoint(seed), ws.curve(seed)});
    log << "seed " << seed << ": " << result.episode_rewards.size() << " episodes, "
        << result.losses.size() << " updates, final loss " << result.final_loss << "\n";
}

void cmd_simulate(const RunSettings& settings, const std::string& checkpoint_path,
                  std::uint64_t seed, std::ostream& log) {
    const domain::StationRegistry registry = load_registry(settings);
    const ingest::DemandProfile profile = load_demand(settings, registry);
    const agent::Checkpoint cp = agent::load_checkpoint(checkpoint_path);
    if (cp.n_stations != registry.size() || cp.net.input_dim() != registry.size() + 1) {
        throw ConfigError("checkpoint was trained for " + std::to_string(cp.n_stations) +
                          " stations, registry has " + std::to_string(registry.size()));
    }

    env::BikeEnv environment(registry, profile, settings.sim);
    const env::EpisodeLog episode =
        agent::rollout(environment, seed, agent::greedy_policy(cp.net, registry));

    ensure_dir(settings.out_dir);
    const Workspace ws{settings.out_dir};
    episode.save_jsonl(ws.episode(seed));
    write_manifest(ws.manifest("simulate", seed), "simulate", settings, seed,
                   {checkpoint_path}, {ws.episode(seed)});
    log << "seed " << seed << ": " << episode.steps.size() << " steps, final imbalance "
        << metrics::imbalance(episode.final_state, registry) << "\n";
}

void cmd_plan(const RunSettings& settings, const std::string& episode_path,
              std::uint64_t seed, std::ostream& log) {
    require_date(settings);
    const domain::StationRegistry registry = load_registry(settings);
    const env::EpisodeLog episode = env::EpisodeLog::load_jsonl(episode_path);

    const std::vector<planner::TransferTask> tasks = planner::extract_strategic_plan(episode);
    const planner::DistanceProvider provider = make_provider(settings, registry);
    std::vector<planner::Journey> journeys =
        planner::build_journeys(tasks, settings.sim.truck_capacity, provider);
    journeys = planner::schedule_journeys(std::move(journeys), tasks, provider,
                                          settings.sim.truck_speed_kmh,
                                          settings.sim.load_minutes_per_stop);
    const json plan = planner::plan_to_json(journeys, registry, settings.date);

    ensure_dir(settings.out_dir);
    const Workspace ws{settings.out_dir};
    util::write_file(ws.plan(seed), plan.dump(2) + "\n");
    write_manifest(ws.manifest("plan", seed), "plan", settings, seed, {episode_path},
                   {ws.plan(seed)});
    log << "seed " << seed << ": " << tasks.size() << " tasks -> " << journeys.size()
        << " journeys\n";
}

void cmd_report(const RunSettings& settings, const std::string& plan_path,
                const report::EndpointConfig& endpoint, std::uint64_t seed,
                std::ostream& log) {
    json plan;
    try {
        plan = json::parse(util::read_file(plan_path));
    } catch (const json::exception& e) {
        throw SchemaError(std::string("plan is not valid JSON: ") + e.what(), {plan_path});
    }

    std::string reason;
    const report::DispatchReport rep = report::generate_report(plan, endpoint, &reason);

    ensure_dir(settings.out_dir);
    const Workspace ws{settings.out_dir};
    util::write_file(ws.report(seed), rep.markdown);
    write_manifest(ws.manifest("report", seed), "report", settings, seed, {plan_path},
                   {ws.report(seed)});
    if (rep.source == report::ReportSource::Llm) {
        log << "seed " << seed << ": report generated by the language model endpoint\n";
    } else {
        log << "seed " << seed << ": deterministic report";
        if (!reason.empty()) log << " (" << reason << ")";
        log << "\n";
    }
}

void cmd_map(const RunSettings& settings, const std::string& plan_path,
             const std::string& episode_path, std::uint64_t seed, std::ostream& log) {
    const domain::StationRegistry registry = load_registry(settings);
    json plan;
    try {
        plan = json::parse(util::read_file(plan_path));
    } catch (const json::exception& e) {
        throw SchemaError(std::string("plan is not valid JSON: ") + e.what(), {plan_path});
    }
    const auto violations = planner::validate_plan(plan);
    if (!violations.empty()) throw SchemaError("plan failed validation", violations);

    const env::EpisodeLog episode = env::EpisodeLog::load_jsonl(episode_path);
    const json geo = map_geojson(plan, registry, episode);

    ensure_dir(settings.out_dir);
    const Workspace ws{settings.out_dir};
    util::write_file(ws.map(seed), geo.dump(2) + "\n");
    write_manifest(ws.manifest("map", seed), "map", settings, seed,
                   {plan_path, episode_path}, {ws.map(seed)});
    log << "seed " << seed << ": " << geo.at("features").size() << " features\n";
}

int cmd_run_all(const RunSettings& settings_in, const report::EndpointConfig& endpoint,
                std::ostream& log) {
    RunSettings settings = settings_in;
    settings.sim.validate();
    ensure_dir(settings.out_dir);

    if (!settings.trips_path.empty() && !settings.stations_path.empty()) {
        cmd_prepare(settings, log);
        settings.data_dir = settings.out_dir;
    }
    const domain::StationRegistry registry = load_registry(settings);
    const ingest::DemandProfile profile = load_demand(settings, registry);
    const Workspace ws{settings.out_dir};
    const Workspace data_ws{settings.effective_data_dir()};

    struct SeedOutcome {
        std::uint64_t seed = 0;
        bool failed = false;
        std::string error;
        metrics::RunResult run;
        std::string log_text;
    };
    std::vector<SeedOutcome> outcomes(settings.sim.seeds.size());

    auto run_one = [&](std::size_t idx) {
        SeedOutcome& out = outcomes[idx];
        out.seed = settings.sim.seeds[idx];
        std::ostringstream local;
        try {
            env::BikeEnv environment(registry, profile, settings.sim);
            const agent::TrainResult trained =
                agent::train(environment, settings.sim, out.seed);
            agent::save_checkpoint(trained.net, settings.sim, registry.size(),
                                   ws.checkpoint(out.seed));
            agent::save_learning_curve(trained, ws.curve(out.seed));
            trained.greedy_rollout.save_jsonl(ws.episode(out.seed));

            SeedArtifacts a =
                downstream_of(settings, registry, trained.greedy_rollout, trained.final_loss,
                              trained.episode_rewards, trained.moving_avg, out.seed);
            util::write_file(ws.plan(out.seed), a.plan.dump(2) + "\n");

            std::string reason;
            const report::DispatchReport rep = report::generate_report(a.plan, endpoint, &reason);
            util::write_file(ws.report(out.seed), rep.markdown);

            const json geo = map_geojson(a.plan, registry, a.episode);
            util::write_file(ws.map(out.seed), geo.dump(2) + "\n");

            util::write_file(ws.run_json(out.seed), a.run.to_json().dump(2) + "\n");
            write_manifest(ws.manifest("run", out.seed), "run-all", settings, out.seed,
                           {data_ws.registry_csv(), data_ws.demand_csv()},
                           {ws.checkpoint(out.seed), ws.curve(out.seed), ws.episode(out.seed),
                            ws.plan(out.seed), ws.report(out.seed), ws.map(out.seed),
                            ws.run_json(out.seed)});

            out.run = std::move(a.run);
            local << "seed " << out.seed << ": reduction "
                  << out.run.imbalance_reduction_pct << "%, " << out.run.total_km
                  << " km, utilization " << out.run.truck_utilization_pct << "%"
                  << (rep.source == report::ReportSource::Llm ? " (llm report)" : "") << "\n";
        } catch (const std::exception& e) {
            out.failed = true;
            out.error = e.what();
            local << "seed " << out.seed << " FAILED: " << e.what() << "\n";
        }
        out.log_text = local.str();
    };

    const int jobs = std::max(1, settings.jobs);
    if (jobs <= 1 || outcomes.size() <= 1) {
        for (std::size_t i = 0; i < outcomes.size(); ++i) {
            run_one(i);
            log << outcomes[i].log_text;
        }
    } else {
        std::vector<std::thread> pool;
        std::mutex next_mutex;
        std::size_t next = 0;
        for (int w = 0; w < jobs; ++w) {
            pool.emplace_back([&]() {
                while (true) {
                    std::size_t idx;
                    {
                        std::lock_guard<std::mutex> lock(next_mutex);
                        if (next >= outcomes.size()) return;
                        idx = next++;
                    }
                    run_one(idx);
                }
            });
        }
        for (std::thread& t : pool) t.join();
        for (const SeedOutcome& o : outcomes) log << o.log_text;
    }

    int failures = 0;
    std::vector<metrics::RunResult> runs;
    for (SeedOutcome& o : outcomes) {
        if (o.failed) {
            ++failures;
        } else {
            runs.push_back(std::move(o.run));
        }
    }
    if (failures > 0) {
        log << failures << " seed(s) failed; aggregate skipped, completed runs kept\n";
        return failures;
    }

    const metrics::Aggregate agg = metrics::aggregate_runs(runs);
    util::write_file(ws.aggregate_json(), agg.to_json().dump(2) + "\n");
    util::write_file(ws.summary_md(), metrics::aggregate_markdown(agg));
    log << "aggregate over " << runs.size() << " runs -> " << ws.aggregate_json() << "\n";
    return 0;
}

}  // namespace smartflow::cli
