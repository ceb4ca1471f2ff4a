#include "smartflow/env.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "smartflow/errors.hpp"
#include "smartflow/util.hpp"

using nlohmann::json;

namespace smartflow::env {

bool is_feasible(const domain::NetworkState& state, const domain::Action& action,
                 const domain::StationRegistry& registry) {
    return state.inventories[action.source] >= 1 &&
           state.inventories[action.dest] < registry.capacity(action.dest);
}

double compute_reward(const domain::NetworkState& state, const domain::Action& action,
                      const domain::StationRegistry& registry,
                      const domain::RewardConstants& rewards) {
    if (!is_feasible(state, action, registry)) return rewards.infeasible;
    const int n = domain::need(state, action.dest, registry);
    if (n > 0) {
        return rewards.scale * static_cast<double>(n) / registry.capacity(action.dest);
    }
    return rewards.wasted;
}

domain::NetworkState apply_demand(const domain::NetworkState& state,
                                  const ingest::DemandProfile& profile,
                                  const domain::StationRegistry& registry) {
    if (state.hour < 0 || state.hour >= 24) {
        throw ContractViolation("apply_demand: hour out of range");
    }
    domain::NetworkState next = state;
    for (std::size_t i = 0; i < next.inventories.size(); ++i) {
        const int v = next.inventories[i] + profile.delta(i, state.hour);
        next.inventories[i] = std::clamp(v, 0, registry.capacity(i));
    }
    return next;
}

BikeEnv::BikeEnv(domain::StationRegistry registry, ingest::DemandProfile profile,
                 domain::SimConfig config)
    : registry_(std::move(registry)), profile_(std::move(profile)), config_(std::move(config)) {
    if (registry_.size() < 2) throw ConfigError("environment needs at least 2 stations");
    if (profile_.station_count() != registry_.size()) {
        throw ConfigError("demand profile does not match the station registry");
    }
    config_.validate();
}

domain::NetworkState BikeEnv::reset(std::uint64_t seed) {
    // splitmix64 scramble: nearby seeds must not give correlated first draws
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    std::mt19937_64 rng(z ^ (z >> 31));
    state_.inventories.assign(registry_.size(), 0);
    for (std::size_t i = 0; i < registry_.size(); ++i) {
        std::uniform_int_distribution<int> dist(0, registry_.capacity(i));
        state_.inventories[i] = dist(rng);
    }
    state_.hour = 0;
    hours_elapsed_ = 0;
    has_state_ = true;
    done_ = false;
    return state_;
}

StepOutcome BikeEnv::step(int action_index) {
    if (!has_state_) throw ContractViolation("step called before reset");
    if (done_) throw ContractViolation("step called after the episode ended");

    const domain::Action action = domain::decode_action(action_index, station_count());
    const bool feasible = is_feasible(state_, action, registry_);
    const double reward = compute_reward(state_, action, registry_, config_.rewards);
    const int served = feasible ? domain::need(state_, action.dest, registry_) : 0;
    const int hour_executed = state_.hour;

    domain::NetworkState next = state_;
    if (feasible) {
        next.inventories[action.source] -= 1;
        next.inventories[action.dest] += 1;
    }
    next = apply_demand(next, profile_, registry_);

    ++hours_elapsed_;
    next.hour = hours_elapsed_ % 24;
    done_ = hours_elapsed_ >= config_.episode_hours;
    state_ = std::move(next);

    return StepOutcome{state_, reward, done_, StepInfo{feasible, served, hour_executed}};
}

const domain::NetworkState& BikeEnv::state() const {
    if (!has_state_) throw ContractViolation("state requested before reset");
    return state_;
}

void EpisodeLog::save_jsonl(const std::string& path) const {
    std::ostringstream out;
    for (const StepRecord& s : steps) {
        json line = {
            {"hour", s.info.hour_executed},
            {"source", s.action.source},
            {"dest", s.action.dest},
            {"reward", s.reward},
            {"feasible", s.info.action_feasible},
            {"inventories_before", s.state_before.inventories},
            {"inventories_after", s.inventories_after},
        };
        out << line.dump() << '\n';
    }
    util::write_file(path, out.str());
}

EpisodeLog EpisodeLog::load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open episode log: " + path);

    EpisodeLog log;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (util::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw IoError(path + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
        }
        StepRecord rec;
        try {
            rec.info.hour_executed = j.at("hour").get<int>();
            rec.action.source = j.at("source").get<int>();
            rec.action.dest = j.at("dest").get<int>();
            rec.reward = j.at("reward").get<double>();
            rec.info.action_feasible = j.at("feasible").get<bool>();
            rec.state_before.inventories = j.at("inventories_before").get<std::vector<int>>();
            rec.state_before.hour = rec.info.hour_executed;
            rec.inventories_after = j.at("inventories_after").get<std::vector<int>>();
        } catch (const json::exception& e) {
            throw IoError(path + ":" + std::to_string(lineno) + ": missing field: " + e.what());
        }
        log.steps.push_back(std::move(rec));
    }
    if (!log.steps.empty()) {
        log.initial_state = log.steps.front().state_before;
        log.final_state.inventories = log.steps.back().inventories_after;
        log.final_state.hour = (log.steps.back().info.hour_executed + 1) % 24;
    }
    return log;
}

}  // namespace smartflow::env
