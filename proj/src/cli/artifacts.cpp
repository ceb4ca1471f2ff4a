#include <chrono>
#include <ctime>
#include <map>

#include "smartflow/cli.hpp"
#include "smartflow/errors.hpp"
#include "smartflow/util.hpp"

using nlohmann::json;

namespace smartflow::cli {

json map_geojson(const json& plan, const domain::StationRegistry& registry,
                 const env::EpisodeLog& log) {
    if (log.steps.empty()) {
        throw SchemaError("episode log is empty, no inventories to map", {"steps"});
    }
    if (log.initial_state.inventories.size() != registry.size() ||
        log.final_state.inventories.size() != registry.size()) {
        throw SchemaError("episode log does not match the station registry", {"inventories"});
    }

    json features = json::array();
    std::map<std::string, std::size_t> by_name;
    for (std::size_t i = 0; i < registry.size(); ++i) {
        const domain::Station& s = registry.at(i);
        by_name.emplace(s.name, i);
        features.push_back(json{
            {"type", "Feature"},
            {"geometry", {{"type", "Point"}, {"coordinates", {s.lon, s.lat}}}},
            {"properties",
             {{"id", s.id},
              {"name", s.name},
              {"capacity", s.capacity},
              {"target", s.target},
              {"initial_inventory", log.initial_state.inventories[i]},
              {"final_inventory", log.final_state.inventories[i]}}},
        });
    }

    auto coords_of = [&](const std::string& name) {
        auto it = by_name.find(name);
        if (it == by_name.end()) {
            throw SchemaError("plan names a station missing from the registry: " + name,
                              {"trucks[].station"});
        }
        const domain::Station& s = registry.at(it->second);
        return json::array({s.lon, s.lat});
    };

    for (const json& truck : plan.at("trucks")) {
        json line = json::array();
        line.push_back(coords_of(truck.at("pickup").at("station").get<std::string>()));
        int bikes = 0;
        for (const json& leg : truck.at("legs")) {
            line.push_back(coords_of(leg.at("station").get<std::string>()));
            bikes += leg.at("drop").get<int>();
        }
        features.push_back(json{
            {"type", "Feature"},
            {"geometry", {{"type", "LineString"}, {"coordinates", line}}},
            {"properties",
             {{"truck_id", truck.at("truck_id").get<int>()},
              {"total_km", truck.at("total_km").get<double>()},
              {"bikes_delivered", bikes}}},
        });
    }

    return json{{"type", "FeatureCollection"}, {"features", features}};
}

void write_manifest(const std::string& path, const std::string& command,
                    const RunSettings& settings, std::uint64_t seed,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
    auto hash_all = [](const std::vector<std::string>& paths) {
        json out = json::object();
        for (const std::string& p : paths) out[p] = util::sha256_file(p);
        return out;
    };

    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);

    json doc = {
        {"command", command},
        {"tool_version", kToolVersion},
        {"created_utc", stamp},
        {"seed", seed},
        {"config", settings_json(settings)},
        {"inputs", hash_all(inputs)},
        {"outputs", hash_all(outputs)},
    };
    util::write_file(path, doc.dump(2) + "\n");
}

}  // namespace smartflow::cli
