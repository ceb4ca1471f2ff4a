#include "smartflow/domain.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "smartflow/errors.hpp"
#include "smartflow/util.hpp"

namespace smartflow::domain {

StationRegistry::StationRegistry(std::vector<Station> stations)
    : stations_(std::move(stations)) {
    validate();
}

void StationRegistry::validate() const {
    std::unordered_map<std::string, int> seen;
    for (std::size_t i = 0; i < stations_.size(); ++i) {
        const Station& s = stations_[i];
        std::string where = "station '" + s.id + "' (row " + std::to_string(i) + "): ";
        if (s.id.empty()) throw ConfigError("registry: empty station id at row " + std::to_string(i));
        if (!seen.emplace(s.id, 1).second) throw ConfigError(where + "duplicate id");
        if (s.capacity < 1) throw ConfigError(where + "capacity must be >= 1");
        if (s.target < 0 || s.target > s.capacity)
            throw ConfigError(where + "target must be in [0, capacity]");
        if (s.lat < -90.0 || s.lat > 90.0) throw ConfigError(where + "latitude out of range");
        if (s.lon < -180.0 || s.lon > 180.0) throw ConfigError(where + "longitude out of range");
    }
}

int StationRegistry::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < stations_.size(); ++i) {
        if (stations_[i].id == id) return static_cast<int>(i);
    }
    return -1;
}

StationRegistry StationRegistry::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open station registry: " + path);

    std::string line;
    if (!std::getline(in, line)) throw IoError("empty station registry: " + path);
    auto header = util::split_csv_line(line);
    bool has_target = header.size() >= 6 && util::trim(header[5]) == "target";
    if (header.size() < 5 || util::trim(header[0]) != "id") {
        throw IoError("registry header must be id,name,lat,lon,capacity[,target]: " + path);
    }

    std::vector<Station> stations;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (util::trim(line).empty()) continue;
        auto f = util::split_csv_line(line);
        if (f.size() < 5) {
            throw IoError(path + ":" + std::to_string(row) + ": expected at least 5 fields");
        }
        Station s;
        s.id = util::trim(f[0]);
        s.name = f[1];
        try {
            s.lat = std::stod(f[2]);
            s.lon = std::stod(f[3]);
            s.capacity = std::stoi(f[4]);
            s.target = (has_target && f.size() >= 6 && !util::trim(f[5]).empty())
                           ? std::stoi(f[5])
                           : default_target(s.capacity);
        } catch (const std::exception&) {
            throw IoError(path + ":" + std::to_string(row) + ": malformed numeric field");
        }
        stations.push_back(std::move(s));
    }
    return StationRegistry(std::move(stations));
}

void StationRegistry::save_csv(const std::string& path) const {
    std::ostringstream out;
    out << "id,name,lat,lon,capacity,target\n";
    for (const Station& s : stations_) {
        std::string name = s.name;
        bool quote = name.find(',') != std::string::npos || name.find('"') != std::string::npos;
        if (quote) {
            std::string esc;
            for (char c : name) {
                if (c == '"') esc += "\"\"";
                else esc.push_back(c);
            }
            name = "\"" + esc + "\"";
        }
        char coords[64];
        std::snprintf(coords, sizeof(coords), "%.6f,%.6f", s.lat, s.lon);
        out << s.id << ',' << name << ',' << coords << ',' << s.capacity << ',' << s.target
            << '\n';
    }
    util::write_file(path, out.str());
}

std::vector<double> NetworkState::to_vector() const {
    std::vector<double> v;
    v.reserve(inventories.size() + 1);
    for (int x : inventories) v.push_back(static_cast<double>(x));
    v.push_back(static_cast<double>(hour));
    return v;
}

std::vector<double> NetworkState::normalized(const StationRegistry& registry) const {
    if (inventories.size() != registry.size()) {
        throw ContractViolation("NetworkState/registry size mismatch");
    }
    std::vector<double> v;
    v.reserve(inventories.size() + 1);
    for (std::size_t i = 0; i < inventories.size(); ++i) {
        v.push_back(static_cast<double>(inventories[i]) / registry.capacity(i));
    }
    v.push_back(static_cast<double>(hour) / 23.0);
    return v;
}

void SimConfig::validate() const {
    if (gamma <= 0.0 || gamma >= 1.0) throw ConfigError("gamma must be in (0,1)");
    if (learning_rate <= 0.0) throw ConfigError("learning_rate must be positive");
    if (buffer_capacity < batch_size) throw ConfigError("buffer_capacity must be >= batch_size");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epsilon_start < epsilon_end || epsilon_end < 0.0)
        throw ConfigError("require epsilon_start >= epsilon_end >= 0");
    if (epsilon_decay_fraction <= 0.0 || epsilon_decay_fraction > 1.0)
        throw ConfigError("epsilon_decay_fraction must be in (0,1]");
    if (hidden1 < 1 || hidden2 < 1) throw ConfigError("hidden sizes must be >= 1");
    if (episode_hours < 1) throw ConfigError("episode_hours must be >= 1");
    if (truck_capacity < 1) throw ConfigError("truck_capacity must be >= 1");
    if (truck_speed_kmh <= 0.0) throw ConfigError("truck_speed_kmh must be positive");
    if (circuity_factor < 1.0) throw ConfigError("circuity_factor must be >= 1");
    if (load_minutes_per_stop < 0) throw ConfigError("load_minutes_per_stop must be >= 0");
    if (train_freq < 1) throw ConfigError("train_freq must be >= 1");
    if (target_sync_interval < 1) throw ConfigError("target_sync_interval must be >= 1");
    if (total_timesteps < 0) throw ConfigError("total_timesteps must be >= 0");
    if (seeds.empty()) throw ConfigError("seed list must not be empty");
}

int encode_action(int source, int dest, int n) {
    if (n < 2) throw ContractViolation("encode_action: need at least 2 stations");
    if (source < 0 || source >= n || dest < 0 || dest >= n) {
        throw ContractViolation("encode_action: station index out of range");
    }
    if (source == dest) throw ContractViolation("encode_action: source == dest");
    return source * (n - 1) + (dest < source ? dest : dest - 1);
}

Action decode_action(int index, int n) {
    if (n < 2) throw ContractViolation("decode_action: need at least 2 stations");
    if (index < 0 || index >= action_space_size(n)) {
        throw ContractViolation("decode_action: index out of range");
    }
    int source = index / (n - 1);
    int r = index % (n - 1);
    return Action{source, r < source ? r : r + 1};
}

int need(const NetworkState& state, int j, const StationRegistry& registry) {
    if (j < 0 || static_cast<std::size_t>(j) >= registry.size()) {
        throw ContractViolation("need: station index out of range");
    }
    return std::max(0, registry.target(j) - state.inventories[j]);
}

}  // namespace smartflow::domain
