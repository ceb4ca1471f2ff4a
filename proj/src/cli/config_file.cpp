#include <charconv>
#include <fstream>

#include "smartflow/cli.hpp"
#include "smartflow/errors.hpp"
#include "smartflow/util.hpp"

using nlohmann::json;

namespace smartflow::cli {

namespace {

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\''))) {
        return s.substr(1, s.size() - 2);
    }
    return s;
}

double to_double(const std::string& key, const std::string& raw) {
    try {
        std::size_t pos = 0;
        double v = std::stod(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + raw + "'");
    }
}

std::int64_t to_int(const std::string& key, const std::string& raw) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec != std::errc() || p != raw.data() + raw.size()) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + raw + "'");
    }
    return v;
}

std::vector<std::string> to_list(const std::string& key, const std::string& raw) {
    if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']') {
        throw ConfigError("config key '" + key + "': expected a [list]");
    }
    std::vector<std::string> items;
    std::string body = raw.substr(1, raw.size() - 2);
    std::string cur;
    for (char c : body) {
        if (c == ',') {
            items.push_back(util::trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!util::trim(cur).empty()) items.push_back(util::trim(cur));
    return items;
}

}  // namespace

void apply_config_line(RunSettings& s, const std::string& key, const std::string& raw) {
    domain::SimConfig& c = s.sim;
    if (key == "gamma") c.gamma = to_double(key, raw);
    else if (key == "learning_rate") c.learning_rate = to_double(key, raw);
    else if (key == "buffer_capacity") c.buffer_capacity = static_cast<int>(to_int(key, raw));
    else if (key == "learning_starts") c.learning_starts = static_cast<int>(to_int(key, raw));
    else if (key == "train_freq") c.train_freq = static_cast<int>(to_int(key, raw));
    else if (key == "target_sync_interval") c.target_sync_interval = static_cast<int>(to_int(key, raw));
    else if (key == "hidden1") c.hidden1 = static_cast<int>(to_int(key, raw));
    else if (key == "hidden2") c.hidden2 = static_cast<int>(to_int(key, raw));
    else if (key == "batch_size") c.batch_size = static_cast<int>(to_int(key, raw));
    else if (key == "total_timesteps") c.total_timesteps = to_int(key, raw);
    else if (key == "epsilon_start") c.epsilon_start = to_double(key, raw);
    else if (key == "epsilon_end") c.epsilon_end = to_double(key, raw);
    else if (key == "epsilon_decay_fraction") c.epsilon_decay_fraction = to_double(key, raw);
    else if (key == "moving_avg_window") c.moving_avg_window = static_cast<int>(to_int(key, raw));
    else if (key == "episode_hours") c.episode_hours = static_cast<int>(to_int(key, raw));
    else if (key == "reward_scale") c.rewards.scale = to_double(key, raw);
    else if (key == "reward_wasted") c.rewards.wasted = to_double(key, raw);
    else if (key == "reward_infeasible") c.rewards.infeasible = to_double(key, raw);
    else if (key == "truck_capacity") c.truck_capacity = static_cast<int>(to_int(key, raw));
    else if (key == "truck_speed_kmh") c.truck_speed_kmh = to_double(key, raw);
    else if (key == "circuity_factor") c.circuity_factor = to_double(key, raw);
    else if (key == "load_minutes_per_stop") c.load_minutes_per_stop = static_cast<int>(to_int(key, raw));
    else if (key == "min_trip_seconds") c.min_trip_seconds = to_int(key, raw);
    else if (key == "max_trip_seconds") c.max_trip_seconds = to_int(key, raw);
    else if (key == "seeds") {
        c.seeds.clear();
        for (const std::string& item : to_list(key, raw)) {
            c.seeds.push_back(static_cast<std::uint64_t>(to_int(key, item)));
        }
        if (c.seeds.empty()) throw ConfigError("config key 'seeds': list must not be empty");
    } else if (key == "trips") s.trips_path = unquote(raw);
    else if (key == "stations") s.stations_path = unquote(raw);
    else if (key == "date") s.date = unquote(raw);
    else if (key == "top_k") s.top_k = static_cast<int>(to_int(key, raw));
    else if (key == "out_dir") s.out_dir = unquote(raw);
    else if (key == "data_dir") s.data_dir = unquote(raw);
    else if (key == "distance_matrix") s.distance_matrix = unquote(raw);
    else if (key == "jobs") s.jobs = static_cast<int>(to_int(key, raw));
    else throw ConfigError("unknown config key '" + key + "'");
}

RunSettings load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);

    RunSettings settings;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // Strip comments that are not inside quotes.
        bool quoted = false;
        std::string stripped;
        for (char ch : line) {
            if (ch == '"') quoted = !quoted;
            if (ch == '#' && !quoted) break;
            stripped.push_back(ch);
        }
        stripped = util::trim(stripped);
        if (stripped.empty()) continue;

        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = util::trim(stripped.substr(0, eq));
        const std::string raw = util::trim(stripped.substr(eq + 1));
        if (key.empty() || raw.empty()) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        }
        try {
            apply_config_line(settings, key, raw);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return settings;
}

json settings_json(const RunSettings& s) {
    const domain::SimConfig& c = s.sim;
    return json{
        {"gamma", c.gamma},
        {"learning_rate", c.learning_rate},
        {"buffer_capacity", c.buffer_capacity},
        {"learning_starts", c.learning_starts},
        {"train_freq", c.train_freq},
        {"target_sync_interval", c.target_sync_interval},
        {"hidden1", c.hidden1},
        {"hidden2", c.hidden2},
        {"batch_size", c.batch_size},
        {"total_timesteps", c.total_timesteps},
        {"epsilon_start", c.epsilon_start},
        {"epsilon_end", c.epsilon_end},
        {"epsilon_decay_fraction", c.epsilon_decay_fraction},
        {"moving_avg_window", c.moving_avg_window},
        {"episode_hours", c.episode_hours},
        {"reward_scale", c.rewards.scale},
        {"reward_wasted", c.rewards.wasted},
        {"reward_infeasible", c.rewards.infeasible},
        {"truck_capacity", c.truck_capacity},
        {"truck_speed_kmh", c.truck_speed_kmh},
        {"circuity_factor", c.circuity_factor},
        {"load_minutes_per_stop", c.load_minutes_per_stop},
        {"min_trip_seconds", c.min_trip_seconds},
        {"max_trip_seconds", c.max_trip_seconds},
        {"seeds", c.seeds},
        {"trips", s.trips_path},
        {"stations", s.stations_path},
        {"date", s.date},
        {"top_k", s.top_k},
        {"out_dir", s.out_dir},
        {"data_dir", s.data_dir},
        {"distance_matrix", s.distance_matrix},
        {"jobs", s.jobs},
    };
}

}  // namespace smartflow::cli
