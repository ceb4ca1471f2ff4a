#include "smartflow/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "smartflow/errors.hpp"
#include "smartflow/util.hpp"

namespace smartflow::ingest {

namespace {

enum class DropReason { None, MissingCoordinates, InvalidDuration, UnknownStation };

DropReason classify(const TripRecord& t, const CleansingRules& rules,
                    const std::unordered_set<std::string>* known_ids) {
    // Empty coordinate fields parse to NaN.
    if (std::isnan(t.start_lat) || std::isnan(t.start_lon) || std::isnan(t.end_lat) ||
        std::isnan(t.end_lon)) {
        return DropReason::MissingCoordinates;
    }
    const std::int64_t dur = t.end_time - t.start_time;
    if (dur <= rules.min_seconds || dur >= rules.max_seconds) {
        return DropReason::InvalidDuration;
    }
    if (t.start_station_id.empty() || t.end_station_id.empty()) {
        return DropReason::UnknownStation;
    }
    if (known_ids != nullptr &&
        (known_ids->count(t.start_station_id) == 0 || known_ids->count(t.end_station_id) == 0)) {
        return DropReason::UnknownStation;
    }
    return DropReason::None;
}

void count_drop(DropReason r, DropCounts& counts) {
    switch (r) {
        case DropReason::MissingCoordinates: ++counts.missing_coordinates; break;
        case DropReason::InvalidDuration: ++counts.invalid_duration; break;
        case DropReason::UnknownStation: ++counts.unknown_station; break;
        case DropReason::None: break;
    }
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (util::trim(header[i]) == name) return static_cast<int>(i);
    }
    return -1;
}

}  // namespace

std::vector<TripRecord> cleanse(const std::vector<TripRecord>& trips,
                                const CleansingRules& rules, DropCounts& counts,
                                const std::unordered_set<std::string>* known_ids) {
    std::vector<TripRecord> kept;
    kept.reserve(trips.size());
    for (const TripRecord& t : trips) {
        DropReason r = classify(t, rules, known_ids);
        if (r == DropReason::None) {
            kept.push_back(t);
        } else {
            count_drop(r, counts);
        }
    }
    return kept;
}

TripLoadResult load_trips(const std::string& path, const CleansingRules& rules,
                          const std::unordered_set<std::string>* known_ids) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trip log: " + path);

    std::string line;
    if (!std::getline(in, line)) throw IoError("empty trip log: " + path);
    auto header = util::split_csv_line(line);

    const int c_start = find_column(header, "starttime");
    const int c_stop = find_column(header, "stoptime");
    const int c_sid = find_column(header, "start station id");
    const int c_eid = find_column(header, "end station id");
    const int c_slat = find_column(header, "start station latitude");
    const int c_slon = find_column(header, "start station longitude");
    const int c_elat = find_column(header, "end station latitude");
    const int c_elon = find_column(header, "end station longitude");
    if (c_start < 0 || c_stop < 0 || c_sid < 0 || c_eid < 0 || c_slat < 0 || c_slon < 0 ||
        c_elat < 0 || c_elon < 0) {
        throw IoError("trip log is missing required columns: " + path);
    }
    const int max_col = std::max({c_start, c_stop, c_sid, c_eid, c_slat, c_slon, c_elat, c_elon});

    TripLoadResult result;
    while (std::getline(in, line)) {
        if (util::trim(line).empty()) continue;
        auto f = util::split_csv_line(line);
        if (static_cast<int>(f.size()) <= max_col) {
            ++result.dropped.malformed;
            continue;
        }
        TripRecord t;
        auto start = util::parse_timestamp(util::trim(f[c_start]));
        auto stop = util::parse_timestamp(util::trim(f[c_stop]));
        if (!start || !stop) {
            ++result.dropped.malformed;
            continue;
        }
        t.start_time = *start;
        t.end_time = *stop;
        t.start_station_id = util::trim(f[c_sid]);
        t.end_station_id = util::trim(f[c_eid]);

        auto coord = [](const std::string& s, double& out) {
            std::string v = util::trim(s);
            if (v.empty()) {
                out = std::numeric_limits<double>::quiet_NaN();
                return true;
            }
            try {
                std::size_t pos = 0;
                out = std::stod(v, &pos);
                return pos == v.size();
            } catch (const std::exception&) {
                return false;
            }
        };
        if (!coord(f[c_slat], t.start_lat) || !coord(f[c_slon], t.start_lon) ||
            !coord(f[c_elat], t.end_lat) || !coord(f[c_elon], t.end_lon)) {
            ++result.dropped.malformed;
            continue;
        }
        DropReason r = classify(t, rules, known_ids);
        if (r == DropReason::None) {
            result.trips.push_back(std::move(t));
        } else {
            count_drop(r, result.dropped);
        }
    }
    return result;
}

std::vector<std::string> select_top_k(const std::vector<TripRecord>& trips, std::size_t k) {
    if (k < 1) throw ContractViolation("select_top_k: k must be >= 1");
    std::map<std::string, std::size_t> counts;
    for (const TripRecord& t : trips) {
        ++counts[t.start_station_id];
        ++counts[t.end_station_id];
    }
    if (counts.size() < k) {
        throw ConfigError("select_top_k: only " + std::to_string(counts.size()) +
                          " distinct stations in the trip log, need " + std::to_string(k));
    }
    std::vector<std::pair<std::string, std::size_t>> order(counts.begin(), counts.end());
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::vector<std::string> ids;
    ids.reserve(k);
    for (std::size_t i = 0; i < k; ++i) ids.push_back(order[i].first);
    return ids;
}

DemandProfile::DemandProfile(std::vector<std::string> station_ids,
                             std::vector<std::vector<int>> deltas)
    : station_ids_(std::move(station_ids)), deltas_(std::move(deltas)) {
    if (station_ids_.size() != deltas_.size()) {
        throw ContractViolation("DemandProfile: id/delta row count mismatch");
    }
    for (const auto& row : deltas_) {
        if (row.size() != 24) throw ContractViolation("DemandProfile: rows must have 24 hours");
    }
}

void DemandProfile::save_csv(const std::string& path) const {
    std::ostringstream out;
    out << "id";
    for (int h = 0; h < 24; ++h) out << ",h" << h;
    out << '\n';
    for (std::size_t i = 0; i < station_ids_.size(); ++i) {
        out << station_ids_[i];
        for (int h = 0; h < 24; ++h) out << ',' << deltas_[i][h];
        out << '\n';
    }
    util::write_file(path, out.str());
}

DemandProfile DemandProfile::load_csv(const std::string& path,
                                      const domain::StationRegistry& registry) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open demand profile: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty demand profile: " + path);
    auto header = util::split_csv_line(line);
    if (header.size() != 25 || util::trim(header[0]) != "id") {
        throw IoError("demand profile header must be id,h0..h23: " + path);
    }

    std::map<std::string, std::vector<int>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (util::trim(line).empty()) continue;
        auto f = util::split_csv_line(line);
        if (f.size() != 25) {
            throw IoError(path + ":" + std::to_string(lineno) + ": expected 25 fields");
        }
        std::vector<int> deltas(24);
        try {
            for (int h = 0; h < 24; ++h) deltas[h] = std::stoi(f[h + 1]);
        } catch (const std::exception&) {
            throw IoError(path + ":" + std::to_string(lineno) + ": malformed delta");
        }
        rows[util::trim(f[0])] = std::move(deltas);
    }

    std::vector<std::string> ids;
    std::vector<std::vector<int>> deltas;
    for (const auto& s : registry.stations()) {
        auto it = rows.find(s.id);
        if (it == rows.end()) {
            throw ConfigError("demand profile has no row for station '" + s.id + "'");
        }
        ids.push_back(s.id);
        deltas.push_back(it->second);
    }
    if (rows.size() != registry.size()) {
        throw ConfigError("demand profile lists " + std::to_string(rows.size()) +
                          " stations, registry has " + std::to_string(registry.size()));
    }
    return DemandProfile(std::move(ids), std::move(deltas));
}

DemandProfile build_demand_profile(const std::vector<TripRecord>& trips,
                                   const domain::StationRegistry& registry,
                                   std::int64_t date_days) {
    if (registry.size() == 0) throw ContractViolation("build_demand_profile: empty registry");

    std::vector<std::vector<int>> deltas(registry.size(), std::vector<int>(24, 0));
    std::size_t touched = 0;
    for (const TripRecord& t : trips) {
        if (t.start_time / 86400 == date_days) {
            int idx = registry.index_of(t.start_station_id);
            if (idx >= 0) {
                deltas[idx][(t.start_time % 86400) / 3600] -= 1;
                ++touched;
            }
        }
        if (t.end_time / 86400 == date_days) {
            int idx = registry.index_of(t.end_station_id);
            if (idx >= 0) {
                deltas[idx][(t.end_time % 86400) / 3600] += 1;
                ++touched;
            }
        }
    }
    if (touched == 0) {
        throw ConfigError(
            "no trips touch the selected stations on the requested date; try a different date");
    }
    std::vector<std::string> ids;
    for (const auto& s : registry.stations()) ids.push_back(s.id);
    return DemandProfile(std::move(ids), std::move(deltas));
}

}  // namespace smartflow::ingest
