#include "smartflow/planner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "smartflow/errors.hpp"
#include "smartflow/util.hpp"

using nlohmann::json;

namespace smartflow::planner {

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
    constexpr double kEarthRadiusKm = 6371.0;
    constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
    const double dlat = (lat2 - lat1) * kDegToRad;
    const double dlon = (lon2 - lon1) * kDegToRad;
    const double s1 = std::sin(dlat / 2.0);
    const double s2 = std::sin(dlon / 2.0);
    double a = s1 * s1 + std::cos(lat1 * kDegToRad) * std::cos(lat2 * kDegToRad) * s2 * s2;
    a = std::clamp(a, 0.0, 1.0);
    return kEarthRadiusKm * 2.0 * std::atan2(std::sqrt(a), std::sqrt(1.0 - a));
}

DistanceProvider::DistanceProvider(std::vector<std::vector<double>> km) : km_(std::move(km)) {
    const std::size_t n = km_.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (km_[i].size() != n) throw ConfigError("distance matrix is not square");
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(km_[i][j]) || km_[i][j] < 0.0) {
                throw ConfigError("distance matrix entry (" + std::to_string(i) + "," +
                                  std::to_string(j) + ") is not a non-negative number");
            }
            if (i == j && km_[i][j] != 0.0) {
                throw ConfigError("distance matrix diagonal must be zero");
            }
            if (i != j && km_[i][j] <= 0.0) {
                throw ConfigError("distance matrix entry (" + std::to_string(i) + "," +
                                  std::to_string(j) + ") must be positive");
            }
        }
    }
}

DistanceProvider DistanceProvider::haversine(const domain::StationRegistry& registry,
                                             double circuity_factor) {
    if (circuity_factor < 1.0) throw ConfigError("circuity factor must be >= 1");
    const std::size_t n = registry.size();
    std::vector<std::vector<double>> km(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto& a = registry.at(i);
            const auto& b = registry.at(j);
            const double d = haversine_km(a.lat, a.lon, b.lat, b.lon) * circuity_factor;
            km[i][j] = d;
            km[j][i] = d;
        }
    }
    return DistanceProvider(std::move(km));
}

DistanceProvider DistanceProvider::from_matrix(std::vector<std::vector<double>> km) {
    return DistanceProvider(std::move(km));
}

DistanceProvider DistanceProvider::from_matrix_file(const std::string& path,
                                                    const domain::StationRegistry& registry) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open distance matrix: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty distance matrix: " + path);
    const auto header = util::split_csv_line(line);
    if (header.size() < 2 || util::trim(header[0]) != "id") {
        throw ConfigError("distance matrix header must be id,<station ids>: " + path);
    }

    std::map<std::string, std::size_t> col_of;
    for (std::size_t c = 1; c < header.size(); ++c) col_of[util::trim(header[c])] = c;

    std::map<std::string, std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (util::trim(line).empty()) continue;
        auto f = util::split_csv_line(line);
        if (f.size() != header.size()) {
            throw ConfigError("distance matrix row width mismatch in " + path);
        }
        rows[util::trim(f[0])] = std::move(f);
    }

    const std::size_t n = registry.size();
    std::vector<std::vector<double>> km(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        const std::string& rid = registry.at(i).id;
        auto row_it = rows.find(rid);
        if (row_it == rows.end()) {
            throw ConfigError("distance matrix has no row for station '" + rid + "'");
        }
        for (std::size_t j = 0; j < n; ++j) {
            const std::string& cid = registry.at(j).id;
            auto col_it = col_of.find(cid);
            if (col_it == col_of.end()) {
                throw ConfigError("distance matrix has no column for station '" + cid + "'");
            }
            const std::string cell = util::trim(row_it->second[col_it->second]);
            if (cell.empty()) {
                throw ConfigError("distance matrix entry missing for (" + rid + "," + cid + ")");
            }
            try {
                km[i][j] = std::stod(cell);
            } catch (const std::exception&) {
                throw ConfigError("distance matrix entry for (" + rid + "," + cid +
                                  ") is not a number");
            }
        }
    }
    return DistanceProvider(std::move(km));
}

double DistanceProvider::distance_km(int i, int j) const {
    if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= km_.size() ||
        static_cast<std::size_t>(j) >= km_.size()) {
        throw ContractViolation("distance_km: station index out of range");
    }
    return km_[i][j];
}

std::vector<TransferTask> extract_strategic_plan(const env::EpisodeLog& log) {
    std::vector<TransferTask> tasks;
    std::ptrdiff_t last_positive = -2;
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(log.steps.size()); ++i) {
        const env::StepRecord& rec = log.steps[i];
        if (rec.reward <= 0.0) continue;
        if (last_positive == i - 1 && !tasks.empty() &&
            tasks.back().source == rec.action.source && tasks.back().dest == rec.action.dest) {
            tasks.back().quantity += 1;  // merged run keeps the earliest hour
        } else {
            tasks.push_back(TransferTask{rec.action.source, rec.action.dest, 1,
                                         rec.info.hour_executed});
        }
        last_positive = i;
    }
    return tasks;
}

namespace {

void check_tasks(const std::vector<TransferTask>& tasks, std::size_t n) {
    for (const TransferTask& t : tasks) {
        if (t.source == t.dest) throw ContractViolation("task with source == dest");
        if (t.quantity < 1) throw ContractViolation("task with quantity < 1");
        if (t.need_hour < 0 || t.need_hour > 23) throw ContractViolation("task need_hour out of range");
        if (t.source < 0 || t.dest < 0 || static_cast<std::size_t>(t.source) >= n ||
            static_cast<std::size_t>(t.dest) >= n) {
            throw ContractViolation("task station index out of range");
        }
    }
}

}  // namespace

std::vector<Journey> build_journeys(const std::vector<TransferTask>& tasks,
                                    int truck_capacity, const DistanceProvider& provider) {
    if (truck_capacity < 1) throw ContractViolation("build_journeys: capacity must be >= 1");
    const std::size_t n = provider.size();
    check_tasks(tasks, n);

    std::vector<int> surplus(n, 0), deficit(n, 0);
    for (const TransferTask& t : tasks) {
        surplus[t.source] += t.quantity;
        deficit[t.dest] += t.quantity;
    }
    int total_deficit = std::accumulate(deficit.begin(), deficit.end(), 0);

    std::vector<Journey> journeys;
    while (total_deficit > 0) {
        int s = -1;
        for (std::size_t i = 0; i < n; ++i) {
            if (surplus[i] > 0 && (s < 0 || surplus[i] > surplus[s])) s = static_cast<int>(i);
        }
        if (s < 0) break;  // deficit remains but no bikes to move; reported upstream

        Journey j;
        j.pickup_station = s;
        j.load = std::min({surplus[s], truck_capacity, total_deficit});
        surplus[s] -= j.load;

        int cur = s;
        int carrying = j.load;
        while (carrying > 0) {
            int d = -1;
            for (std::size_t i = 0; i < n; ++i) {
                if (deficit[i] <= 0) continue;
                if (d < 0 || provider.distance_km(cur, static_cast<int>(i)) <
                                 provider.distance_km(cur, d)) {
                    d = static_cast<int>(i);
                }
            }
            JourneyLeg leg;
            leg.station = d;
            leg.drop = std::min(carrying, deficit[d]);
            leg.km = provider.distance_km(cur, d);
            deficit[d] -= leg.drop;
            total_deficit -= leg.drop;
            carrying -= leg.drop;
            j.total_km += leg.km;
            j.legs.push_back(leg);
            cur = d;
        }
        journeys.push_back(std::move(j));
    }
    return journeys;
}

int travel_minutes(double km, double speed_kmh) {
    if (speed_kmh <= 0.0) throw ContractViolation("travel_minutes: speed must be positive");
    if (km <= 0.0) return 0;
    // Round up, with a small slack so exact minute counts survive binary
    // rounding of km/speed.
    return static_cast<int>(std::ceil(km / speed_kmh * 60.0 - 1e-9));
}

std::vector<Journey> schedule_journeys(std::vector<Journey> journeys,
                                       const std::vector<TransferTask>& tasks,
                                       const DistanceProvider& provider,
                                       double speed_kmh, int load_minutes) {
    if (load_minutes < 0) throw ContractViolation("schedule_journeys: negative load time");
    const std::size_t n = provider.size();
    check_tasks(tasks, n);

    // Per-destination queues of (need_hour, remaining), most urgent first.
    // Drops consume them in the same order build_journeys consumed deficits,
    // so each leg can name the earliest need it serves.
    std::vector<std::vector<std::pair<int, int>>> queues(n);
    for (const TransferTask& t : tasks) queues[t.dest].push_back({t.need_hour, t.quantity});
    for (auto& q : queues) {
        std::stable_sort(q.begin(), q.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
    }

    for (Journey& j : journeys) {
        for (JourneyLeg& leg : j.legs) {
            auto& q = queues[leg.station];
            int remaining = leg.drop;
            int earliest = -1;
            for (auto& [hour, qty] : q) {
                if (remaining == 0) break;
                if (qty == 0) continue;
                if (earliest < 0) earliest = hour;
                const int take = std::min(qty, remaining);
                qty -= take;
                remaining -= take;
            }
            if (earliest < 0) {
                throw ContractViolation("journey leg does not map to any task's need");
            }
            leg.deadline_minutes = earliest * 60;
        }

        // Backward pass: arrive exactly at the deadline unless the next leg
        // forces an earlier visit.
        const std::size_t last = j.legs.size() - 1;
        j.legs[last].arrival_minutes = j.legs[last].deadline_minutes;
        for (std::size_t k = last; k-- > 0;) {
            const int chained = j.legs[k + 1].arrival_minutes -
                                travel_minutes(j.legs[k + 1].km, speed_kmh) - load_minutes;
            j.legs[k].arrival_minutes = std::min(j.legs[k].deadline_minutes, chained);
        }

        j.legs[0].dispatch_minutes = j.legs[0].arrival_minutes -
                                     travel_minutes(j.legs[0].km, speed_kmh) - load_minutes;
        for (std::size_t k = 1; k < j.legs.size(); ++k) {
            j.legs[k].dispatch_minutes =
                j.legs[k].arrival_minutes - travel_minutes(j.legs[k].km, speed_kmh);
        }

        if (j.legs[0].dispatch_minutes < 0) {
            j.tight_schedule = true;
            j.legs[0].dispatch_minutes = 0;
            j.legs[0].arrival_minutes =
                load_minutes + travel_minutes(j.legs[0].km, speed_kmh);
            for (std::size_t k = 1; k < j.legs.size(); ++k) {
                const int earliest = j.legs[k - 1].arrival_minutes + load_minutes +
                                     travel_minutes(j.legs[k].km, speed_kmh);
                j.legs[k].arrival_minutes = std::max(j.legs[k].arrival_minutes, earliest);
                j.legs[k].dispatch_minutes =
                    j.legs[k].arrival_minutes - travel_minutes(j.legs[k].km, speed_kmh);
            }
        }
    }

    std::stable_sort(journeys.begin(), journeys.end(), [](const Journey& a, const Journey& b) {
        auto earliest = [](const Journey& j) {
            int e = j.legs.front().deadline_minutes;
            for (const JourneyLeg& l : j.legs) e = std::min(e, l.deadline_minutes);
            return e;
        };
        return earliest(a) < earliest(b);
    });
    for (std::size_t k = 0; k < journeys.size(); ++k) {
        journeys[k].truck_id = static_cast<int>(k) + 1;
    }
    return journeys;
}

json plan_to_json(const std::vector<Journey>& journeys,
                  const domain::StationRegistry& registry, const std::string& date) {
    json trucks = json::array();
    for (const Journey& j : journeys) {
        json legs = json::array();
        for (const JourneyLeg& leg : j.legs) {
            legs.push_back(json{
                {"station", registry.at(leg.station).name},
                {"drop", leg.drop},
                {"dispatch_time", util::format_hhmm(leg.dispatch_minutes)},
                {"arrival_time", util::format_hhmm(leg.arrival_minutes)},
                {"km", util::round2(leg.km)},
            });
        }
        trucks.push_back(json{
            {"truck_id", j.truck_id},
            {"pickup", {{"station", registry.at(j.pickup_station).name}, {"load", j.load}}},
            {"legs", legs},
            {"total_km", util::round2(j.total_km)},
            {"tight_schedule", j.tight_schedule},
        });
    }
    return json{{"date", date}, {"trucks", trucks}};
}

namespace {

bool is_hhmm(const std::string& s) {
    return s.size() == 5 && std::isdigit(static_cast<unsigned char>(s[0])) &&
           std::isdigit(static_cast<unsigned char>(s[1])) && s[2] == ':' &&
           std::isdigit(static_cast<unsigned char>(s[3])) &&
           std::isdigit(static_cast<unsigned char>(s[4])) &&
           (s[0] - '0') * 10 + (s[1] - '0') < 24 && (s[3] - '0') * 10 + (s[4] - '0') < 60;
}

}  // namespace

std::vector<std::string> validate_plan(const json& plan) {
    std::vector<std::string> bad;
    auto require = [&bad](bool ok, const std::string& path) {
        if (!ok) bad.push_back(path);
    };

    if (!plan.is_object()) {
        return {"$ (plan must be a JSON object)"};
    }
    require(plan.contains("date") && plan["date"].is_string() &&
                !plan["date"].get<std::string>().empty(),
            "date");
    if (!plan.contains("trucks") || !plan["trucks"].is_array()) {
        bad.push_back("trucks");
        return bad;
    }
    const json& trucks = plan["trucks"];
    for (std::size_t t = 0; t < trucks.size(); ++t) {
        const std::string tp = "trucks[" + std::to_string(t) + "]";
        const json& truck = trucks[t];
        if (!truck.is_object()) {
            bad.push_back(tp);
            continue;
        }
        require(truck.contains("truck_id") && truck["truck_id"].is_number_integer() &&
                    truck["truck_id"].get<int>() >= 1,
                tp + ".truck_id");
        require(truck.contains("tight_schedule") && truck["tight_schedule"].is_boolean(),
                tp + ".tight_schedule");
        require(truck.contains("total_km") && truck["total_km"].is_number() &&
                    truck["total_km"].get<double>() >= 0.0,
                tp + ".total_km");

        int load = -1;
        if (truck.contains("pickup") && truck["pickup"].is_object() &&
            truck["pickup"].contains("station") && truck["pickup"]["station"].is_string() &&
            !truck["pickup"]["station"].get<std::string>().empty() &&
            truck["pickup"].contains("load") && truck["pickup"]["load"].is_number_integer() &&
            truck["pickup"]["load"].get<int>() >= 1) {
            load = truck["pickup"]["load"].get<int>();
        } else {
            bad.push_back(tp + ".pickup");
        }

        if (!truck.contains("legs") || !truck["legs"].is_array() || truck["legs"].empty()) {
            bad.push_back(tp + ".legs");
            continue;
        }
        int dropped = 0;
        const json& legs = truck["legs"];
        for (std::size_t l = 0; l < legs.size(); ++l) {
            const std::string lp = tp + ".legs[" + std::to_string(l) + "]";
            const json& leg = legs[l];
            if (!leg.is_object()) {
                bad.push_back(lp);
                continue;
            }
            require(leg.contains("station") && leg["station"].is_string() &&
                        !leg["station"].get<std::string>().empty(),
                    lp + ".station");
            if (leg.contains("drop") && leg["drop"].is_number_integer() &&
                leg["drop"].get<int>() >= 1) {
                dropped += leg["drop"].get<int>();
            } else {
                bad.push_back(lp + ".drop");
            }
            require(leg.contains("dispatch_time") && leg["dispatch_time"].is_string() &&
                        is_hhmm(leg["dispatch_time"].get<std::string>()),
                    lp + ".dispatch_time");
            require(leg.contains("arrival_time") && leg["arrival_time"].is_string() &&
                        is_hhmm(leg["arrival_time"].get<std::string>()),
                    lp + ".arrival_time");
            require(leg.contains("km") && leg["km"].is_number() &&
                        leg["km"].get<double>() >= 0.0,
                    lp + ".km");
        }
        if (load >= 1 && dropped != load) {
            bad.push_back(tp + " (drops must sum to the pickup load)");
        }
    }
    return bad;
}

}  // namespace smartflow::planner
