#include <httplib.h>

#include "smartflow/report.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <optional>
#include <regex>
#include <set>
#include <sstream>

#include "smartflow/errors.hpp"
#include "smartflow/planner.hpp"
#include "smartflow/util.hpp"

using nlohmann::json;

namespace smartflow::report {

EndpointConfig endpoint_from_env() {
    EndpointConfig cfg;
    if (const char* url = std::getenv("SMARTFLOW_LLM_URL")) cfg.url = url;
    if (const char* key = std::getenv("SMARTFLOW_LLM_KEY")) cfg.api_key = key;
    if (const char* model = std::getenv("SMARTFLOW_LLM_MODEL")) cfg.model = model;
    return cfg;
}

namespace {

void require_valid(const json& plan) {
    auto bad = planner::validate_plan(plan);
    if (!bad.empty()) {
        throw SchemaError("journey plan failed validation", std::move(bad));
    }
}

std::string plural(std::int64_t n, const char* one, const char* many) {
    return std::to_string(n) + " " + (n == 1 ? one : many);
}

struct PlanTotals {
    std::int64_t trucks = 0;
    std::int64_t bikes = 0;
    double km = 0.0;
};

PlanTotals totals_of(const json& plan) {
    PlanTotals t;
    for (const json& truck : plan.at("trucks")) {
        ++t.trucks;
        for (const json& leg : truck.at("legs")) t.bikes += leg.at("drop").get<int>();
        t.km += truck.at("total_km").get<double>();
    }
    t.km = util::round2(t.km);
    return t;
}

std::vector<std::string> split_tickets(const std::string& markdown, std::string& briefing) {
    std::vector<std::string> tickets;
    std::istringstream in(markdown);
    std::string line;
    std::string current;
    bool in_ticket = false;
    std::ostringstream head;
    while (std::getline(in, line)) {
        if (line.rfind("## ", 0) == 0) {
            if (in_ticket) tickets.push_back(util::trim(current));
            current.clear();
            in_ticket = true;
        }
        if (in_ticket) {
            current += line + "\n";
        } else if (line.rfind("# ", 0) != 0) {
            head << line << "\n";
        }
    }
    if (in_ticket) tickets.push_back(util::trim(current));
    briefing = util::trim(head.str());
    return tickets;
}

}  // namespace

DispatchReport format_report(const json& plan) {
    require_valid(plan);
    const PlanTotals t = totals_of(plan);

    std::ostringstream out;
    out << "# SmartFlow Dispatch Report — " << plan.at("date").get<std::string>() << "\n\n";
    out << plural(t.trucks, "truck", "trucks") << " dispatched, "
        << plural(t.bikes, "bike", "bikes") << " moved, " << util::format_km(t.km)
        << " km total fleet travel.\n";

    for (const json& truck : plan.at("trucks")) {
        out << "\n## Truck " << truck.at("truck_id").get<int>() << "\n\n";
        const json& legs = truck.at("legs");
        out << "- " << legs.at(0).at("dispatch_time").get<std::string>() << " — "
            << truck.at("pickup").at("station").get<std::string>() << " — load "
            << plural(truck.at("pickup").at("load").get<int>(), "bike", "bikes") << "\n";
        for (const json& leg : legs) {
            out << "- " << leg.at("arrival_time").get<std::string>() << " — "
                << leg.at("station").get<std::string>() << " — drop "
                << plural(leg.at("drop").get<int>(), "bike", "bikes") << "\n";
        }
        out << "\nRoute: " << util::format_km(truck.at("total_km").get<double>()) << " km";
        if (truck.at("tight_schedule").get<bool>()) out << " (tight schedule)";
        out << "\n";
    }

    DispatchReport r;
    r.markdown = out.str();
    r.source = ReportSource::Deterministic;
    r.tickets = split_tickets(r.markdown, r.manager_briefing);
    return r;
}

std::string build_prompt(const json& plan) {
    std::ostringstream out;
    out << "You are SmartFlow, an autonomous Logistics Analyst for a bike-sharing "
           "network.\n\n"
           "TASK\n"
           "Write a dispatch report for the operations team: a manager's briefing "
           "followed by one dispatch ticket per truck.\n\n"
           "NON-NEGOTIABLE RULES\n"
           "1. Generate the report using only the data in the JOURNEY PLAN section "
           "below.\n"
           "2. Never invent or alter station names, bike quantities, times, or "
           "distances.\n"
           "3. Every figure you mention must appear in the plan exactly as written "
           "(times as HH:MM, kilometres with two decimals).\n"
           "4. If a value is not in the plan, leave it out.\n\n"
           "OUTPUT FORMAT (Markdown)\n"
           "# SmartFlow Dispatch Report — <date>\n"
           "<one-paragraph briefing: trucks dispatched, bikes moved, total "
           "kilometres>\n"
           "## Truck <truck_id>\n"
           "- <HH:MM> — <station> — load <N> bikes\n"
           "- <HH:MM> — <station> — drop <N> bikes\n\n"
           "JOURNEY PLAN\n";
    out << plan.dump(2) << "\n";
    return out.str();
}

namespace {

std::string normalize_word(const std::string& w) {
    std::string out;
    for (char c : w) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    return out;
}

// Vocabulary the report template itself is allowed to use.
const std::set<std::string>& template_words() {
    static const std::set<std::string> words = {
        "smartflow", "dispatch", "report", "truck", "trucks", "manager", "managers",
        "briefing",  "route",    "pickup", "legs",  "leg",    "flag",    "tight",
        "schedule",  "total",    "fleet",  "travel", "bike",  "bikes",   "load",
        "drop",      "km",       "moved",  "dispatched",
    };
    return words;
}

struct AllowedTokens {
    std::set<std::string> dates;
    std::set<std::string> times;
    std::set<std::string> decimals;   // km figures, two decimals
    std::set<long long> integers;
    std::set<std::string> words;      // normalized station-name words
};

AllowedTokens collect_allowed(const json& plan) {
    AllowedTokens a;
    a.dates.insert(plan.at("date").get<std::string>());

    auto add_name = [&a](const std::string& name) {
        std::istringstream ws(name);
        std::string w;
        while (ws >> w) {
            const std::string norm = normalize_word(w);
            if (norm.empty()) continue;
            bool numeric = std::all_of(norm.begin(), norm.end(),
                                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
            if (numeric) {
                a.integers.insert(std::stoll(norm));
            } else {
                a.words.insert(norm);
            }
        }
    };

    const json& trucks = plan.at("trucks");
    long long total_bikes = 0;
    double grand_km = 0.0;
    std::size_t max_legs = 0;
    for (const json& truck : trucks) {
        a.integers.insert(truck.at("truck_id").get<long long>());
        add_name(truck.at("pickup").at("station").get<std::string>());
        a.integers.insert(truck.at("pickup").at("load").get<long long>());
        a.decimals.insert(util::format_km(truck.at("total_km").get<double>()));
        grand_km += truck.at("total_km").get<double>();
        const json& legs = truck.at("legs");
        max_legs = std::max(max_legs, legs.size());
        for (const json& leg : legs) {
            add_name(leg.at("station").get<std::string>());
            a.integers.insert(leg.at("drop").get<long long>());
            total_bikes += leg.at("drop").get<long long>();
            a.times.insert(leg.at("dispatch_time").get<std::string>());
            a.times.insert(leg.at("arrival_time").get<std::string>());
            a.decimals.insert(util::format_km(leg.at("km").get<double>()));
        }
    }
    a.integers.insert(total_bikes);
    a.integers.insert(static_cast<long long>(trucks.size()));
    a.decimals.insert(util::format_km(util::round2(grand_km)));
    // Small ordinals are legitimate as truck counts or leg indexes.
    for (std::size_t i = 1; i <= std::min<std::size_t>(max_legs, 24); ++i) {
        a.integers.insert(static_cast<long long>(i));
    }
    return a;
}

void mask(std::string& text, std::size_t pos, std::size_t len) {
    for (std::size_t i = pos; i < pos + len && i < text.size(); ++i) text[i] = ' ';
}

}  // namespace

GroundCheckResult ground_check(const std::string& report_text, const json& plan) {
    GroundCheckResult result;
    auto bad = planner::validate_plan(plan);
    if (!bad.empty()) {
        result.passed = false;
        result.violations.push_back("plan itself is invalid");
        return result;
    }
    const AllowedTokens allowed = collect_allowed(plan);
    std::string text = report_text;

    auto scan = [&text](const std::regex& re, auto&& handle) {
        auto begin = std::sregex_iterator(text.begin(), text.end(), re);
        std::vector<std::pair<std::size_t, std::string>> found;
        for (auto it = begin; it != std::sregex_iterator(); ++it) {
            found.emplace_back(static_cast<std::size_t>(it->position()), it->str());
        }
        for (const auto& [pos, s] : found) {
            handle(s);
            mask(text, pos, s.size());
        }
    };

    static const std::regex date_re(R"(\d{4}-\d{2}-\d{2})");
    scan(date_re, [&](const std::string& s) {
        if (allowed.dates.count(s) == 0) {
            result.violations.push_back("date '" + s + "' is not in the plan");
        }
    });

    static const std::regex time_re(R"(\b\d{1,2}:\d{2}\b)");
    scan(time_re, [&](const std::string& s) {
        if (allowed.times.count(s) == 0) {
            result.violations.push_back("time '" + s + "' is not in the plan");
        }
    });

    static const std::regex dec_re(R"(\b\d+\.\d+\b)");
    scan(dec_re, [&](const std::string& s) {
        if (allowed.decimals.count(s) == 0) {
            result.violations.push_back("figure '" + s + "' is not in the plan");
        }
    });

    static const std::regex int_re(R"(\b\d+\b)");
    scan(int_re, [&](const std::string& s) {
        long long v = 0;
        try {
            v = std::stoll(s);
        } catch (const std::exception&) {
            result.violations.push_back("number '" + s + "' is not in the plan");
            return;
        }
        if (allowed.integers.count(v) == 0) {
            result.violations.push_back("quantity '" + s + "' is not in the plan");
        }
    });

    // Any remaining capitalized word must belong to the template vocabulary
    // or to a station name in the plan.
    static const std::regex word_re(R"([A-Z][A-Za-z0-9'’\-]*)");
    scan(word_re, [&](const std::string& s) {
        const std::string norm = normalize_word(s);
        if (norm.empty()) return;
        if (template_words().count(norm) == 0 && allowed.words.count(norm) == 0) {
            result.violations.push_back("station token '" + s + "' is not in the plan");
        }
    });

    result.passed = result.violations.empty();
    return result;
}

namespace {

struct ParsedUrl {
    bool https = false;
    std::string host;
    int port = 80;
    std::string path = "/";
};

std::optional<ParsedUrl> parse_url(const std::string& url) {
    ParsedUrl p;
    std::string rest;
    if (url.rfind("http://", 0) == 0) {
        rest = url.substr(7);
    } else if (url.rfind("https://", 0) == 0) {
        p.https = true;
        p.port = 443;
        rest = url.substr(8);
    } else {
        return std::nullopt;
    }
    const std::size_t slash = rest.find('/');
    std::string hostport = slash == std::string::npos ? rest : rest.substr(0, slash);
    if (slash != std::string::npos) p.path = rest.substr(slash);
    const std::size_t colon = hostport.find(':');
    if (colon != std::string::npos) {
        p.host = hostport.substr(0, colon);
        try {
            p.port = std::stoi(hostport.substr(colon + 1));
        } catch (const std::exception&) {
            return std::nullopt;
        }
    } else {
        p.host = hostport;
    }
    if (p.host.empty()) return std::nullopt;
    return p;
}

std::optional<std::string> call_endpoint(const json& plan, const EndpointConfig& cfg,
                                         std::string& error) {
    const auto url = parse_url(cfg.url);
    if (!url) {
        error = "malformed endpoint url: " + cfg.url;
        return std::nullopt;
    }

    const json body = {
        {"model", cfg.model},
        {"messages", json::array({json{{"role", "user"}, {"content", build_prompt(plan)}}})},
        {"max_tokens", cfg.max_tokens},
    };

    httplib::Headers headers;
    if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

    auto run = [&](auto& client) -> std::optional<std::string> {
        client.set_connection_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
        client.set_read_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
        client.set_write_timeout(cfg.timeout_ms / 1000, (cfg.timeout_ms % 1000) * 1000);
        auto res = client.Post(url->path, headers, body.dump(), "application/json");
        if (!res) {
            error = "endpoint unreachable or timed out";
            return std::nullopt;
        }
        if (res->status < 200 || res->status >= 300) {
            error = "endpoint returned status " + std::to_string(res->status);
            return std::nullopt;
        }
        try {
            const json reply = json::parse(res->body);
            const json& choices = reply.at("choices");
            if (choices.empty()) {
                error = "endpoint reply has no choices";
                return std::nullopt;
            }
            if (choices[0].contains("message")) {
                return choices[0].at("message").at("content").get<std::string>();
            }
            return choices[0].at("text").get<std::string>();
        } catch (const json::exception& e) {
            error = std::string("unparsable endpoint reply: ") + e.what();
            return std::nullopt;
        }
    };

    if (url->https) {
        httplib::SSLClient client(url->host, url->port);
        return run(client);
    }
    httplib::Client client(url->host, url->port);
    return run(client);
}

}  // namespace

DispatchReport generate_report(const json& plan, const EndpointConfig& endpoint,
                               std::string* fallback_reason) {
    DispatchReport deterministic = format_report(plan);  // schema errors propagate
    if (endpoint.url.empty()) {
        if (fallback_reason) *fallback_reason = "no endpoint configured";
        return deterministic;
    }

    std::string error;
    try {
        auto text = call_endpoint(plan, endpoint, error);
        if (!text) {
            if (fallback_reason) *fallback_reason = error;
            return deterministic;
        }
        const GroundCheckResult gc = ground_check(*text, plan);
        if (!gc.passed) {
            if (fallback_reason) {
                *fallback_reason = "grounding failed: " + gc.violations.front();
            }
            return deterministic;
        }
        DispatchReport llm;
        llm.markdown = *text;
        llm.source = ReportSource::Llm;
        llm.tickets = split_tickets(llm.markdown, llm.manager_briefing);
        return llm;
    } catch (const std::exception& e) {
        if (fallback_reason) *fallback_reason = std::string("endpoint failure: ") + e.what();
        return deterministic;
    }
}

}  // namespace smartflow::report
