#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <random>
#include <thread>

#include "helpers.hpp"
#include "smartflow/errors.hpp"
#include "smartflow/report.hpp"

using namespace smartflow;
using nlohmann::json;

namespace {

json one_truck_plan() {
    return json::parse(R"({
      "date": "2016-07-01",
      "trucks": [{
        "truck_id": 1,
        "pickup": {"station": "Station Alpha", "load": 3},
        "legs": [
          {"station": "Station Beta", "drop": 2,
           "dispatch_time": "07:35", "arrival_time": "07:55", "km": 6.67},
          {"station": "Station Gamma", "drop": 1,
           "dispatch_time": "08:00", "arrival_time": "08:10", "km": 3.33}
        ],
        "total_km": 10.0,
        "tight_schedule": false
      }]
    })");
}

json empty_plan() { return json{{"date", "2016-07-01"}, {"trucks", json::array()}}; }

std::size_t count_lines_containing(const std::string& text, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

/// Local chat-completion stand-in with scriptable behaviour.
class MockEndpoint {
public:
    explicit MockEndpoint(std::function<void(const httplib::Request&, httplib::Response&)> h) {
        server_.Post("/v1/chat/completions", std::move(h));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockEndpoint() {
        server_.stop();
        thread_.join();
    }
    report::EndpointConfig config(int timeout_ms = 2000) const {
        report::EndpointConfig cfg;
        cfg.url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
        cfg.model = "mock";
        cfg.timeout_ms = timeout_ms;
        return cfg;
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

std::string completion_body(const std::string& content) {
    return json{{"choices", json::array({json{{"message", json{{"content", content}}}}})}}
        .dump();
}

}  // namespace

TEST_CASE("formatter output follows the fixed template") {
    SUBCASE("empty plan") {
        const auto r = report::format_report(empty_plan());
        CHECK(r.markdown.find("0 trucks dispatched") != std::string::npos);
        CHECK(r.markdown.find("## Truck") == std::string::npos);
        CHECK(r.tickets.empty());
        CHECK(r.source == report::ReportSource::Deterministic);
    }
    SUBCASE("one-truck plan has one pickup line and two leg lines") {
        const auto r = report::format_report(one_truck_plan());
        REQUIRE(r.tickets.size() == 1);
        CHECK(count_lines_containing(r.tickets[0], "— load ") == 1);
        CHECK(count_lines_containing(r.tickets[0], "— drop ") == 2);
        CHECK(r.markdown.find("# SmartFlow Dispatch Report — 2016-07-01") == 0);
        CHECK(r.markdown.find("1 truck dispatched, 3 bikes moved, 10.00 km") !=
              std::string::npos);
        CHECK(r.markdown.find("07:35 — Station Alpha — load 3 bikes") != std::string::npos);
        CHECK(r.markdown.find("07:55 — Station Beta — drop 2 bikes") != std::string::npos);
    }
    SUBCASE("byte-identical for identical input") {
        CHECK(report::format_report(one_truck_plan()).markdown ==
              report::format_report(one_truck_plan()).markdown);
    }
    SUBCASE("schema violations raise with offending paths") {
        auto bad = one_truck_plan();
        bad["trucks"][0].erase("total_km");
        CHECK_THROWS_AS(report::format_report(bad), SchemaError);
        try {
            report::format_report(bad);
        } catch (const SchemaError& e) {
            REQUIRE_FALSE(e.paths().empty());
            CHECK(e.paths()[0].find("total_km") != std::string::npos);
        }
    }
}

TEST_CASE("formatter output always grounds against its own plan") {
    std::mt19937_64 rng(55);
    for (int trial = 0; trial < 200; ++trial) {
        const json plan = testutil::random_plan(rng);
        const auto r = report::format_report(plan);
        const auto gc = report::ground_check(r.markdown, plan);
        if (!gc.passed) {
            CAPTURE(r.markdown);
            CAPTURE(gc.violations[0]);
        }
        CHECK(gc.passed);
    }
}

TEST_CASE("ground check flags hallucinated content") {
    const json plan = one_truck_plan();
    const std::string good = report::format_report(plan).markdown;

    SUBCASE("station rename") {
        std::string bad = good;
        const auto pos = bad.find("Station Beta");
        bad.replace(pos, 12, "Station Zeta");
        const auto gc = report::ground_check(bad, plan);
        CHECK_FALSE(gc.passed);
        bool found = false;
        for (const auto& v : gc.violations) {
            if (v.find("Zeta") != std::string::npos) found = true;
        }
        CHECK(found);
    }
    SUBCASE("km off by one hundredth") {
        std::string bad = good;
        const auto pos = bad.find("10.00");
        bad.replace(pos, 5, "10.01");
        CHECK_FALSE(report::ground_check(bad, plan).passed);
    }
    SUBCASE("time shift") {
        std::string bad = good;
        const auto pos = bad.find("07:35");
        bad.replace(pos, 5, "07:36");
        CHECK_FALSE(report::ground_check(bad, plan).passed);
    }
    SUBCASE("quantity change") {
        std::string bad = good;
        const auto pos = bad.find("drop 2 bikes");
        bad.replace(pos, 12, "drop 9 bikes");
        CHECK_FALSE(report::ground_check(bad, plan).passed);
    }
    SUBCASE("wrong date") {
        std::string bad = good;
        const auto pos = bad.find("2016-07-01");
        bad.replace(pos, 10, "2016-07-02");
        CHECK_FALSE(report::ground_check(bad, plan).passed);
    }
}

TEST_CASE("prompt embeds the plan verbatim under fixed instructions") {
    const json plan = one_truck_plan();
    const std::string prompt = report::build_prompt(plan);
    CHECK(prompt.find(plan.dump(2)) != std::string::npos);
    CHECK(prompt.find("SmartFlow, an autonomous Logistics Analyst") != std::string::npos);
    CHECK(prompt.find("only the data") != std::string::npos);

    SUBCASE("two plans differ only in the data section") {
        json other = one_truck_plan();
        other["trucks"][0]["pickup"]["load"] = 30;
        other["trucks"][0]["legs"][0]["drop"] = 29;
        const std::string p1 = report::build_prompt(plan);
        const std::string p2 = report::build_prompt(other);
        const std::string marker = "JOURNEY PLAN\n";
        const auto cut1 = p1.find(marker) + marker.size();
        const auto cut2 = p2.find(marker) + marker.size();
        CHECK(p1.substr(0, cut1) == p2.substr(0, cut2));
        CHECK(p1.substr(cut1) != p2.substr(cut2));
    }

    SUBCASE("prompt length grows linearly with leg count") {
        auto plan_with_legs = [](int n) {
            json legs = json::array();
            for (int i = 0; i < n; ++i) {
                legs.push_back(json{{"station", "Station Alpha"},
                                    {"drop", 1},
                                    {"dispatch_time", "08:00"},
                                    {"arrival_time", "08:30"},
                                    {"km", 1.25}});
            }
            return json{{"date", "2016-07-01"},
                        {"trucks", json::array({json{{"truck_id", 1},
                                                     {"pickup", json{{"station", "Station Beta"},
                                                                     {"load", n}}},
                                                     {"legs", legs},
                                                     {"total_km", 1.25 * n},
                                                     {"tight_schedule", false}}})}};
        };
        // identical-shape legs add a constant number of bytes each
        std::vector<std::size_t> lens;
        for (int n = 1; n <= 50; ++n) lens.push_back(report::build_prompt(plan_with_legs(n)).size());
        for (std::size_t i = 2; i + 1 < lens.size(); ++i) {
            const auto d1 = lens[i] - lens[i - 1];
            const auto d2 = lens[i + 1] - lens[i];
            CHECK(std::llabs(static_cast<long long>(d1) - static_cast<long long>(d2)) <= 4);
        }
        CHECK(lens.back() > lens.front());
    }
}

TEST_CASE("generate_report without an endpoint takes the deterministic path") {
    std::string reason;
    const auto r = report::generate_report(one_truck_plan(), report::EndpointConfig{}, &reason);
    CHECK(r.source == report::ReportSource::Deterministic);
    CHECK(reason == "no endpoint configured");
}

TEST_CASE("generate_report accepts a faithful endpoint answer") {
    const json plan = one_truck_plan();
    const std::string faithful = report::format_report(plan).markdown;
    MockEndpoint mock([faithful](const httplib::Request&, httplib::Response& res) {
        res.set_content(completion_body(faithful), "application/json");
    });
    std::string reason;
    const auto r = report::generate_report(plan, mock.config(), &reason);
    CHECK(r.source == report::ReportSource::Llm);
    CHECK(r.markdown == faithful);
}

TEST_CASE("generate_report falls back on hallucination") {
    const json plan = one_truck_plan();
    MockEndpoint mock([](const httplib::Request&, httplib::Response& res) {
        res.set_content(completion_body("# Report\nTruck 1 visits Station Zeta at 07:55."),
                        "application/json");
    });
    std::string reason;
    const auto r = report::generate_report(plan, mock.config(), &reason);
    CHECK(r.source == report::ReportSource::Deterministic);
    CHECK(reason.find("grounding failed") == 0);
    CHECK(r.markdown == report::format_report(plan).markdown);
}

TEST_CASE("generate_report survives every endpoint failure mode") {
    const json plan = one_truck_plan();
    std::atomic<int> mode{0};
    MockEndpoint mock([&mode](const httplib::Request&, httplib::Response& res) {
        switch (mode.load() % 4) {
            case 0: res.status = 500; break;
            case 1: res.set_content("not json {{{{", "application/json"); break;
            case 2: res.set_content("{\"choices\": []}", "application/json"); break;
            case 3:
                std::this_thread::sleep_for(std::chrono::milliseconds(600));
                res.set_content("late", "text/plain");
                break;
        }
    });
    for (int i = 0; i < 8; ++i) {
        mode.store(i);
        std::string reason;
        const auto r = report::generate_report(plan, mock.config(300), &reason);
        CHECK(r.source == report::ReportSource::Deterministic);
        CHECK_FALSE(reason.empty());
    }

    SUBCASE("unreachable host") {
        report::EndpointConfig cfg;
        cfg.url = "http://127.0.0.1:1/v1/chat/completions";
        cfg.timeout_ms = 300;
        std::string reason;
        const auto r = report::generate_report(plan, cfg, &reason);
        CHECK(r.source == report::ReportSource::Deterministic);
    }
    SUBCASE("malformed url") {
        report::EndpointConfig cfg;
        cfg.url = "gopher://nope";
        std::string reason;
        const auto r = report::generate_report(plan, cfg, &reason);
        CHECK(r.source == report::ReportSource::Deterministic);
        CHECK(reason.find("malformed") != std::string::npos);
    }
}
