#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace smartflow::report {

enum class ReportSource { Deterministic, Llm };

struct DispatchReport {
    std::string markdown;
    std::string manager_briefing;
    std::vector<std::string> tickets;  // one block per truck
    ReportSource source = ReportSource::Deterministic;
};

struct EndpointConfig {
    std::string url;  // empty means no endpoint configured
    std::string api_key;
    std::string model = "gemma-2b-it";
    int timeout_ms = 30000;
    int max_tokens = 1024;
};

/// Reads SMARTFLOW_LLM_URL / SMARTFLOW_LLM_KEY / SMARTFLOW_LLM_MODEL.
EndpointConfig endpoint_from_env();

/// Deterministic Markdown formatter. Byte-identical output for identical
/// plans. Throws SchemaError when the plan does not validate.
DispatchReport format_report(const nlohmann::json& plan);

/// Grounded prompt: persona, the non-negotiable only-provided-data rule, the
/// required output structure, and the plan document embedded verbatim.
std::string build_prompt(const nlohmann::json& plan);

struct GroundCheckResult {
    bool passed = true;
    std::vector<std::string> violations;
};

/// Post-hoc hallucination check: every station mention, quantity, km figure
/// (two decimals) and HH:MM time in the report must exist in the plan.
GroundCheckResult ground_check(const std::string& report_text, const nlohmann::json& plan);

/// Calls the configured chat-completion endpoint with the grounded prompt and
/// verifies the answer; any transport failure, non-2xx status, unparsable
/// body or grounding violation falls back to the deterministic formatter.
/// Only a plan schema violation can make this throw.
DispatchReport generate_report(const nlohmann::json& plan, const EndpointConfig& endpoint,
                               std::string* fallback_reason = nullptr);

}  // namespace smartflow::report
