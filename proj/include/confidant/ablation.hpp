#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "confidant/embedding.hpp"
#include "confidant/memory.hpp"
#include "confidant/pipeline.hpp"

namespace confidant::ablation {

struct ScenarioTurn {
    memory::Role role = memory::Role::User;
    std::string content;
};

struct ScenarioCase {
    std::string topic;
    std::vector<ScenarioTurn> past_conversation;
    std::string user_query;
    std::string key_information;
    std::string sample_answer;
};

// JSON array of objects with exactly the keys topic, past_conversation
// ([{role, content}]), user_query, key_information and sample_answer. Every
// field must be non-empty and roles must alternate. Throws ScenarioParseError.
std::vector<ScenarioCase> parse_scenarios(std::string_view json_text);
std::vector<ScenarioCase> load_scenarios(const std::string& path);

struct ArmResult {
    std::string reply;
    double relevance_sample = 0.0;
    double relevance_key = 0.0;
    std::vector<std::string> entities_used;
};

struct ScenarioResult {
    std::string topic;
    ArmResult memory;
    ArmResult baseline;
};

struct AblationReport {
    std::vector<ScenarioResult> scenarios;
    double memory_mean_sample = 0.0;
    double memory_mean_key = 0.0;
    double baseline_mean_sample = 0.0;
    double baseline_mean_key = 0.0;
};

void to_json(nlohmann::json& j, const AblationReport& r);
std::string format_table(const AblationReport& r);

struct AblationOptions {
    // Template, seed and cadence for both arms; the memory switches are
    // overridden per arm.
    pipeline::SessionConfig config;
    bool parallel = true;
};

/// For each scenario the past conversation is fed into a fresh session of
/// each engine and the entity store is flushed. The memory arm then answers
/// the query with long-term memory on and short-term memory off; the
/// baseline arm has both off. Replies are scored against the sample answer
/// and the key information with `provider`.
AblationReport run_memory_ablation(const std::vector<ScenarioCase>& scenarios, const pipeline::Engine& engine,
                                   const pipeline::Engine& baseline_engine,
                                   const embedding::EmbeddingProvider& provider, const AblationOptions& options = {});

}  // namespace confidant::ablation
