#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "confidant/embedding.hpp"
#include "confidant/knowledge_base.hpp"
#include "confidant/llm.hpp"
#include "confidant/memory.hpp"
#include "confidant/privacy.hpp"
#include "confidant/prompt.hpp"

namespace confidant::pipeline {

struct SessionConfig {
    double alpha = 0.2;
    int short_term_n = 10;
    int update_every = 10;
    int k = 1;
    std::string template_name = "default";
    std::uint64_t seed = 0;
    // Ablation switches; both on in normal operation.
    bool short_term_memory = true;
    bool long_term_memory = true;

    // Throws ValidationError.
    void validate() const;

    bool operator==(const SessionConfig&) const = default;
};

void to_json(nlohmann::json& j, const SessionConfig& c);
// Missing keys keep their defaults; unknown keys are a ValidationError.
void from_json(const nlohmann::json& j, SessionConfig& c);

// Applies the keys present in `overrides` on top of `base`, then validates.
SessionConfig merge_config(const SessionConfig& base, const nlohmann::json& overrides);

/// Mutable per-session state. The buffer always equals the tail of `log`.
struct ConversationState {
    std::string session_id;
    SessionConfig config;
    privacy::AnonymizationMap map;
    memory::ShortTermBuffer buffer;
    memory::EntityStore entities;
    std::vector<memory::Turn> log;
    std::int64_t exchanges = 0;  // completed user messages

    bool operator==(const ConversationState&) const = default;
};

struct EntityUpdateTrace {
    bool attempted = false;
    std::vector<std::string> updated;
    std::string error;  // non-empty when the summarizer failed
};

struct ResponseTrace {
    std::int64_t turn_index = 0;  // index of the user turn
    std::int64_t exchange = 0;    // 1-based exchange number
    std::string template_name;
    std::string anonymized_query;
    std::vector<privacy::PiiSpan> placeholders;  // spans in the anonymized query
    bool retrieval_attempted = false;
    std::optional<double> similarity;
    double alpha = 0.0;
    bool gate_open = false;
    std::string question_id;
    std::size_t answers_used = 0;
    std::vector<std::string> entities_used;
    EntityUpdateTrace entity_update;
};

void to_json(nlohmann::json& j, const ResponseTrace& t);
void from_json(const nlohmann::json& j, ResponseTrace& t);

struct Response {
    std::string reply;  // restored
    std::string raw_reply;  // as returned by the model, placeholders intact
    ResponseTrace trace;
    prompt::AssembledPrompt prompt;
};

struct EngineResources {
    std::shared_ptr<const privacy::PiiDetector> detector;
    std::shared_ptr<const privacy::SurrogatePools> pools;
    std::shared_ptr<const embedding::EmbeddingProvider> embedder;
    std::shared_ptr<const kb::KnowledgeBase> knowledge_base;  // may be null
    std::shared_ptr<const prompt::TemplateSet> templates;
    std::shared_ptr<llm::LlmProvider> llm;
    std::string summary_prompt = std::string(llm::kSummaryPromptTemplate);
};

std::string default_data_dir();

// Gazetteer, surrogate pools, templates and the hashing embedder from `data_root`
// (data/ and templates/ below it). The LLM and knowledge base are left empty.
EngineResources load_default_resources(const std::string& data_root = default_data_dir());

/// Runs the response flow for one session. Stateless apart from the shared,
/// read-only resources, so one Engine can serve many sessions concurrently as
/// long as each state is touched by one caller at a time.
class Engine {
public:
    explicit Engine(EngineResources resources);

    ConversationState new_conversation(std::string session_id, SessionConfig config) const;

    /// detect, anonymize, register, embed, retrieve, lookup, assemble, guard,
    /// complete, restore, append, update. Any failure is rethrown with its
    /// stage set and `state` left exactly as it was.
    Response respond(ConversationState& state, std::string_view user_message) const;

    // Feeds an earlier conversation into memory without calling the model for
    // replies. Text is anonymized with the session map like live input.
    void feed_history(ConversationState& state,
                      const std::vector<std::pair<memory::Role, std::string>>& turns) const;

    // Summarizes every entity mentioned in the current window, ignoring cadence.
    std::vector<std::string> flush_entities(ConversationState& state) const;

    const EngineResources& resources() const noexcept { return res_; }

    // Placeholder spelling of an entity key, as written into prompts.
    static std::string entity_display(const ConversationState& state, const std::string& key);

private:
    memory::Turn anonymized_turn(ConversationState& state, memory::Role role, std::string_view text,
                                 std::vector<privacy::PiiSpan>* spans) const;

    EngineResources res_;
};

}  // namespace confidant::pipeline
