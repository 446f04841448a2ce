#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "confidant/http.hpp"
#include "confidant/memory.hpp"

namespace confidant::llm {

enum class ChatRole { System, User, Assistant };

std::string_view to_string(ChatRole role);

struct ChatMessage {
    ChatRole role = ChatRole::User;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

void to_json(nlohmann::json& j, const ChatMessage& m);

class LlmProvider {
public:
    virtual ~LlmProvider() = default;
    virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
    virtual std::string model() const = 0;
    virtual double temperature() const { return 0.0; }
};

// Checks the message-list preconditions (non-empty, last message from User or
// System) and that the reply is non-empty.
std::string complete(const std::vector<ChatMessage>& messages, LlmProvider& provider);

struct RemoteLlmOptions {
    std::string base_url;  // LLM_BASE_URL
    std::string api_key;   // LLM_API_KEY
    std::string model = "gpt-3.5-turbo-1106";
    double temperature = 0.0;
    int timeout_seconds = 30;
    http::RetryPolicy retry;

    static RemoteLlmOptions from_env();
};

// OpenAI-compatible POST {base_url}/chat/completions.
class RemoteLlm final : public LlmProvider {
public:
    explicit RemoteLlm(RemoteLlmOptions options) : options_(std::move(options)) {}

    std::string complete(const std::vector<ChatMessage>& messages) override;
    std::string model() const override { return options_.model; }
    double temperature() const override { return options_.temperature; }

private:
    RemoteLlmOptions options_;
};

/// Deterministic stand-in for a chat model. Rules are tried in order; the
/// first one returning a value answers. Otherwise the next canned reply is
/// consumed, and once those run out complete() throws ScriptExhausted.
/// Every request is recorded so tests can inspect outbound payloads.
class ScriptedLlm final : public LlmProvider {
public:
    using Rule = std::function<std::optional<std::string>(const std::vector<ChatMessage>&)>;

    explicit ScriptedLlm(std::vector<std::string> replies = {}, std::vector<Rule> rules = {});

    std::string complete(const std::vector<ChatMessage>& messages) override;
    std::string model() const override { return "scripted"; }

    std::vector<std::vector<ChatMessage>> requests() const;
    std::size_t call_count() const;
    void clear_requests();

private:
    mutable std::mutex mu_;
    std::deque<std::string> replies_;
    std::vector<Rule> rules_;
    std::vector<std::vector<ChatMessage>> requests_;
};

inline constexpr std::string_view kSummaryPromptTemplate =
    "You maintain a factual summary of {entity}. Existing summary: {summary}. "
    "Recent conversation: {history}. Update only if new information is present; "
    "otherwise repeat the existing summary verbatim.";

// "User: ..." / "Assistant: ..." lines.
std::string format_history(const std::vector<memory::Turn>& history);

std::string render_summary_prompt(std::string_view entity, std::string_view existing_summary,
                                  const std::vector<memory::Turn>& history,
                                  std::string_view prompt_template = kSummaryPromptTemplate);

std::string summarize_entity(std::string_view entity, std::string_view existing_summary,
                             const std::vector<memory::Turn>& history, LlmProvider& provider,
                             std::string_view prompt_template = kSummaryPromptTemplate);

namespace mock {

// Answers summarization prompts built from kSummaryPromptTemplate. User turns
// that mention the entity and are not yet part of the summary count as new
// information: with none, the existing summary is echoed verbatim; an empty
// summary becomes "<entity> was mentioned by the user: <turns>".
ScriptedLlm::Rule summary_echo_rule();

// Answers chat prompts by repeating every "Known context:" line of the system
// message; without context it gives a fixed generic reply.
ScriptedLlm::Rule context_echo_rule();

inline constexpr std::string_view kGenericReply =
    "It sounds like this is weighing on you. Could you tell me more about what is on your mind?";

// summary_echo_rule followed by context_echo_rule.
std::unique_ptr<ScriptedLlm> make_echo_llm();

}  // namespace mock

}  // namespace confidant::llm
