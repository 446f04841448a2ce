#include "confidant/llm.hpp"

#include <algorithm>
#include <cstdlib>

#include "confidant/error.hpp"
#include "confidant/text.hpp"

namespace confidant::llm {

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v != nullptr ? std::string(v) : fallback;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

}  // namespace

std::string_view to_string(ChatRole role) {
    switch (role) {
        case ChatRole::System: return "system";
        case ChatRole::User: return "user";
        case ChatRole::Assistant: return "assistant";
    }
    return "user";
}

void to_json(nlohmann::json& j, const ChatMessage& m) {
    j = {{"role", to_string(m.role)}, {"content", m.content}};
}

std::string complete(const std::vector<ChatMessage>& messages, LlmProvider& provider) {
    if (messages.empty()) throw Error(ErrorCode::InvalidArgument, "complete() needs at least one message");
    if (messages.back().role == ChatRole::Assistant) {
        throw Error(ErrorCode::InvalidArgument, "last message must come from the user or the system");
    }
    std::string reply = provider.complete(messages);
    if (text::trim(reply).empty()) throw Error(ErrorCode::RemoteError, "model returned an empty reply");
    return reply;
}

RemoteLlmOptions RemoteLlmOptions::from_env() {
    RemoteLlmOptions o;
    o.base_url = env_or("LLM_BASE_URL", "https://api.openai.com/v1");
    o.api_key = env_or("LLM_API_KEY", "");
    o.model = env_or("LLM_MODEL", o.model);
    return o;
}

std::string RemoteLlm::complete(const std::vector<ChatMessage>& messages) {
    nlohmann::json body = {{"model", options_.model}, {"messages", messages}, {"temperature", options_.temperature}};
    http::PostOptions post;
    post.bearer_token = options_.api_key;
    post.timeout_seconds = options_.timeout_seconds;
    post.retry = options_.retry;
    const auto reply = http::post_json(options_.base_url, "/chat/completions", body, post);
    try {
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::RemoteError, std::string("unexpected completion reply: ") + e.what());
    }
}

ScriptedLlm::ScriptedLlm(std::vector<std::string> replies, std::vector<Rule> rules)
    : replies_(replies.begin(), replies.end()), rules_(std::move(rules)) {}

std::string ScriptedLlm::complete(const std::vector<ChatMessage>& messages) {
    std::lock_guard lock(mu_);
    requests_.push_back(messages);
    for (const auto& rule : rules_) {
        if (auto reply = rule(messages)) return *reply;
    }
    if (replies_.empty()) throw Error(ErrorCode::ScriptExhausted, "scripted model has no replies left");
    std::string reply = std::move(replies_.front());
    replies_.pop_front();
    return reply;
}

std::vector<std::vector<ChatMessage>> ScriptedLlm::requests() const {
    std::lock_guard lock(mu_);
    return requests_;
}

std::size_t ScriptedLlm::call_count() const {
    std::lock_guard lock(mu_);
    return requests_.size();
}

void ScriptedLlm::clear_requests() {
    std::lock_guard lock(mu_);
    requests_.clear();
}

std::string format_history(const std::vector<memory::Turn>& history) {
    std::vector<std::string> lines;
    lines.reserve(history.size());
    for (const auto& t : history) {
        lines.push_back(std::string(t.role == memory::Role::User ? "User: " : "Assistant: ") + t.content);
    }
    return text::join(lines, "\n");
}

std::string render_summary_prompt(std::string_view entity, std::string_view existing_summary,
                                  const std::vector<memory::Turn>& history, std::string_view prompt_template) {
    std::string out(prompt_template);
    // {history} last so user text containing "{entity}" is not substituted again
    replace_all(out, "{entity}", entity);
    replace_all(out, "{summary}", existing_summary);
    replace_all(out, "{history}", format_history(history));
    return out;
}

std::string summarize_entity(std::string_view entity, std::string_view existing_summary,
                             const std::vector<memory::Turn>& history, LlmProvider& provider,
                             std::string_view prompt_template) {
    if (entity.empty()) throw Error(ErrorCode::InvalidArgument, "entity key must be non-empty");
    const std::vector<ChatMessage> messages = {
        {ChatRole::User, render_summary_prompt(entity, existing_summary, history, prompt_template)}};
    return complete(messages, provider);
}

namespace mock {

namespace {

constexpr std::string_view kEntityMarker = "You maintain a factual summary of ";
constexpr std::string_view kSummaryMarker = ". Existing summary: ";
constexpr std::string_view kHistoryMarker = ". Recent conversation: ";
constexpr std::string_view kTailMarker = ". Update only if new information is present";
constexpr std::string_view kContextPrefix = "Known context: ";

}  // namespace

ScriptedLlm::Rule summary_echo_rule() {
    return [](const std::vector<ChatMessage>& messages) -> std::optional<std::string> {
        const std::string& prompt = messages.back().content;
        if (prompt.rfind(kEntityMarker, 0) != 0) return std::nullopt;
        const auto s = prompt.find(kSummaryMarker);
        const auto h = prompt.find(kHistoryMarker, s == std::string::npos ? 0 : s);
        const auto t = prompt.rfind(kTailMarker);
        if (s == std::string::npos || h == std::string::npos || t == std::string::npos || t < h) {
            return std::nullopt;
        }
        const std::string entity = prompt.substr(kEntityMarker.size(), s - kEntityMarker.size());
        const std::string existing = prompt.substr(s + kSummaryMarker.size(), h - s - kSummaryMarker.size());
        const std::string history = prompt.substr(h + kHistoryMarker.size(), t - h - kHistoryMarker.size());

        std::vector<std::string> fresh;
        for (const auto& line : text::split_lines(history)) {
            if (line.rfind("User: ", 0) != 0) continue;
            const std::string content = line.substr(6);
            if (!text::contains_token_sequence(content, entity)) continue;
            if (existing.find(content) != std::string::npos) continue;
            if (std::find(fresh.begin(), fresh.end(), content) == fresh.end()) fresh.push_back(content);
        }
        if (fresh.empty()) return existing.empty() ? entity + " was mentioned by the user." : existing;
        if (existing.empty()) return entity + " was mentioned by the user: " + text::join(fresh, " ");
        return existing + " " + text::join(fresh, " ");
    };
}

ScriptedLlm::Rule context_echo_rule() {
    return [](const std::vector<ChatMessage>& messages) -> std::optional<std::string> {
        if (messages.empty() || messages.front().role != ChatRole::System) return std::nullopt;
        std::vector<std::string> recalled;
        for (const auto& line : text::split_lines(messages.front().content)) {
            if (line.rfind(kContextPrefix, 0) != 0) continue;
            const std::string rest = line.substr(kContextPrefix.size());
            const auto colon = rest.find(": ");
            recalled.push_back(colon == std::string::npos ? rest : rest.substr(colon + 2));
        }
        if (recalled.empty()) return std::string(kGenericReply);
        return "It sounds like this is weighing on you. I remember what you shared before: " +
               text::join(recalled, " ");
    };
}

std::unique_ptr<ScriptedLlm> make_echo_llm() {
    return std::make_unique<ScriptedLlm>(std::vector<std::string>{},
                                         std::vector<ScriptedLlm::Rule>{summary_echo_rule(), context_echo_rule()});
}

}  // namespace mock

}  // namespace confidant::llm
