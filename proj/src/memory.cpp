#include "confidant/memory.hpp"

#include <algorithm>
#include <chrono>

#include "confidant/error.hpp"
#include "confidant/llm.hpp"
#include "confidant/text.hpp"

namespace confidant::memory {

std::string_view to_string(Role role) {
    return role == Role::User ? "user" : "assistant";
}

Role parse_role(std::string_view name) {
    const std::string lower = text::to_lower(name);
    if (lower == "user") return Role::User;
    if (lower == "assistant" || lower == "therapist") return Role::Assistant;
    throw Error(ErrorCode::ParseError, "unknown role '" + std::string(name) + "'");
}

std::int64_t now_utc_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

void to_json(nlohmann::json& j, const Turn& t) {
    j = {{"index", t.index}, {"role", to_string(t.role)}, {"content", t.content}, {"timestamp_ms", t.timestamp_ms}};
}

void from_json(const nlohmann::json& j, Turn& t) {
    t.index = j.at("index").get<std::int64_t>();
    t.role = parse_role(j.at("role").get<std::string>());
    t.content = j.at("content").get<std::string>();
    t.timestamp_ms = j.value("timestamp_ms", std::int64_t{0});
}

ShortTermBuffer::ShortTermBuffer(std::size_t capacity, std::int64_t next_index)
    : capacity_(capacity), next_index_(next_index) {
    if (capacity_ == 0) throw Error(ErrorCode::InvalidArgument, "short-term capacity must be >= 1");
}

void ShortTermBuffer::append(Turn turn) {
    if (turn.index != next_index_) {
        throw Error(ErrorCode::IndexGap, "expected turn " + std::to_string(next_index_) + ", got " +
                                             std::to_string(turn.index));
    }
    turns_.push_back(std::move(turn));
    ++next_index_;
    while (turns_.size() > capacity_) turns_.pop_front();
}

ShortTermBuffer append_turn(ShortTermBuffer buffer, Turn turn) {
    buffer.append(std::move(turn));
    return buffer;
}

const EntityRecord* EntityStore::find(std::string_view key) const {
    auto it = records.find(std::string(key));
    return it == records.end() ? nullptr : &it->second;
}

nlohmann::json entity_snapshot(const EntityStore& store, const std::string& session_id) {
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& [key, r] : store.records) {
        recs.push_back({{"name", r.name}, {"summary", r.summary}, {"last_updated_turn", r.last_updated_turn}});
    }
    return {{"session_id", session_id}, {"records", recs}};
}

EntityStore entity_store_from_snapshot(const nlohmann::json& j, std::int64_t update_every) {
    EntityStore store;
    store.update_every = update_every;
    for (const auto& r : j.at("records")) {
        EntityRecord rec{r.at("name").get<std::string>(), r.at("summary").get<std::string>(),
                         r.at("last_updated_turn").get<std::int64_t>()};
        store.records.emplace(rec.name, std::move(rec));
    }
    return store;
}

EntityStore register_entities(EntityStore store, const std::vector<privacy::PiiSpan>& spans,
                              std::int64_t turn_index) {
    for (const auto& span : spans) {
        if (store.tracked_kinds.count(span.kind) == 0) continue;
        std::string key = text::to_lower(span.surface);
        if (store.records.count(key) != 0) continue;
        store.records.emplace(key, EntityRecord{key, "", turn_index});
    }
    return store;
}

bool is_update_turn(const EntityStore& store, std::int64_t turn_index) {
    return store.update_every > 0 && turn_index > 0 && turn_index % store.update_every == 0;
}

std::vector<std::string> mentioned_entities(const EntityStore& store, const std::vector<Turn>& history) {
    std::vector<std::string> out;
    for (const auto& [key, rec] : store.records) {
        const bool mentioned = std::any_of(history.begin(), history.end(), [&](const Turn& t) {
            return t.role == Role::User && text::contains_token_sequence(t.content, key);
        });
        if (mentioned) out.push_back(key);
    }
    return out;
}

std::vector<std::string> update_entities(EntityStore& store, const std::vector<Turn>& history,
                                         llm::LlmProvider& llm, std::int64_t turn_index,
                                         const NameResolver& resolve, const std::string& prompt_template) {
    const auto keys = mentioned_entities(store, history);
    const std::string_view tmpl =
        prompt_template.empty() ? llm::kSummaryPromptTemplate : std::string_view(prompt_template);
    std::vector<std::string> summaries;
    summaries.reserve(keys.size());
    for (const auto& key : keys) {
        const std::string name = resolve ? resolve(key) : key;
        summaries.push_back(llm::summarize_entity(name, store.records.at(key).summary, history, llm, tmpl));
    }
    for (std::size_t i = 0; i < keys.size(); ++i) {
        auto& rec = store.records.at(keys[i]);
        rec.summary = text::trim(summaries[i]);
        rec.last_updated_turn = turn_index;
    }
    return keys;
}

EntityStore maybe_update_entities(EntityStore store, const std::vector<Turn>& history, llm::LlmProvider& llm,
                                  std::int64_t turn_index, const NameResolver& resolve,
                                  const std::string& prompt_template) {
    if (!is_update_turn(store, turn_index)) return store;
    update_entities(store, history, llm, turn_index, resolve, prompt_template);
    return store;
}

std::vector<EntityRecord> lookup_entities(std::string_view query, const EntityStore& store) {
    std::vector<EntityRecord> out;
    for (const auto& [key, rec] : store.records) {
        if (text::contains_token_sequence(query, key)) out.push_back(rec);
    }
    return out;
}

}  // namespace confidant::memory
