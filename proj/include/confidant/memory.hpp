#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "confidant/privacy.hpp"

namespace confidant::llm {
class LlmProvider;
}

namespace confidant::memory {

enum class Role { User, Assistant };

std::string_view to_string(Role role);
Role parse_role(std::string_view name);

std::int64_t now_utc_ms();

struct Turn {
    std::int64_t index = 0;
    Role role = Role::User;
    std::string content;  // anonymized
    std::int64_t timestamp_ms = 0;  // UTC, milliseconds since the epoch

    bool operator==(const Turn&) const = default;
};

void to_json(nlohmann::json& j, const Turn& t);
void from_json(const nlohmann::json& j, Turn& t);

/// Sliding window over the most recent `capacity` turns. Indices must be
/// contiguous; the window remembers the next expected index after eviction.
class ShortTermBuffer {
public:
    explicit ShortTermBuffer(std::size_t capacity = 10, std::int64_t next_index = 0);

    // Throws IndexGap unless turn.index == next_index().
    void append(Turn turn);

    std::size_t capacity() const noexcept { return capacity_; }
    std::int64_t next_index() const noexcept { return next_index_; }
    std::size_t size() const noexcept { return turns_.size(); }
    const std::deque<Turn>& turns() const noexcept { return turns_; }
    std::vector<Turn> to_vector() const { return {turns_.begin(), turns_.end()}; }

    bool operator==(const ShortTermBuffer&) const = default;

private:
    std::size_t capacity_;
    std::int64_t next_index_;
    std::deque<Turn> turns_;
};

ShortTermBuffer append_turn(ShortTermBuffer buffer, Turn turn);

struct EntityRecord {
    std::string name;  // case-folded anonymized key
    std::string summary;
    std::int64_t last_updated_turn = 0;

    bool operator==(const EntityRecord&) const = default;
};

// Maps a stored key to the name shown to the summarizer (e.g. the placeholder
// in its original casing).
using NameResolver = std::function<std::string(const std::string& key)>;

struct EntityStore {
    std::map<std::string, EntityRecord> records;
    std::int64_t update_every = 10;
    std::set<privacy::PiiKind> tracked_kinds = {privacy::PiiKind::Person};

    const EntityRecord* find(std::string_view key) const;
    bool operator==(const EntityStore&) const = default;
};

// Snapshot schema: {session_id, records: [{name, summary, last_updated_turn}]}.
nlohmann::json entity_snapshot(const EntityStore& store, const std::string& session_id);
EntityStore entity_store_from_snapshot(const nlohmann::json& j, std::int64_t update_every);

// Adds an empty-summary stub for every tracked-kind span not yet present.
// `spans` are located in the anonymized text, so surfaces are placeholders.
EntityStore register_entities(EntityStore store, const std::vector<privacy::PiiSpan>& spans,
                              std::int64_t turn_index);

bool is_update_turn(const EntityStore& store, std::int64_t turn_index);

// Keys of records mentioned (whole token, case-folded) in the user turns.
std::vector<std::string> mentioned_entities(const EntityStore& store, const std::vector<Turn>& history);

/// Re-summarizes every entity mentioned in the user turns of `history`,
/// regardless of cadence. All-or-nothing: if any summarization fails the store
/// is returned unchanged and the error propagates. Returns the updated keys.
std::vector<std::string> update_entities(EntityStore& store, const std::vector<Turn>& history,
                                         llm::LlmProvider& llm, std::int64_t turn_index,
                                         const NameResolver& resolve = {},
                                         const std::string& prompt_template = {});

// Cadence-gated form: acts only when turn_index > 0 and turn_index is a
// multiple of update_every.
EntityStore maybe_update_entities(EntityStore store, const std::vector<Turn>& history, llm::LlmProvider& llm,
                                  std::int64_t turn_index, const NameResolver& resolve = {},
                                  const std::string& prompt_template = {});

// Records whose key occurs as a whole token sequence in the query.
std::vector<EntityRecord> lookup_entities(std::string_view query, const EntityStore& store);

}  // namespace confidant::memory
