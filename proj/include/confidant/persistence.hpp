#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "confidant/pipeline.hpp"

namespace confidant::persistence {

/// File-backed session storage under `root`:
///   sessions/{id}/session.json   config and creation time
///   sessions/{id}/log.jsonl      one line per turn or response trace
///   sessions/{id}/entities.json  entity store snapshot
///   private/{id}/map.json        anonymization map (raw PII, kept apart)
/// Snapshots are replaced atomically and written before the log lines of the
/// same request, so a crash can leave the map ahead of the log but never
/// behind it.
class SessionStore {
public:
    explicit SessionStore(std::string root);

    const std::string& root() const noexcept { return root_; }

    void create(const pipeline::ConversationState& state, std::int64_t created_at_ms);
    // Persists the snapshots of `state`, then appends `new_turns` and `trace`.
    void commit(const pipeline::ConversationState& state, const std::vector<memory::Turn>& new_turns,
                const pipeline::ResponseTrace* trace);

    bool exists(const std::string& session_id) const;
    // Throws SessionNotFound; StorageError on unreadable files.
    pipeline::ConversationState load(const std::string& session_id) const;
    std::vector<pipeline::ResponseTrace> load_traces(const std::string& session_id) const;
    std::int64_t created_at(const std::string& session_id) const;
    void remove(const std::string& session_id);
    std::vector<std::string> list() const;

    std::string session_dir(const std::string& session_id) const;
    std::string private_dir(const std::string& session_id) const;

private:
    std::vector<nlohmann::json> read_log(const std::string& session_id) const;
    void write_snapshots(const pipeline::ConversationState& state) const;

    std::string root_;
};

// Letters, digits, '-' and '_' only; anything else is a ValidationError.
void check_session_id(const std::string& session_id);

std::string new_session_id();

}  // namespace confidant::persistence
