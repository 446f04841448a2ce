#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "confidant/error.hpp"
#include "confidant/persistence.hpp"
#include "confidant/pipeline.hpp"

namespace confidant::service {

/// Owns live sessions. Requests to one session are serialized by a
/// per-session mutex; different sessions proceed in parallel. Sessions not in
/// memory are loaded from the store on first use.
class SessionManager {
public:
    SessionManager(std::shared_ptr<const pipeline::Engine> engine, std::shared_ptr<persistence::SessionStore> store,
                   pipeline::SessionConfig defaults = {});

    // Returns the new id. Throws ValidationError for a bad config.
    std::string create(const nlohmann::json& config_overrides = nullptr);

    // Throws SessionNotFound, or the stage-labelled pipeline error with the
    // session unchanged.
    pipeline::Response post_message(const std::string& session_id, std::string_view text);

    // Summarized entities: [{name, summary, last_updated_turn, display_name}].
    nlohmann::json entities(const std::string& session_id);
    // The most recent `limit` turns with placeholders restored.
    nlohmann::json history(const std::string& session_id, std::size_t limit);
    pipeline::ConversationState snapshot(const std::string& session_id);
    void remove(const std::string& session_id);

    const pipeline::SessionConfig& defaults() const noexcept { return defaults_; }
    const pipeline::Engine& engine() const noexcept { return *engine_; }

private:
    struct Slot {
        std::mutex mu;
        pipeline::ConversationState state;
        bool removed = false;
    };

    std::shared_ptr<Slot> slot(const std::string& session_id);

    std::shared_ptr<const pipeline::Engine> engine_;
    std::shared_ptr<persistence::SessionStore> store_;
    pipeline::SessionConfig defaults_;
    std::mutex mu_;
    std::map<std::string, std::shared_ptr<Slot>> slots_;
};

int http_status(ErrorCode code);
nlohmann::json error_body(const std::exception& e);

struct ServiceOptions {
    std::string ui_dir;  // served under /ui when non-empty and present
};

/// JSON API over a SessionManager:
///   POST   /sessions                  {config?} -> {session_id, config}
///   POST   /sessions/{id}/messages    {text} -> {reply, trace}
///   GET    /sessions/{id}/entities
///   GET    /sessions/{id}/history?limit=N
///   DELETE /sessions/{id}
///   GET    /healthz, GET /config
class Service {
public:
    Service(std::shared_ptr<SessionManager> sessions, ServiceOptions options = {});
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds; port 0 picks a free port. Returns the bound port or throws.
    int bind(const std::string& host, int port);
    // Blocks until stop().
    void listen();
    void stop();
    bool running() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace confidant::service
