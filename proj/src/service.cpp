#include "confidant/service.hpp"

#include <httplib.h>

#include <filesystem>

#include "confidant/error.hpp"

namespace confidant::service {

SessionManager::SessionManager(std::shared_ptr<const pipeline::Engine> engine,
                               std::shared_ptr<persistence::SessionStore> store, pipeline::SessionConfig defaults)
    : engine_(std::move(engine)), store_(std::move(store)), defaults_(std::move(defaults)) {
    defaults_.validate();
}

std::string SessionManager::create(const nlohmann::json& config_overrides) {
    auto config = pipeline::merge_config(defaults_, config_overrides);
    auto slot_ptr = std::make_shared<Slot>();
    std::string id;
    do {
        id = persistence::new_session_id();
    } while (store_->exists(id));
    slot_ptr->state = engine_->new_conversation(id, config);
    store_->create(slot_ptr->state, memory::now_utc_ms());
    std::lock_guard lock(mu_);
    slots_[id] = std::move(slot_ptr);
    return id;
}

std::shared_ptr<SessionManager::Slot> SessionManager::slot(const std::string& id) {
    persistence::check_session_id(id);
    std::lock_guard lock(mu_);
    auto it = slots_.find(id);
    if (it != slots_.end()) return it->second;
    auto s = std::make_shared<Slot>();
    s->state = store_->load(id);  // throws SessionNotFound
    slots_[id] = s;
    return s;
}

pipeline::Response SessionManager::post_message(const std::string& id, std::string_view text) {
    if (text.empty()) throw Error(ErrorCode::ValidationError, "text must be non-empty");
    auto s = slot(id);
    std::lock_guard lock(s->mu);
    if (s->removed) throw Error(ErrorCode::SessionNotFound, "no session '" + id + "'");
    pipeline::ConversationState next = s->state;
    auto response = engine_->respond(next, text);
    const std::vector<memory::Turn> added(next.log.begin() + static_cast<std::ptrdiff_t>(s->state.log.size()),
                                          next.log.end());
    try {
        store_->commit(next, added, &response.trace);
    } catch (Error& e) {
        e.set_stage("persist");
        throw;
    }
    s->state = std::move(next);
    return response;
}

nlohmann::json SessionManager::entities(const std::string& id) {
    auto s = slot(id);
    std::lock_guard lock(s->mu);
    if (s->removed) throw Error(ErrorCode::SessionNotFound, "no session '" + id + "'");
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [key, rec] : s->state.entities.records) {
        if (rec.summary.empty()) continue;
        const std::string placeholder = pipeline::Engine::entity_display(s->state, key);
        out.push_back({{"name", rec.name},
                       {"summary", rec.summary},
                       {"last_updated_turn", rec.last_updated_turn},
                       {"display_name", privacy::restore(placeholder, s->state.map)}});
    }
    return out;
}

nlohmann::json SessionManager::history(const std::string& id, std::size_t limit) {
    if (limit < 1) throw Error(ErrorCode::ValidationError, "limit must be >= 1");
    auto s = slot(id);
    std::lock_guard lock(s->mu);
    if (s->removed) throw Error(ErrorCode::SessionNotFound, "no session '" + id + "'");
    const auto& log = s->state.log;
    const std::size_t from = log.size() > limit ? log.size() - limit : 0;
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = from; i < log.size(); ++i) {
        memory::Turn t = log[i];
        t.content = privacy::restore(t.content, s->state.map);
        out.push_back(t);
    }
    return out;
}

pipeline::ConversationState SessionManager::snapshot(const std::string& id) {
    auto s = slot(id);
    std::lock_guard lock(s->mu);
    if (s->removed) throw Error(ErrorCode::SessionNotFound, "no session '" + id + "'");
    return s->state;
}

void SessionManager::remove(const std::string& id) {
    auto s = slot(id);
    std::lock_guard lock(s->mu);
    if (s->removed) throw Error(ErrorCode::SessionNotFound, "no session '" + id + "'");
    store_->remove(id);
    s->removed = true;
    std::lock_guard map_lock(mu_);
    slots_.erase(id);
}

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::SessionNotFound:
        case ErrorCode::TemplateNotFound:
            return 404;
        case ErrorCode::ValidationError:
        case ErrorCode::InvalidArgument:
        case ErrorCode::ParseError:
        case ErrorCode::InvalidSpans:
            return 400;
        case ErrorCode::PrivacyLeak:
        case ErrorCode::PlaceholderCollision:
            return 422;
        case ErrorCode::RemoteError:
        case ErrorCode::ScriptExhausted:
            return 502;
        default:
            return 500;
    }
}

nlohmann::json error_body(const std::exception& e) {
    nlohmann::json err = {{"message", e.what()}};
    if (const auto* ce = dynamic_cast<const Error*>(&e)) {
        err["code"] = to_string(ce->code());
        if (!ce->stage().empty()) err["stage"] = ce->stage();
    } else {
        err["code"] = "InternalError";
    }
    return {{"error", err}};
}

struct Service::Impl {
    std::shared_ptr<SessionManager> sessions;
    ServiceOptions options;
    httplib::Server server;
};

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

nlohmann::json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    try {
        auto j = nlohmann::json::parse(req.body);
        if (!j.is_object()) throw Error(ErrorCode::ValidationError, "request body must be a JSON object");
        return j;
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ValidationError, std::string("request body is not valid JSON: ") + e.what());
    }
}

}  // namespace

Service::Service(std::shared_ptr<SessionManager> sessions, ServiceOptions options)
    : impl_(std::make_unique<Impl>()) {
    impl_->sessions = std::move(sessions);
    impl_->options = std::move(options);
    auto& srv = impl_->server;
    auto* mgr = impl_->sessions.get();

    srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const Error& e) {
            send_json(res, http_status(e.code()), error_body(e));
        } catch (const std::exception& e) {
            send_json(res, 500, error_body(e));
        }
    });

    srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}});
    });

    srv.Get("/config", [mgr](const httplib::Request&, httplib::Response& res) {
        const auto& r = mgr->engine().resources();
        nlohmann::json kb_info = nullptr;
        if (r.knowledge_base) {
            kb_info = {{"questions", r.knowledge_base->questions().size()},
                       {"pairs", r.knowledge_base->pairs().size()}};
        }
        send_json(res, 200,
                  {{"defaults", mgr->defaults()},
                   {"templates", r.templates->names()},
                   {"llm", {{"model", r.llm->model()}, {"temperature", r.llm->temperature()}}},
                   {"embedding", r.embedder->config()},
                   {"knowledge_base", kb_info}});
    });

    srv.Post("/sessions", [mgr](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        const auto id = mgr->create(body.contains("config") ? body.at("config") : nlohmann::json(nullptr));
        send_json(res, 201, {{"session_id", id}, {"config", mgr->snapshot(id).config}});
    });

    srv.Post(R"(/sessions/([A-Za-z0-9_-]+)/messages)", [mgr](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        if (!body.contains("text") || !body.at("text").is_string()) {
            throw Error(ErrorCode::ValidationError, "body must contain a string field 'text'");
        }
        const auto response = mgr->post_message(req.matches[1], body.at("text").get<std::string>());
        send_json(res, 200, {{"reply", response.reply}, {"trace", response.trace}});
    });

    srv.Get(R"(/sessions/([A-Za-z0-9_-]+)/entities)", [mgr](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, mgr->entities(req.matches[1]));
    });

    srv.Get(R"(/sessions/([A-Za-z0-9_-]+)/history)", [mgr](const httplib::Request& req, httplib::Response& res) {
        std::size_t limit = 50;
        if (req.has_param("limit")) {
            const std::string raw = req.get_param_value("limit");
            try {
                std::size_t used = 0;
                const long long v = std::stoll(raw, &used);
                if (used != raw.size() || v < 1) throw std::invalid_argument(raw);
                limit = static_cast<std::size_t>(v);
            } catch (const std::exception&) {
                throw Error(ErrorCode::ValidationError, "limit must be a positive integer");
            }
        }
        send_json(res, 200, mgr->history(req.matches[1], limit));
    });

    srv.Delete(R"(/sessions/([A-Za-z0-9_-]+))", [mgr](const httplib::Request& req, httplib::Response& res) {
        mgr->remove(req.matches[1]);
        send_json(res, 200, {{"deleted", std::string(req.matches[1])}});
    });

    if (!impl_->options.ui_dir.empty() && std::filesystem::is_directory(impl_->options.ui_dir)) {
        srv.set_mount_point("/ui", impl_->options.ui_dir);
    }
}

Service::~Service() {
    stop();
}

int Service::bind(const std::string& host, int port) {
    auto& srv = impl_->server;
    const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error(ErrorCode::StorageError, "cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void Service::listen() {
    impl_->server.listen_after_bind();
}

void Service::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool Service::running() const {
    return impl_->server.is_running();
}

}  // namespace confidant::service
