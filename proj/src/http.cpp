#include "confidant/http.hpp"

#include <thread>

#include <httplib.h>

#include "confidant/error.hpp"

namespace confidant::http {

Endpoint parse_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw Error(ErrorCode::InvalidArgument, "base URL needs a scheme: " + base_url);
    }
    const auto path_start = base_url.find('/', scheme_end + 3);
    Endpoint ep;
    if (path_start == std::string::npos) {
        ep.origin = base_url;
    } else {
        ep.origin = base_url.substr(0, path_start);
        ep.path_prefix = base_url.substr(path_start);
        while (!ep.path_prefix.empty() && ep.path_prefix.back() == '/') ep.path_prefix.pop_back();
    }
    return ep;
}

std::string excerpt(const std::string& body, std::size_t limit) {
    if (body.size() <= limit) return body;
    return body.substr(0, limit) + "...";
}

nlohmann::json post_json(const std::string& base_url, const std::string& path, const nlohmann::json& body,
                         const PostOptions& options) {
    const Endpoint ep = parse_base_url(base_url);
    httplib::Client client(ep.origin);
    client.set_connection_timeout(options.timeout_seconds, 0);
    client.set_read_timeout(options.timeout_seconds, 0);
    client.set_write_timeout(options.timeout_seconds, 0);
    if (!options.bearer_token.empty()) client.set_bearer_token_auth(options.bearer_token);

    const std::string payload = body.dump();
    const std::string full_path = ep.path_prefix + path;
    auto backoff = options.retry.initial_backoff;
    std::string last_error;
    const int attempts = std::max(1, options.retry.max_attempts);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        auto res = client.Post(full_path, payload, "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
        } else if (res->status == 429 || res->status >= 500) {
            last_error = "status " + std::to_string(res->status) + ": " + excerpt(res->body);
        } else if (res->status < 200 || res->status >= 300) {
            throw Error(ErrorCode::RemoteError,
                        "status " + std::to_string(res->status) + ": " + excerpt(res->body));
        } else {
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::parse_error&) {
                throw Error(ErrorCode::RemoteError, "malformed JSON reply: " + excerpt(res->body));
            }
        }
        if (attempt < attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw Error(ErrorCode::RemoteError, last_error);
}

}  // namespace confidant::http
