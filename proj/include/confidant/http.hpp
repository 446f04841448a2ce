#pragma once

#include <chrono>
#include <string>

#include <nlohmann/json.hpp>

namespace confidant::http {

struct Endpoint {
    std::string origin;       // scheme://host[:port]
    std::string path_prefix;  // e.g. "/v1", never with a trailing slash
};

Endpoint parse_base_url(const std::string& base_url);

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{250};
};

struct PostOptions {
    std::string bearer_token;
    int timeout_seconds = 30;
    RetryPolicy retry;
};

// POSTs JSON and parses the JSON reply. Connection failures, 429 and 5xx are
// retried with exponential backoff; everything else throws RemoteError with
// the status and an excerpt of the body.
nlohmann::json post_json(const std::string& base_url, const std::string& path,
                         const nlohmann::json& body, const PostOptions& options);

std::string excerpt(const std::string& body, std::size_t limit = 200);

}  // namespace confidant::http
