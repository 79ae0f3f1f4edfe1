#pragma once

#include <chrono>
#include <map>
#include <string>
#include <string_view>

namespace medico {

/// Split form of an http(s) URL.
struct Endpoint {
    std::string scheme;  // "http" or "https"
    std::string host;
    int port = 0;
    std::string path;    // always starts with '/'

    /// Throws ConfigError for anything that is not an absolute http(s) URL.
    static Endpoint parse(std::string_view url);
    std::string origin() const;
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

struct RetryPolicy {
    int max_retries = 2;
    std::chrono::milliseconds initial_backoff{200};
};

/// POSTs a JSON body. Transport failures, 429 and 5xx responses are retried
/// with exponential backoff; when retries run out a BackendUnavailable error
/// is thrown. Other statuses are returned to the caller.
HttpResponse post_json(const Endpoint& endpoint, const std::string& body,
                       const std::map<std::string, std::string>& headers, const RetryPolicy& retry = {},
                       std::chrono::seconds timeout = std::chrono::seconds(30));

}  // namespace medico
