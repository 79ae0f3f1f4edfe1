#include "medico/http_client.hpp"

#include "medico/error.hpp"
#include "medico/text.hpp"

#include <httplib.h>

#include <thread>

namespace medico {

Endpoint Endpoint::parse(std::string_view url) {
    const auto sep = url.find("://");
    if (sep == std::string_view::npos) throw Error(ErrorCode::ConfigError, "not an absolute URL: " + std::string(url));
    Endpoint ep;
    ep.scheme = to_lower_ascii(url.substr(0, sep));
    if (ep.scheme != "http" && ep.scheme != "https")
        throw Error(ErrorCode::ConfigError, "unsupported URL scheme: " + ep.scheme);
    auto rest = url.substr(sep + 3);
    const auto slash = rest.find('/');
    auto authority = rest.substr(0, slash);
    ep.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
    const auto colon = authority.rfind(':');
    if (colon != std::string_view::npos && authority.find(']') == std::string_view::npos) {
        ep.host = std::string(authority.substr(0, colon));
        try {
            ep.port = std::stoi(std::string(authority.substr(colon + 1)));
        } catch (const std::exception&) {
            throw Error(ErrorCode::ConfigError, "bad port in URL: " + std::string(url));
        }
    } else {
        ep.host = std::string(authority);
        ep.port = ep.scheme == "https" ? 443 : 80;
    }
    if (ep.host.empty()) throw Error(ErrorCode::ConfigError, "URL has no host: " + std::string(url));
    return ep;
}

std::string Endpoint::origin() const { return scheme + "://" + host + ":" + std::to_string(port); }

HttpResponse post_json(const Endpoint& endpoint, const std::string& body,
                       const std::map<std::string, std::string>& headers, const RetryPolicy& retry,
                       std::chrono::seconds timeout) {
    httplib::Headers request_headers;
    for (const auto& [name, value] : headers) request_headers.emplace(name, value);

    auto backoff = retry.initial_backoff;
    std::string last_failure;
    for (int attempt = 0; attempt <= retry.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        httplib::Client client(endpoint.origin());
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        auto result = client.Post(endpoint.path, request_headers, body, "application/json");
        if (!result) {
            last_failure = "transport error: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status == 429 || result->status >= 500) {
            last_failure = "HTTP " + std::to_string(result->status);
            continue;
        }
        return HttpResponse{result->status, result->body};
    }
    throw Error(ErrorCode::BackendUnavailable, endpoint.origin() + endpoint.path + ": " + last_failure);
}

}  // namespace medico
