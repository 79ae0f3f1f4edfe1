#pragma once

#include "medico/http_client.hpp"
#include "medico/retrieval/types.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace medico {

struct WebSnippet {
    std::string text;
    std::string url;
};

/// A search provider returning snippets in its native rank order.
class WebSearchBackend {
public:
    virtual ~WebSearchBackend() = default;
    /// Throws BackendUnavailable on network/auth failure.
    virtual std::vector<WebSnippet> search(const Query& q, const GeneratedContent& o, std::size_t limit) = 0;
};

/// Replays recorded responses from JSON lines {"query": str, "snippets": [str...]}
/// with an optional parallel "urls" array. Lookup is by exact (trimmed) query text;
/// unknown queries yield no snippets.
class FixtureWebBackend final : public WebSearchBackend {
public:
    explicit FixtureWebBackend(const std::filesystem::path& path);
    explicit FixtureWebBackend(std::map<std::string, std::vector<WebSnippet>> responses);

    std::vector<WebSnippet> search(const Query& q, const GeneratedContent& o, std::size_t limit) override;

private:
    std::map<std::string, std::vector<WebSnippet>> responses_;
};

/// Google results through the Serper API (POST {"q": ..., "num": ...},
/// X-API-KEY header; snippets read from "organic").
class SerperWebBackend final : public WebSearchBackend {
public:
    SerperWebBackend(Endpoint endpoint, std::string api_key, RetryPolicy retry = {});

    std::vector<WebSnippet> search(const Query& q, const GeneratedContent& o, std::size_t limit) override;

private:
    Endpoint endpoint_;
    std::string api_key_;
    RetryPolicy retry_;
};

/// Returns at most n Web items in backend rank order.
std::vector<EvidenceItem> search_web(WebSearchBackend& backend, const Query& q, const GeneratedContent& o,
                                     std::size_t n);

}  // namespace medico
