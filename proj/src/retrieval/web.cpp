#include "medico/retrieval/web.hpp"

#include "medico/error.hpp"
#include "medico/text.hpp"

#include <nlohmann/json.hpp>

namespace medico {

using nlohmann::json;

FixtureWebBackend::FixtureWebBackend(const std::filesystem::path& path) {
    for_each_line(path, [&](const std::string& text, std::size_t line) {
        json record;
        try {
            record = json::parse(text);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ": " + e.what());
        }
        if (!record.contains("query") || !record["query"].is_string() || !record.contains("snippets") ||
            !record["snippets"].is_array())
            throw Error(ErrorCode::ParseError,
                        path.string() + ":" + std::to_string(line) + ": expected {query, snippets}");
        const auto urls = record.value("urls", json::array());
        std::vector<WebSnippet> snippets;
        for (std::size_t i = 0; i < record["snippets"].size(); ++i) {
            WebSnippet snippet{record["snippets"][i].get<std::string>(), {}};
            if (i < urls.size() && urls[i].is_string()) snippet.url = urls[i].get<std::string>();
            snippets.push_back(std::move(snippet));
        }
        responses_[trim(record["query"].get<std::string>())] = std::move(snippets);
    });
}

FixtureWebBackend::FixtureWebBackend(std::map<std::string, std::vector<WebSnippet>> responses)
    : responses_(std::move(responses)) {}

std::vector<WebSnippet> FixtureWebBackend::search(const Query& q, const GeneratedContent&, std::size_t limit) {
    const auto it = responses_.find(trim(q.text));
    if (it == responses_.end()) return {};
    auto snippets = it->second;
    if (snippets.size() > limit) snippets.resize(limit);
    return snippets;
}

SerperWebBackend::SerperWebBackend(Endpoint endpoint, std::string api_key, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), retry_(retry) {}

std::vector<WebSnippet> SerperWebBackend::search(const Query& q, const GeneratedContent&, std::size_t limit) {
    const json request{{"q", q.text}, {"num", std::max<std::size_t>(limit, 10)}};
    const auto response = post_json(endpoint_, request.dump(),
                                    {{"X-API-KEY", api_key_}, {"Accept", "application/json"}}, retry_);
    if (response.status == 401 || response.status == 403)
        throw Error(ErrorCode::BackendUnavailable, "web search rejected credentials (HTTP " +
                                                       std::to_string(response.status) + ")");
    if (response.status != 200)
        throw Error(ErrorCode::BackendUnavailable, "web search failed with HTTP " + std::to_string(response.status));
    json body;
    try {
        body = json::parse(response.body);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::BackendUnavailable, std::string("web search returned invalid JSON: ") + e.what());
    }
    std::vector<WebSnippet> snippets;
    for (const auto& result : body.value("organic", json::array())) {
        const auto snippet = result.value("snippet", std::string{});
        if (trim(snippet).empty()) continue;
        snippets.push_back(WebSnippet{snippet, result.value("link", std::string{})});
        if (snippets.size() == limit) break;
    }
    return snippets;
}

std::vector<EvidenceItem> search_web(WebSearchBackend& backend, const Query& q, const GeneratedContent& o,
                                     std::size_t n) {
    std::vector<EvidenceItem> items;
    if (n == 0) return items;
    auto snippets = backend.search(q, o, n);
    for (auto& snippet : snippets) {
        if (items.size() == n) break;
        if (trim(snippet.text).empty()) continue;
        const auto rank = items.size() + 1;
        items.push_back(EvidenceItem::make(std::move(snippet.text), SourceTag::Web,
                                           WebProvenance{std::move(snippet.url), rank}));
    }
    return items;
}

}  // namespace medico
