#include "medico/fusion/fusion.hpp"

#include "medico/error.hpp"
#include "medico/retrieval/sources.hpp"
#include "medico/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace medico {

std::string_view fuse_mode_name(FuseMode mode) {
    return mode == FuseMode::Concatenation ? "concatenation" : "summarization";
}

FuseMode parse_fuse_mode(std::string_view text) {
    const auto lowered = to_lower_ascii(trim(text));
    if (lowered == "concatenation" || lowered == "concat" || lowered == "c") return FuseMode::Concatenation;
    if (lowered == "summarization" || lowered == "summary" || lowered == "s") return FuseMode::Summarization;
    throw Error(ErrorCode::ConfigError, "unknown fuse mode: " + std::string(text));
}

EvidenceSet combine(const PerSourceEvidence& sets) {
    EvidenceSet combined;
    for (auto tag : kAllSources) {
        const auto it = sets.find(tag);
        if (it == sets.end()) continue;
        for (const auto& item : it->second) {
            if (item.source != tag)
                throw Error(ErrorCode::InvalidArgument, "evidence item tagged " + std::string(source_name(item.source)) +
                                                            " filed under " + std::string(source_name(tag)));
            combined.items.push_back(item);
        }
    }
    return combined;
}

std::vector<double> Scorer::score_batch(const std::string& query, const std::vector<std::string>& passages) {
    std::vector<double> scores;
    scores.reserve(passages.size());
    for (const auto& passage : passages) scores.push_back(score(query, passage));
    return scores;
}

double LexicalScorer::score(const std::string& query, const std::string& passage) {
    const auto q_terms = index_terms(query);
    const auto p_terms = index_terms(passage);
    const std::set<std::string> a(q_terms.begin(), q_terms.end());
    const std::set<std::string> b(p_terms.begin(), p_terms.end());
    if (a.empty() || b.empty()) return 0.0;
    std::size_t shared = 0;
    for (const auto& term : a) shared += b.count(term);
    return std::min(1.0, static_cast<double>(shared) /
                             std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size())));
}

RemoteReranker::RemoteReranker(Endpoint endpoint, std::string api_key, RetryPolicy retry)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), retry_(retry) {}

double RemoteReranker::score(const std::string& query, const std::string& passage) {
    return score_batch(query, {passage}).front();
}

std::vector<double> RemoteReranker::score_batch(const std::string& query, const std::vector<std::string>& passages) {
    if (passages.empty()) return {};
    const nlohmann::json request{{"query", query}, {"texts", passages}, {"raw_scores", false}};
    std::map<std::string, std::string> headers{{"Accept", "application/json"}};
    if (!api_key_.empty()) headers["Authorization"] = "Bearer " + api_key_;
    HttpResponse response;
    try {
        response = post_json(endpoint_, request.dump(), headers, retry_);
    } catch (const Error& e) {
        throw Error(ErrorCode::ScorerUnavailable, std::string("reranker unreachable: ") + e.what());
    }
    if (response.status != 200)
        throw Error(ErrorCode::ScorerUnavailable, "reranker returned HTTP " + std::to_string(response.status));
    std::vector<double> scores(passages.size(), 0.0);
    std::vector<bool> seen(passages.size(), false);
    try {
        for (const auto& entry : nlohmann::json::parse(response.body)) {
            const auto index = entry.at("index").get<std::size_t>();
            if (index >= passages.size()) throw Error(ErrorCode::ScorerUnavailable, "reranker index out of range");
            scores[index] = std::clamp(entry.at("score").get<double>(), 0.0, 1.0);
            seen[index] = true;
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ScorerUnavailable, std::string("malformed reranker response: ") + e.what());
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end())
        throw Error(ErrorCode::ScorerUnavailable, "reranker response is missing passages");
    return scores;
}

double score_relevance(Scorer& scorer, const Query& q, const EvidenceItem& e) {
    return scorer.score(q.text, e.text);
}

EvidenceSet rerank(Scorer& scorer, const Query& q, const GeneratedContent& o, const EvidenceSet& combined,
                   std::size_t l) {
    if (l == 0) throw Error(ErrorCode::InvalidArgument, "rerank size l must be >= 1");
    if (combined.stage != EvidenceStage::Combined)
        throw Error(ErrorCode::InvalidArgument, "rerank expects a combined evidence set");
    const auto key = retrieval_key(q, o);
    std::vector<std::string> texts;
    texts.reserve(combined.items.size());
    for (const auto& item : combined.items) texts.push_back(item.text);
    const auto scores = scorer.score_batch(key, texts);

    std::vector<std::size_t> order(combined.items.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        const auto sa = static_cast<int>(combined.items[a].source);
        const auto sb = static_cast<int>(combined.items[b].source);
        if (sa != sb) return sa < sb;
        return a < b;
    });

    EvidenceSet reranked;
    reranked.stage = EvidenceStage::Reranked;
    const auto keep = std::min(l, order.size());
    for (std::size_t i = 0; i < keep; ++i) {
        auto item = combined.items[order[i]];
        item.score = std::clamp(scores[order[i]], 0.0, 1.0);
        reranked.items.push_back(std::move(item));
    }
    return reranked;
}

std::string render_numbered(const std::vector<EvidenceItem>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out.push_back('\n');
        out += "[" + std::to_string(i + 1) + "] " + items[i].text;
    }
    return out;
}

FusedEvidence fuse(const EvidenceSet& reranked, FuseMode mode, const Query& q, LlmBackend* summarizer,
                   const PromptCatalog& prompts) {
    if (reranked.items.empty()) throw Error(ErrorCode::EmptyEvidence, "no evidence to fuse");
    FusedEvidence fused;
    fused.mode = mode;
    fused.provenance = reranked.items;
    const auto numbered = render_numbered(reranked.items);
    if (mode == FuseMode::Concatenation) {
        fused.text = numbered;
        return fused;
    }
    if (summarizer == nullptr) throw Error(ErrorCode::ConfigError, "summarization needs an LLM backend");
    const auto prompt = prompts.render("summarize", {{"query", q.text}, {"evidence_list", numbered}});
    fused.text = summarizer->chat(ChatRequest::make(prompt));
    return fused;
}

}  // namespace medico
