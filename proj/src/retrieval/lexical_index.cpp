#include "medico/retrieval/lexical_index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace medico {

Bm25Index::Bm25Index(const std::vector<std::string>& passages, Bm25Params params,
                     const Tokenizer& tokenizer)
    : params_(params), tokenizer_(&tokenizer) {
    term_freqs_.reserve(passages.size());
    doc_lengths_.reserve(passages.size());
    std::size_t total = 0;
    for (const auto& passage : passages) {
        const auto terms = index_terms(passage, tokenizer);
        std::unordered_map<std::string, std::size_t> freqs;
        for (const auto& term : terms) ++freqs[term];
        for (const auto& [term, _] : freqs) ++doc_freqs_[term];
        total += terms.size();
        doc_lengths_.push_back(terms.size());
        term_freqs_.push_back(std::move(freqs));
    }
    avg_length_ = passages.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(passages.size());
}

double Bm25Index::idf(const std::string& term) const {
    const auto it = doc_freqs_.find(term);
    const double df = it == doc_freqs_.end() ? 0.0 : static_cast<double>(it->second);
    const double n = static_cast<double>(size());
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double Bm25Index::score(const std::vector<std::string>& query_terms, std::size_t index) const {
    const auto& freqs = term_freqs_.at(index);
    const double length_norm =
        avg_length_ > 0.0 ? static_cast<double>(doc_lengths_[index]) / avg_length_ : 0.0;
    double total = 0.0;
    for (const auto& term : query_terms) {
        const auto it = freqs.find(term);
        if (it == freqs.end()) continue;
        const double tf = static_cast<double>(it->second);
        total += idf(term) * tf * (params_.k1 + 1.0) /
                 (tf + params_.k1 * (1.0 - params_.b + params_.b * length_norm));
    }
    return total;
}

std::vector<ScoredPassage> Bm25Index::search(std::string_view query, std::size_t limit) const {
    // Repeated query terms count once per occurrence, as in classic BM25.
    const auto terms = index_terms(query, *tokenizer_);
    std::vector<ScoredPassage> scored(size());
    for (std::size_t i = 0; i < size(); ++i) {
        const double raw = score(terms, i);
        scored[i] = ScoredPassage{i, raw, raw / (raw + 1.0)};
    }
    const auto keep = std::min(limit, scored.size());
    std::stable_sort(scored.begin(), scored.end(),
                     [](const ScoredPassage& a, const ScoredPassage& b) { return a.raw_score > b.raw_score; });
    scored.resize(keep);
    return scored;
}

}  // namespace medico
