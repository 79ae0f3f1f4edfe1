#pragma once

#include "medico/text.hpp"

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace medico {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

struct ScoredPassage {
    std::size_t index = 0;  // position in the index's insertion order
    double raw_score = 0.0;
    double score = 0.0;     // raw_score / (raw_score + 1), in [0,1)
};

/// Okapi BM25 over a fixed passage set. Immutable after construction and
/// safe for concurrent readers.
class Bm25Index {
public:
    Bm25Index() = default;
    explicit Bm25Index(const std::vector<std::string>& passages, Bm25Params params = {},
                       const Tokenizer& tokenizer = default_tokenizer());

    std::size_t size() const { return doc_lengths_.size(); }
    bool empty() const { return doc_lengths_.empty(); }

    /// Top `limit` passages by descending score; ties keep insertion order.
    /// Zero-score passages are included, so limit >= size() returns all.
    std::vector<ScoredPassage> search(std::string_view query, std::size_t limit) const;

    /// Raw BM25 score of one passage.
    double score(const std::vector<std::string>& query_terms, std::size_t index) const;

    double idf(const std::string& term) const;

private:
    Bm25Params params_;
    std::vector<std::unordered_map<std::string, std::size_t>> term_freqs_;
    std::vector<std::size_t> doc_lengths_;
    std::unordered_map<std::string, std::size_t> doc_freqs_;
    double avg_length_ = 0.0;
    const Tokenizer* tokenizer_ = &default_tokenizer();
};

}  // namespace medico
