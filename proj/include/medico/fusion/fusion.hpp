#pragma once

#include "medico/http_client.hpp"
#include "medico/llm/gateway.hpp"
#include "medico/prompts.hpp"
#include "medico/retrieval/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace medico {

enum class EvidenceStage { Combined, Reranked };

struct EvidenceSet {
    std::vector<EvidenceItem> items;
    EvidenceStage stage = EvidenceStage::Combined;
};

enum class FuseMode { Concatenation, Summarization };

std::string_view fuse_mode_name(FuseMode mode);
FuseMode parse_fuse_mode(std::string_view text);

struct FusedEvidence {
    std::string text;
    FuseMode mode = FuseMode::Concatenation;
    std::vector<EvidenceItem> provenance;  // reranked order
};

using PerSourceEvidence = std::map<SourceTag, std::vector<EvidenceItem>>;

/// Concatenates per-source lists in Web, KB, KG, UF order, preserving each
/// list's internal order. Throws InvalidArgument if an item's tag disagrees
/// with the list it was filed under.
EvidenceSet combine(const PerSourceEvidence& sets);

/// Relevance of a passage to a query text, in [0,1].
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual double score(const std::string& query, const std::string& passage) = 0;
    /// Scores many passages against one query; the default loops over score().
    virtual std::vector<double> score_batch(const std::string& query, const std::vector<std::string>& passages);
};

/// Cosine similarity of binary term vectors: |A ∩ B| / sqrt(|A| |B|) over
/// the distinct index terms of each side. 1.0 for identical term sets,
/// 0.0 without shared terms.
class LexicalScorer final : public Scorer {
public:
    double score(const std::string& query, const std::string& passage) override;
};

/// Cross-encoder served over HTTP in the text-embeddings-inference layout:
/// POST {"query", "texts"} -> [{"index", "score"}]. Any failure surfaces as
/// ScorerUnavailable.
class RemoteReranker final : public Scorer {
public:
    RemoteReranker(Endpoint endpoint, std::string api_key = {}, RetryPolicy retry = {});

    double score(const std::string& query, const std::string& passage) override;
    std::vector<double> score_batch(const std::string& query, const std::vector<std::string>& passages) override;

private:
    Endpoint endpoint_;
    std::string api_key_;
    RetryPolicy retry_;
};

double score_relevance(Scorer& scorer, const Query& q, const EvidenceItem& e);

/// Scores every combined item against q + " " + o and keeps the top
/// min(l, |E|) by descending score. Ties go to the earlier source (S, B, G, U),
/// then the earlier position in E. Returned items carry their score.
EvidenceSet rerank(Scorer& scorer, const Query& q, const GeneratedContent& o, const EvidenceSet& combined,
                   std::size_t l);

/// "[1] first\n[2] second" numbering used for fused evidence and for
/// per-source evidence shown to the detector.
std::string render_numbered(const std::vector<EvidenceItem>& items);

/// Concatenation needs no backend; Summarization sends the summarize prompt
/// to `summarizer` and uses its reply verbatim. Throws EmptyEvidence.
FusedEvidence fuse(const EvidenceSet& reranked, FuseMode mode, const Query& q, LlmBackend* summarizer = nullptr,
                   const PromptCatalog& prompts = PromptCatalog::defaults());

}  // namespace medico
