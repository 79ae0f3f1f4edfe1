#pragma once

#include "medico/retrieval/chunker.hpp"
#include "medico/retrieval/lexical_index.hpp"
#include "medico/retrieval/types.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace medico {

/// Key used for every local lookup and for reranking: the query followed by
/// the generated content, separated by one space.
std::string retrieval_key(const Query& q, const GeneratedContent& o);

inline constexpr std::string_view kDefaultTripleTemplate = "{subject} {relation} {object}.";

/// Renders a triple through a template with {subject}/{relation}/{object}
/// slots. Labels are whitespace-trimmed first.
std::string linearize_triple(const Triple& triple,
                             std::string_view template_text = kDefaultTripleTemplate);

// ---------------------------------------------------------------------------
// Knowledge base
// ---------------------------------------------------------------------------

struct KbPage {
    std::string id;
    std::string text;
};

/// JSON lines {"id": str, "text": str}.
std::vector<KbPage> load_kb_corpus(const std::filesystem::path& path);

struct KbChunk {
    std::string page_id;
    std::size_t chunk_index = 0;
    std::string text;
    std::size_t token_count = 0;
};

class KnowledgeBase {
public:
    /// Chunks every page and indexes the chunks in corpus order.
    /// Throws DuplicatePageId.
    static KnowledgeBase build(const std::vector<KbPage>& corpus, std::size_t max_tokens = kDefaultChunkTokens);
    static KnowledgeBase load(const std::filesystem::path& dir);
    void save(const std::filesystem::path& dir) const;

    const std::vector<KbChunk>& chunks() const { return chunks_; }
    std::size_t page_count() const { return page_count_; }
    std::size_t max_tokens() const { return max_tokens_; }

    std::vector<EvidenceItem> retrieve(const std::string& key, std::size_t m) const;

private:
    KnowledgeBase(std::vector<KbChunk> chunks, std::size_t page_count, std::size_t max_tokens);

    std::vector<KbChunk> chunks_;
    std::size_t page_count_ = 0;
    std::size_t max_tokens_ = kDefaultChunkTokens;
    Bm25Index index_;
};

/// Throws IndexMissing when no index was built (null handle or zero chunks).
std::vector<EvidenceItem> retrieve_kb(const KnowledgeBase* kb, const Query& q, const GeneratedContent& o,
                                      std::size_t m);

// ---------------------------------------------------------------------------
// Knowledge graph
// ---------------------------------------------------------------------------

struct KgRecord {
    std::string id;
    Triple triple;
};

/// JSON lines {"id", "subject", "relation", "object"}.
std::vector<KgRecord> load_kg_corpus(const std::filesystem::path& path);

class KnowledgeGraph {
public:
    static KnowledgeGraph build(std::vector<KgRecord> triples,
                                std::string template_text = std::string(kDefaultTripleTemplate));
    static KnowledgeGraph load(const std::filesystem::path& dir);
    void save(const std::filesystem::path& dir) const;

    const std::vector<KgRecord>& triples() const { return triples_; }
    const std::vector<std::string>& passages() const { return passages_; }

    std::vector<EvidenceItem> retrieve(const std::string& key, std::size_t k) const;

private:
    KnowledgeGraph(std::vector<KgRecord> triples, std::string template_text);

    std::vector<KgRecord> triples_;
    std::string template_;
    std::vector<std::string> passages_;
    Bm25Index index_;
};

/// Throws IndexMissing for a null handle; an empty graph yields no items.
std::vector<EvidenceItem> retrieve_kg(const KnowledgeGraph* kg, const Query& q, const GeneratedContent& o,
                                      std::size_t k);

// ---------------------------------------------------------------------------
// User-uploaded files
// ---------------------------------------------------------------------------

struct UploadedDocument {
    std::string file_id;
    std::string file_name;
    std::string text;
};

/// Chunks every uploaded document and returns the j best chunks. An empty
/// file list is legal and yields an empty result.
std::vector<EvidenceItem> retrieve_uf(const Query& q, const GeneratedContent& o, std::size_t j,
                                      const std::vector<UploadedDocument>& files,
                                      std::size_t max_tokens = kDefaultChunkTokens);

}  // namespace medico
