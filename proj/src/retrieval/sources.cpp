#include "medico/retrieval/sources.hpp"

#include "medico/error.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <unordered_set>

namespace medico {

using nlohmann::json;

namespace {

constexpr int kIndexFormatVersion = 1;

std::string required_string(const json& record, const char* field, const std::filesystem::path& path,
                            std::size_t line) {
    if (!record.contains(field) || !record[field].is_string())
        throw Error(ErrorCode::ParseError,
                    path.string() + ":" + std::to_string(line) + ": missing string field \"" + field + "\"");
    return record[field].get<std::string>();
}

json parse_line(const std::string& text, const std::filesystem::path& path, std::size_t line) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
}

std::string replace_all(std::string text, std::string_view needle, std::string_view value) {
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), value);
        pos += value.size();
    }
    return text;
}

json read_manifest(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.json";
    if (!std::filesystem::exists(path))
        throw Error(ErrorCode::IndexMissing, "no index manifest under " + dir.string());
    auto manifest = json::parse(read_file(path));
    if (manifest.value("version", 0) != kIndexFormatVersion)
        throw Error(ErrorCode::IndexMissing, "unsupported index version under " + dir.string());
    return manifest;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records) {
    std::string out;
    for (const auto& record : records) {
        out += record.dump();
        out.push_back('\n');
    }
    write_file(path, out);
}

}  // namespace

std::string retrieval_key(const Query& q, const GeneratedContent& o) { return q.text + " " + o.text; }

std::string linearize_triple(const Triple& triple, std::string_view template_text) {
    std::string out(template_text);
    out = replace_all(out, "{subject}", trim(triple.subject));
    out = replace_all(out, "{relation}", trim(triple.relation));
    out = replace_all(out, "{object}", trim(triple.object));
    return out;
}

// ---------------------------------------------------------------------------
// Knowledge base
// ---------------------------------------------------------------------------

std::vector<KbPage> load_kb_corpus(const std::filesystem::path& path) {
    std::vector<KbPage> pages;
    for_each_line(path, [&](const std::string& text, std::size_t line) {
        const auto record = parse_line(text, path, line);
        pages.push_back(KbPage{required_string(record, "id", path, line), required_string(record, "text", path, line)});
    });
    return pages;
}

KnowledgeBase::KnowledgeBase(std::vector<KbChunk> chunks, std::size_t page_count, std::size_t max_tokens)
    : chunks_(std::move(chunks)), page_count_(page_count), max_tokens_(max_tokens) {
    std::vector<std::string> texts;
    texts.reserve(chunks_.size());
    for (const auto& chunk : chunks_) texts.push_back(chunk.text);
    index_ = Bm25Index(texts);
}

KnowledgeBase KnowledgeBase::build(const std::vector<KbPage>& corpus, std::size_t max_tokens) {
    std::unordered_set<std::string> seen;
    std::vector<KbChunk> chunks;
    for (const auto& page : corpus) {
        if (!seen.insert(page.id).second)
            throw Error(ErrorCode::DuplicatePageId, "duplicate KB page id: " + page.id);
        for (auto& chunk : chunk_document(page.text, max_tokens, page.id))
            chunks.push_back(KbChunk{page.id, chunk.ordinal, std::move(chunk.text), chunk.token_count});
    }
    return KnowledgeBase(std::move(chunks), corpus.size(), max_tokens);
}

void KnowledgeBase::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::vector<json> records;
    records.reserve(chunks_.size());
    for (const auto& chunk : chunks_)
        records.push_back(json{{"page_id", chunk.page_id},
                               {"chunk_index", chunk.chunk_index},
                               {"text", chunk.text},
                               {"token_count", chunk.token_count}});
    write_jsonl(dir / "chunks.jsonl", records);
    const json manifest{{"version", kIndexFormatVersion},
                        {"kind", "kb"},
                        {"pages", page_count_},
                        {"chunks", chunks_.size()},
                        {"max_tokens", max_tokens_}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

KnowledgeBase KnowledgeBase::load(const std::filesystem::path& dir) {
    const auto manifest = read_manifest(dir);
    std::vector<KbChunk> chunks;
    const auto path = dir / "chunks.jsonl";
    for_each_line(path, [&](const std::string& text, std::size_t line) {
        const auto record = parse_line(text, path, line);
        chunks.push_back(KbChunk{record.at("page_id").get<std::string>(), record.at("chunk_index").get<std::size_t>(),
                                 record.at("text").get<std::string>(), record.at("token_count").get<std::size_t>()});
    });
    return KnowledgeBase(std::move(chunks), manifest.value("pages", std::size_t{0}),
                         manifest.value("max_tokens", kDefaultChunkTokens));
}

std::vector<EvidenceItem> KnowledgeBase::retrieve(const std::string& key, std::size_t m) const {
    std::vector<EvidenceItem> items;
    for (const auto& hit : index_.search(key, m)) {
        const auto& chunk = chunks_[hit.index];
        items.push_back(EvidenceItem::make(chunk.text, SourceTag::KB, KbProvenance{chunk.page_id, chunk.chunk_index},
                                           hit.score));
    }
    return items;
}

std::vector<EvidenceItem> retrieve_kb(const KnowledgeBase* kb, const Query& q, const GeneratedContent& o,
                                      std::size_t m) {
    if (kb == nullptr || kb->chunks().empty())
        throw Error(ErrorCode::IndexMissing, "knowledge base index has not been built");
    return kb->retrieve(retrieval_key(q, o), m);
}

// ---------------------------------------------------------------------------
// Knowledge graph
// ---------------------------------------------------------------------------

std::vector<KgRecord> load_kg_corpus(const std::filesystem::path& path) {
    std::vector<KgRecord> triples;
    for_each_line(path, [&](const std::string& text, std::size_t line) {
        const auto record = parse_line(text, path, line);
        Triple triple{required_string(record, "subject", path, line), required_string(record, "relation", path, line),
                      required_string(record, "object", path, line)};
        if (trim(triple.subject).empty() || trim(triple.relation).empty() || trim(triple.object).empty())
            throw Error(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ": empty triple label");
        triples.push_back(KgRecord{required_string(record, "id", path, line), std::move(triple)});
    });
    return triples;
}

KnowledgeGraph::KnowledgeGraph(std::vector<KgRecord> triples, std::string template_text)
    : triples_(std::move(triples)), template_(std::move(template_text)) {
    passages_.reserve(triples_.size());
    for (const auto& record : triples_) passages_.push_back(linearize_triple(record.triple, template_));
    index_ = Bm25Index(passages_);
}

KnowledgeGraph KnowledgeGraph::build(std::vector<KgRecord> triples, std::string template_text) {
    std::unordered_set<std::string> seen;
    for (const auto& record : triples) {
        if (!seen.insert(record.id).second)
            throw Error(ErrorCode::DuplicatePageId, "duplicate KG triple id: " + record.id);
    }
    return KnowledgeGraph(std::move(triples), std::move(template_text));
}

void KnowledgeGraph::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::vector<json> records;
    records.reserve(triples_.size());
    for (const auto& record : triples_)
        records.push_back(json{{"id", record.id},
                               {"subject", record.triple.subject},
                               {"relation", record.triple.relation},
                               {"object", record.triple.object}});
    write_jsonl(dir / "triples.jsonl", records);
    const json manifest{
        {"version", kIndexFormatVersion}, {"kind", "kg"}, {"triples", triples_.size()}, {"template", template_}};
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

KnowledgeGraph KnowledgeGraph::load(const std::filesystem::path& dir) {
    const auto manifest = read_manifest(dir);
    auto triples = load_kg_corpus(dir / "triples.jsonl");
    return KnowledgeGraph(std::move(triples),
                          manifest.value("template", std::string(kDefaultTripleTemplate)));
}

std::vector<EvidenceItem> KnowledgeGraph::retrieve(const std::string& key, std::size_t k) const {
    std::vector<EvidenceItem> items;
    for (const auto& hit : index_.search(key, k))
        items.push_back(EvidenceItem::make(passages_[hit.index], SourceTag::KG,
                                           KgProvenance{triples_[hit.index].id}, hit.score));
    return items;
}

std::vector<EvidenceItem> retrieve_kg(const KnowledgeGraph* kg, const Query& q, const GeneratedContent& o,
                                      std::size_t k) {
    if (kg == nullptr) throw Error(ErrorCode::IndexMissing, "knowledge graph index has not been built");
    return kg->retrieve(retrieval_key(q, o), k);
}

// ---------------------------------------------------------------------------
// Uploaded files
// ---------------------------------------------------------------------------

std::vector<EvidenceItem> retrieve_uf(const Query& q, const GeneratedContent& o, std::size_t j,
                                      const std::vector<UploadedDocument>& files, std::size_t max_tokens) {
    if (files.empty() || j == 0) return {};
    std::vector<std::string> texts;
    std::vector<FileProvenance> origins;
    for (const auto& file : files) {
        for (auto& chunk : chunk_document(file.text, max_tokens, file.file_id)) {
            origins.push_back(FileProvenance{file.file_name, chunk.ordinal});
            texts.push_back(std::move(chunk.text));
        }
    }
    const Bm25Index index(texts);
    std::vector<EvidenceItem> items;
    for (const auto& hit : index.search(retrieval_key(q, o), j))
        items.push_back(EvidenceItem::make(texts[hit.index], SourceTag::UF, origins[hit.index], hit.score));
    return items;
}

}  // namespace medico
