#include "medico/retrieval/types.hpp"

#include "medico/error.hpp"
#include "medico/text.hpp"

namespace medico {

Query Query::make(std::string id, std::string text) {
    if (trim(text).empty()) throw Error(ErrorCode::InvalidArgument, "query text is empty");
    return Query{std::move(id), std::move(text)};
}

GeneratedContent GeneratedContent::make(std::string text, std::string query_id) {
    if (trim(text).empty()) throw Error(ErrorCode::InvalidArgument, "generated content is empty");
    return GeneratedContent{std::move(text), std::move(query_id)};
}

std::string_view source_name(SourceTag tag) {
    switch (tag) {
        case SourceTag::Web: return "web";
        case SourceTag::KB: return "kb";
        case SourceTag::KG: return "kg";
        case SourceTag::UF: return "uf";
    }
    return "?";
}

std::string_view source_symbol(SourceTag tag) {
    switch (tag) {
        case SourceTag::Web: return "S";
        case SourceTag::KB: return "B";
        case SourceTag::KG: return "G";
        case SourceTag::UF: return "U";
    }
    return "?";
}

std::optional<SourceTag> parse_source(std::string_view text) {
    const auto lowered = to_lower_ascii(trim(text));
    for (auto tag : kAllSources) {
        if (lowered == source_name(tag) || lowered == to_lower_ascii(source_symbol(tag))) return tag;
    }
    return std::nullopt;
}

EvidenceItem EvidenceItem::make(std::string text, SourceTag source, Provenance provenance,
                                std::optional<double> score) {
    if (trim(text).empty()) throw Error(ErrorCode::InvalidArgument, "evidence text is empty");
    if (score && (*score < 0.0 || *score > 1.0))
        throw Error(ErrorCode::InvalidArgument, "evidence score outside [0,1]");
    // Variant alternatives follow the SourceTag order.
    if (provenance.index() != static_cast<std::size_t>(source))
        throw Error(ErrorCode::InvalidArgument, "provenance does not match source " + std::string(source_name(source)));
    return EvidenceItem{std::move(text), source, std::move(provenance), score};
}

bool operator==(const WebProvenance& a, const WebProvenance& b) {
    return a.url == b.url && a.rank == b.rank;
}
bool operator==(const KbProvenance& a, const KbProvenance& b) {
    return a.page_id == b.page_id && a.chunk_index == b.chunk_index;
}
bool operator==(const KgProvenance& a, const KgProvenance& b) { return a.triple_id == b.triple_id; }
bool operator==(const FileProvenance& a, const FileProvenance& b) {
    return a.file_name == b.file_name && a.chunk_index == b.chunk_index;
}
bool operator==(const EvidenceItem& a, const EvidenceItem& b) {
    return a.text == b.text && a.source == b.source && a.provenance == b.provenance &&
           a.score == b.score;
}

std::string describe_provenance(const Provenance& provenance) {
    struct Visitor {
        std::string operator()(const WebProvenance& p) const {
            return "web:" + (p.url.empty() ? std::string("rank") : p.url) + "#" + std::to_string(p.rank);
        }
        std::string operator()(const KbProvenance& p) const {
            return "kb:" + p.page_id + "#" + std::to_string(p.chunk_index);
        }
        std::string operator()(const KgProvenance& p) const { return "kg:" + p.triple_id; }
        std::string operator()(const FileProvenance& p) const {
            return "uf:" + p.file_name + "#" + std::to_string(p.chunk_index);
        }
    };
    return std::visit(Visitor{}, provenance);
}

}  // namespace medico
