#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace medico {

struct Query {
    std::string id;
    std::string text;

    /// Throws InvalidArgument when text is blank.
    static Query make(std::string id, std::string text);
};

struct GeneratedContent {
    std::string text;
    std::string query_id;

    static GeneratedContent make(std::string text, std::string query_id);
};

/// Retrieval source. Declaration order is the canonical combine order and
/// the rerank tie-break order.
enum class SourceTag { Web = 0, KB = 1, KG = 2, UF = 3 };

inline constexpr std::array<SourceTag, 4> kAllSources{SourceTag::Web, SourceTag::KB,
                                                      SourceTag::KG, SourceTag::UF};

/// Long name ("web", "kb", "kg", "uf").
std::string_view source_name(SourceTag tag);
/// Single-letter symbol ("S", "B", "G", "U").
std::string_view source_symbol(SourceTag tag);
/// Accepts the long name or the symbol, case-insensitive.
std::optional<SourceTag> parse_source(std::string_view text);

struct WebProvenance {
    std::string url;
    std::size_t rank = 0;  // 1-based position in the backend response
};

struct KbProvenance {
    std::string page_id;
    std::size_t chunk_index = 0;
};

struct KgProvenance {
    std::string triple_id;
};

struct FileProvenance {
    std::string file_name;
    std::size_t chunk_index = 0;
};

using Provenance = std::variant<WebProvenance, KbProvenance, KgProvenance, FileProvenance>;

struct EvidenceItem {
    std::string text;
    SourceTag source = SourceTag::Web;
    Provenance provenance;
    std::optional<double> score;

    /// Validates the invariants (non-empty text, score in [0,1]).
    static EvidenceItem make(std::string text, SourceTag source, Provenance provenance,
                             std::optional<double> score = std::nullopt);
};

bool operator==(const WebProvenance&, const WebProvenance&);
bool operator==(const KbProvenance&, const KbProvenance&);
bool operator==(const KgProvenance&, const KgProvenance&);
bool operator==(const FileProvenance&, const FileProvenance&);
bool operator==(const EvidenceItem&, const EvidenceItem&);

/// Short human-readable provenance, e.g. "kb:Paris#0".
std::string describe_provenance(const Provenance& provenance);

struct Chunk {
    std::string text;
    std::size_t token_count = 0;
    std::string document_id;
    std::size_t ordinal = 0;
};

struct Triple {
    std::string subject;
    std::string relation;
    std::string object;
};

}  // namespace medico
