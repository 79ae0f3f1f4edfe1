#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace medico {

enum class DocumentFormat { Txt, Docx, Pdf, Markdown };

std::string_view format_name(DocumentFormat format);

/// Maps a file name's extension (".txt", ".docx", ".pdf", ".md", ".markdown")
/// to a format; nullopt for anything else.
std::optional<DocumentFormat> format_from_filename(std::string_view filename);

/// Parses "txt" / "docx" / "pdf" / "markdown" / "md"; throws UnsupportedFormat.
DocumentFormat parse_format(std::string_view name);

/// Extracts plain text from an uploaded file. Throws ExtractionFailure when
/// the bytes are not a well-formed file of the given format.
std::string ingest_file(std::span<const std::uint8_t> bytes, DocumentFormat format);
std::string ingest_file(std::string_view bytes, DocumentFormat format);

namespace detail {

std::string strip_markdown(std::string_view markdown);
std::string extract_docx_text(std::string_view bytes);
std::string extract_pdf_text(std::string_view bytes);

/// Reads one member of a ZIP archive (stored or deflated entries).
std::optional<std::string> read_zip_member(std::string_view archive, std::string_view member_name);

}  // namespace detail

}  // namespace medico
