#include "medico/retrieval/ingest.hpp"

#include "medico/error.hpp"
#include "medico/text.hpp"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <regex>
#include <sstream>
#include <vector>

namespace medico {

std::string_view format_name(DocumentFormat format) {
    switch (format) {
        case DocumentFormat::Txt: return "TXT";
        case DocumentFormat::Docx: return "DOCX";
        case DocumentFormat::Pdf: return "PDF";
        case DocumentFormat::Markdown: return "MARKDOWN";
    }
    return "?";
}

std::optional<DocumentFormat> format_from_filename(std::string_view filename) {
    const auto dot = filename.rfind('.');
    if (dot == std::string_view::npos) return std::nullopt;
    const auto ext = to_lower_ascii(filename.substr(dot + 1));
    if (ext == "txt") return DocumentFormat::Txt;
    if (ext == "docx") return DocumentFormat::Docx;
    if (ext == "pdf") return DocumentFormat::Pdf;
    if (ext == "md" || ext == "markdown") return DocumentFormat::Markdown;
    return std::nullopt;
}

DocumentFormat parse_format(std::string_view name) {
    const auto lowered = to_lower_ascii(trim(name));
    if (lowered == "txt") return DocumentFormat::Txt;
    if (lowered == "docx") return DocumentFormat::Docx;
    if (lowered == "pdf") return DocumentFormat::Pdf;
    if (lowered == "markdown" || lowered == "md") return DocumentFormat::Markdown;
    throw Error(ErrorCode::UnsupportedFormat, "unsupported document format: " + std::string(name));
}

std::string ingest_file(std::span<const std::uint8_t> bytes, DocumentFormat format) {
    return ingest_file(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                       format);
}

std::string ingest_file(std::string_view bytes, DocumentFormat format) {
    switch (format) {
        case DocumentFormat::Txt: return std::string(bytes);
        case DocumentFormat::Markdown: return detail::strip_markdown(bytes);
        case DocumentFormat::Docx: return detail::extract_docx_text(bytes);
        case DocumentFormat::Pdf: return detail::extract_pdf_text(bytes);
    }
    throw Error(ErrorCode::UnsupportedFormat, "unsupported document format");
}

namespace detail {

namespace {

// ---------------------------------------------------------------------------
// Markdown
// ---------------------------------------------------------------------------

std::string strip_inline_markdown(std::string line) {
    static const std::regex image(R"(!\[([^\]]*)\]\([^)]*\))");
    static const std::regex link(R"(\[([^\]]*)\]\([^)]*\))");
    static const std::regex ref_link(R"(\[([^\]]*)\]\[[^\]]*\])");
    static const std::regex html_tag(R"(<[^>\n]+>)");
    line = std::regex_replace(line, image, "$1");
    line = std::regex_replace(line, link, "$1");
    line = std::regex_replace(line, ref_link, "$1");
    line = std::regex_replace(line, html_tag, "");

    std::string out;
    out.reserve(line.size());
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (c == '\\' && i + 1 < line.size() && std::ispunct(static_cast<unsigned char>(line[i + 1]))) {
            out.push_back(line[++i]);
            continue;
        }
        if (c == '`' || c == '*' || c == '~') continue;
        if (c == '_') {
            // Underscores inside words (snake_case) are content, not emphasis.
            const bool word_before = i > 0 && std::isalnum(static_cast<unsigned char>(line[i - 1]));
            const bool word_after =
                i + 1 < line.size() && std::isalnum(static_cast<unsigned char>(line[i + 1]));
            if (word_before && word_after) out.push_back(c);
            continue;
        }
        if (c == '|') {
            out.push_back(' ');
            continue;
        }
        out.push_back(c);
    }
    return out;
}

bool is_rule_line(const std::string& trimmed) {
    if (trimmed.size() < 3) return false;
    const char c = trimmed[0];
    if (c != '-' && c != '*' && c != '_' && c != '=') return false;
    return std::all_of(trimmed.begin(), trimmed.end(), [c](char x) { return x == c || x == ' '; });
}

bool is_table_separator(const std::string& trimmed) {
    if (trimmed.find('-') == std::string::npos || trimmed.find('|') == std::string::npos) return false;
    return std::all_of(trimmed.begin(), trimmed.end(),
                       [](char x) { return x == '|' || x == '-' || x == ':' || x == ' '; });
}

std::string strip_block_prefix(std::string trimmed) {
    static const std::regex heading(R"(^#{1,6}\s*)");
    static const std::regex closing_hashes(R"(\s+#+\s*$)");
    static const std::regex bullet(R"(^[-*+]\s+(\[[ xX]\]\s+)?)");
    static const std::regex ordered(R"(^\d+[.)]\s+)");
    while (!trimmed.empty() && trimmed[0] == '>') trimmed = trim(trimmed.substr(1));
    if (!trimmed.empty() && trimmed[0] == '#') {
        trimmed = std::regex_replace(trimmed, heading, "");
        trimmed = std::regex_replace(trimmed, closing_hashes, "");
    }
    trimmed = std::regex_replace(trimmed, bullet, "");
    trimmed = std::regex_replace(trimmed, ordered, "");
    return trimmed;
}

// ---------------------------------------------------------------------------
// ZIP / DOCX
// ---------------------------------------------------------------------------

std::uint32_t read_u32(std::string_view data, std::size_t offset) {
    if (offset + 4 > data.size()) throw Error(ErrorCode::ExtractionFailure, "truncated zip record");
    const auto* p = reinterpret_cast<const unsigned char*>(data.data() + offset);
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(std::string_view data, std::size_t offset) {
    if (offset + 2 > data.size()) throw Error(ErrorCode::ExtractionFailure, "truncated zip record");
    const auto* p = reinterpret_cast<const unsigned char*>(data.data() + offset);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

// window_bits: -15 for raw deflate (zip), 15 for zlib-wrapped (PDF FlateDecode).
std::optional<std::string> inflate_bytes(std::string_view input, int window_bits,
                                         std::size_t size_hint = 0) {
    z_stream stream{};
    if (inflateInit2(&stream, window_bits) != Z_OK) return std::nullopt;
    stream.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(input.data()));
    stream.avail_in = static_cast<uInt>(input.size());
    std::string out;
    std::vector<char> buffer(std::max<std::size_t>(size_hint, 64 * 1024));
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        stream.next_out = reinterpret_cast<Bytef*>(buffer.data());
        stream.avail_out = static_cast<uInt>(buffer.size());
        rc = inflate(&stream, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&stream);
            return std::nullopt;
        }
        out.append(buffer.data(), buffer.size() - stream.avail_out);
        if (rc == Z_OK && stream.avail_in == 0 && stream.avail_out != 0) {
            // Input exhausted without a stream terminator.
            inflateEnd(&stream);
            return std::nullopt;
        }
    }
    inflateEnd(&stream);
    return out;
}

std::string decode_xml_entities(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '&') {
            out.push_back(text[i]);
            continue;
        }
        const auto semi = text.find(';', i);
        if (semi == std::string_view::npos || semi - i > 10) {
            out.push_back('&');
            continue;
        }
        const auto entity = text.substr(i + 1, semi - i - 1);
        if (entity == "amp") out.push_back('&');
        else if (entity == "lt") out.push_back('<');
        else if (entity == "gt") out.push_back('>');
        else if (entity == "quot") out.push_back('"');
        else if (entity == "apos") out.push_back('\'');
        else if (!entity.empty() && entity[0] == '#') {
            char32_t cp = 0;
            try {
                cp = entity.size() > 1 && (entity[1] == 'x' || entity[1] == 'X')
                         ? static_cast<char32_t>(std::stoul(std::string(entity.substr(2)), nullptr, 16))
                         : static_cast<char32_t>(std::stoul(std::string(entity.substr(1))));
            } catch (const std::exception&) {
                out.push_back('&');
                continue;
            }
            out += utf8_encode(std::u32string(1, cp));
        } else {
            out.push_back('&');
            continue;
        }
        i = semi;
    }
    return out;
}

// ---------------------------------------------------------------------------
// PDF
// ---------------------------------------------------------------------------

class PdfContentParser {
public:
    explicit PdfContentParser(std::string_view content) : content_(content) {}

    std::string run() {
        std::vector<std::string> operands;
        while (skip_space(), pos_ < content_.size()) {
            const char c = content_[pos_];
            if (c == '(') {
                operands.push_back(literal_string());
            } else if (c == '<' && peek(1) != '<') {
                operands.push_back(hex_string());
            } else if (c == '[') {
                ++pos_;
                operands.push_back(array_text());
            } else if (c == '%') {
                while (pos_ < content_.size() && content_[pos_] != '\n' && content_[pos_] != '\r') ++pos_;
            } else if (c == '/' || std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' ||
                       c == '.') {
                operands.push_back(bare_token());
            } else if (c == '<' || c == '>' || c == ']' || c == '{' || c == '}') {
                ++pos_;
            } else {
                const auto op = bare_token();
                apply(op, operands);
                operands.clear();
            }
        }
        return out_;
    }

private:
    char peek(std::size_t ahead) const {
        return pos_ + ahead < content_.size() ? content_[pos_ + ahead] : '\0';
    }

    void skip_space() {
        while (pos_ < content_.size() && std::isspace(static_cast<unsigned char>(content_[pos_]))) ++pos_;
    }

    std::string bare_token() {
        const auto start = pos_;
        ++pos_;
        while (pos_ < content_.size()) {
            const char c = content_[pos_];
            if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == '<' ||
                c == '>' || c == '[' || c == ']' || c == '/' || c == '%' || c == '{' || c == '}')
                break;
            ++pos_;
        }
        return std::string(content_.substr(start, pos_ - start));
    }

    std::string literal_string() {
        ++pos_;
        std::string out;
        int depth = 1;
        while (pos_ < content_.size()) {
            const char c = content_[pos_++];
            if (c == '\\' && pos_ < content_.size()) {
                const char e = content_[pos_++];
                switch (e) {
                    case 'n': out.push_back('\n'); break;
                    case 'r': out.push_back('\r'); break;
                    case 't': out.push_back('\t'); break;
                    case 'b': out.push_back('\b'); break;
                    case 'f': out.push_back('\f'); break;
                    case '\r':
                        if (pos_ < content_.size() && content_[pos_] == '\n') ++pos_;
                        break;
                    case '\n': break;
                    default:
                        if (e >= '0' && e <= '7') {
                            int value = e - '0';
                            for (int k = 0; k < 2 && pos_ < content_.size() && content_[pos_] >= '0' &&
                                            content_[pos_] <= '7';
                                 ++k)
                                value = value * 8 + (content_[pos_++] - '0');
                            out.push_back(static_cast<char>(value));
                        } else {
                            out.push_back(e);
                        }
                }
                continue;
            }
            if (c == '(') ++depth;
            if (c == ')' && --depth == 0) break;
            out.push_back(c);
        }
        return "(" + out;
    }

    std::string hex_string() {
        ++pos_;
        std::string digits;
        while (pos_ < content_.size() && content_[pos_] != '>') {
            if (std::isxdigit(static_cast<unsigned char>(content_[pos_]))) digits.push_back(content_[pos_]);
            ++pos_;
        }
        ++pos_;
        if (digits.size() % 2 == 1) digits.push_back('0');
        std::string bytes;
        for (std::size_t i = 0; i < digits.size(); i += 2)
            bytes.push_back(static_cast<char>(std::stoi(digits.substr(i, 2), nullptr, 16)));
        // Two-byte big-endian strings (UTF-16BE with BOM) are decoded to UTF-8.
        if (bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0xFE &&
            static_cast<unsigned char>(bytes[1]) == 0xFF) {
            std::u32string decoded;
            for (std::size_t i = 2; i + 1 < bytes.size(); i += 2)
                decoded.push_back(static_cast<char32_t>((static_cast<unsigned char>(bytes[i]) << 8) |
                                                        static_cast<unsigned char>(bytes[i + 1])));
            return "(" + utf8_encode(decoded);
        }
        return "(" + bytes;
    }

    // TJ arrays: strings are concatenated; large negative kerning is a word gap.
    std::string array_text() {
        std::string out = "(";
        while (skip_space(), pos_ < content_.size() && content_[pos_] != ']') {
            const char c = content_[pos_];
            if (c == '(') {
                out += literal_string().substr(1);
            } else if (c == '<') {
                out += hex_string().substr(1);
            } else {
                const auto token = bare_token();
                try {
                    if (std::stod(token) < -200.0) out.push_back(' ');
                } catch (const std::exception&) {
                }
            }
        }
        ++pos_;
        return out;
    }

    void newline() {
        if (!out_.empty() && out_.back() != '\n') out_.push_back('\n');
    }

    void apply(const std::string& op, const std::vector<std::string>& operands) {
        auto last_string = [&]() -> std::string {
            for (auto it = operands.rbegin(); it != operands.rend(); ++it)
                if (!it->empty() && (*it)[0] == '(') return it->substr(1);
            return {};
        };
        if (op == "Tj" || op == "TJ") {
            out_ += last_string();
        } else if (op == "'" || op == "\"") {
            newline();
            out_ += last_string();
        } else if (op == "T*") {
            newline();
        } else if (op == "Td" || op == "TD") {
            if (operands.size() >= 2) {
                try {
                    if (std::stod(operands[operands.size() - 1]) != 0.0) newline();
                    else if (!out_.empty() && out_.back() != ' ' && out_.back() != '\n') out_.push_back(' ');
                } catch (const std::exception&) {
                }
            }
        } else if (op == "ET") {
            newline();
        }
    }

    std::string_view content_;
    std::size_t pos_ = 0;
    std::string out_;
};

}  // namespace

std::string strip_markdown(std::string_view markdown) {
    std::istringstream in{std::string(markdown)};
    std::string line;
    std::string out;
    bool in_fence = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto trimmed = trim(line);
        if (trimmed.rfind("```", 0) == 0 || trimmed.rfind("~~~", 0) == 0) {
            in_fence = !in_fence;
            continue;
        }
        if (in_fence) {
            out += line;
            out.push_back('\n');
            continue;
        }
        if (is_rule_line(trimmed) || is_table_separator(trimmed)) continue;
        auto text = trim(strip_inline_markdown(strip_block_prefix(trimmed)));
        out += text;
        out.push_back('\n');
    }
    while (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

std::optional<std::string> read_zip_member(std::string_view archive, std::string_view member_name) {
    constexpr std::uint32_t kEndOfCentralDir = 0x06054b50;
    constexpr std::uint32_t kCentralHeader = 0x02014b50;
    constexpr std::uint32_t kLocalHeader = 0x04034b50;
    if (archive.size() < 22) throw Error(ErrorCode::ExtractionFailure, "not a zip archive");

    std::size_t eocd = std::string_view::npos;
    const std::size_t earliest = archive.size() > 22 + 65535 ? archive.size() - 22 - 65535 : 0;
    for (std::size_t i = archive.size() - 22 + 1; i-- > earliest;) {
        if (read_u32(archive, i) == kEndOfCentralDir) {
            eocd = i;
            break;
        }
    }
    if (eocd == std::string_view::npos) throw Error(ErrorCode::ExtractionFailure, "zip directory not found");

    const std::uint16_t entries = read_u16(archive, eocd + 10);
    std::size_t cursor = read_u32(archive, eocd + 16);
    for (std::uint16_t e = 0; e < entries; ++e) {
        if (read_u32(archive, cursor) != kCentralHeader)
            throw Error(ErrorCode::ExtractionFailure, "corrupt zip central directory");
        const std::uint16_t method = read_u16(archive, cursor + 10);
        const std::uint32_t compressed_size = read_u32(archive, cursor + 20);
        const std::uint32_t uncompressed_size = read_u32(archive, cursor + 24);
        const std::uint16_t name_len = read_u16(archive, cursor + 28);
        const std::uint16_t extra_len = read_u16(archive, cursor + 30);
        const std::uint16_t comment_len = read_u16(archive, cursor + 32);
        const std::uint32_t local_offset = read_u32(archive, cursor + 42);
        if (cursor + 46 + name_len > archive.size())
            throw Error(ErrorCode::ExtractionFailure, "corrupt zip central directory");
        const auto name = archive.substr(cursor + 46, name_len);
        cursor += 46 + name_len + extra_len + comment_len;
        if (name != member_name) continue;

        if (read_u32(archive, local_offset) != kLocalHeader)
            throw Error(ErrorCode::ExtractionFailure, "corrupt zip local header");
        const std::size_t data_start =
            local_offset + 30 + read_u16(archive, local_offset + 26) + read_u16(archive, local_offset + 28);
        if (data_start + compressed_size > archive.size())
            throw Error(ErrorCode::ExtractionFailure, "truncated zip member");
        const auto payload = archive.substr(data_start, compressed_size);
        if (method == 0) return std::string(payload);
        if (method == 8) {
            auto inflated = inflate_bytes(payload, -MAX_WBITS, uncompressed_size);
            if (!inflated) throw Error(ErrorCode::ExtractionFailure, "corrupt deflate data in zip member");
            return inflated;
        }
        throw Error(ErrorCode::ExtractionFailure, "unsupported zip compression method");
    }
    return std::nullopt;
}

std::string extract_docx_text(std::string_view bytes) {
    const auto xml = read_zip_member(bytes, "word/document.xml");
    if (!xml) throw Error(ErrorCode::ExtractionFailure, "DOCX archive has no word/document.xml");

    std::string out;
    std::size_t pos = 0;
    bool in_text = false;
    while (pos < xml->size()) {
        const auto lt = xml->find('<', pos);
        if (lt == std::string::npos) break;
        if (in_text) out += decode_xml_entities(std::string_view(*xml).substr(pos, lt - pos));
        const auto gt = xml->find('>', lt);
        if (gt == std::string::npos) throw Error(ErrorCode::ExtractionFailure, "malformed DOCX XML");
        std::string_view tag(xml->data() + lt + 1, gt - lt - 1);
        const bool closing = !tag.empty() && tag[0] == '/';
        if (closing) tag.remove_prefix(1);
        const bool self_closing = !tag.empty() && tag.back() == '/';
        const auto name = tag.substr(0, tag.find_first_of(" /\t\r\n"));
        if (name == "w:t") {
            in_text = !closing && !self_closing;
        } else if (name == "w:tab" && !closing) {
            out.push_back('\t');
        } else if ((name == "w:br" || name == "w:cr") && !closing) {
            out.push_back('\n');
        } else if (name == "w:p" && (closing || self_closing)) {
            out.push_back('\n');
        }
        pos = gt + 1;
    }
    while (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

std::string extract_pdf_text(std::string_view bytes) {
    if (bytes.substr(0, 5) != "%PDF-") throw Error(ErrorCode::ExtractionFailure, "missing %PDF header");
    if (bytes.find("%%EOF") == std::string_view::npos)
        throw Error(ErrorCode::ExtractionFailure, "PDF is truncated (no %%EOF marker)");

    std::string out;
    std::size_t pos = 0;
    while (true) {
        const auto kw = bytes.find("stream", pos);
        if (kw == std::string_view::npos) break;
        // Skip "endstream" hits.
        if (kw >= 3 && bytes.substr(kw - 3, 3) == "end") {
            pos = kw + 6;
            continue;
        }
        std::size_t data_start = kw + 6;
        if (data_start < bytes.size() && bytes[data_start] == '\r') ++data_start;
        if (data_start < bytes.size() && bytes[data_start] == '\n') ++data_start;
        const auto end = bytes.find("endstream", data_start);
        if (end == std::string_view::npos) throw Error(ErrorCode::ExtractionFailure, "unterminated PDF stream");

        const auto dict_start = bytes.rfind("<<", kw);
        const auto dictionary =
            dict_start == std::string_view::npos ? std::string_view{} : bytes.substr(dict_start, kw - dict_start);
        auto payload = bytes.substr(data_start, end - data_start);
        while (!payload.empty() && (payload.back() == '\n' || payload.back() == '\r')) payload.remove_suffix(1);
        pos = end + 9;

        // Images, fonts and other binary streams carry no text layer.
        if (dictionary.find("/Subtype") != std::string_view::npos &&
            dictionary.find("/Form") == std::string_view::npos)
            continue;

        std::string content;
        if (dictionary.find("/FlateDecode") != std::string_view::npos) {
            auto inflated = inflate_bytes(payload, MAX_WBITS);
            if (!inflated) throw Error(ErrorCode::ExtractionFailure, "corrupt FlateDecode stream");
            content = std::move(*inflated);
        } else if (dictionary.find("/Filter") != std::string_view::npos) {
            continue;
        } else {
            content = std::string(payload);
        }
        if (content.find("BT") == std::string::npos) continue;
        auto text = PdfContentParser(content).run();
        if (!text.empty()) {
            if (!out.empty() && out.back() != '\n') out.push_back('\n');
            out += text;
        }
    }
    while (!out.empty() && (out.back() == '\n' || out.back() == ' ')) out.pop_back();
    return out;
}

}  // namespace detail

}  // namespace medico
