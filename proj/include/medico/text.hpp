#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace medico {

/// Decodes UTF-8 into Unicode scalar values. Malformed sequences decode to
/// U+FFFD, one replacement per offending byte.
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view text);

/// Number of Unicode scalar values in a UTF-8 string.
std::size_t utf8_length(std::string_view text);

std::string trim(std::string_view text);
std::string to_lower_ascii(std::string_view text);

/// Splits text into tokens. Chunking and lexical scoring both go through
/// this interface so the token unit can be swapped in one place.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::vector<std::string> tokenize(std::string_view text) const = 0;
    /// Inverse of tokenize for a contiguous token run.
    virtual std::string detokenize(const std::vector<std::string>& tokens) const = 0;
};

/// Whitespace-delimited word tokens; detokenize joins with a single space.
class WhitespaceTokenizer final : public Tokenizer {
public:
    std::vector<std::string> tokenize(std::string_view text) const override;
    std::string detokenize(const std::vector<std::string>& tokens) const override;
};

const Tokenizer& default_tokenizer();

/// Index terms for lexical matching: whitespace tokens, ASCII-lowercased,
/// with leading/trailing punctuation stripped. Empty terms are dropped.
std::vector<std::string> index_terms(std::string_view text,
                                     const Tokenizer& tokenizer = default_tokenizer());

/// Lowercases and collapses runs of whitespace/punctuation to one space.
std::string normalize_for_match(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Calls fn(line, line_number) for every non-blank line of a file.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(const std::string&, std::size_t)>& fn);

}  // namespace medico
