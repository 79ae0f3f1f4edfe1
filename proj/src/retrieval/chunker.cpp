#include "medico/retrieval/chunker.hpp"

#include "medico/error.hpp"

#include <algorithm>

namespace medico {

std::vector<Chunk> chunk_document(std::string_view text, std::size_t max_tokens,
                                  std::string_view document_id, const Tokenizer& tokenizer) {
    if (max_tokens == 0) throw Error(ErrorCode::InvalidArgument, "max_tokens must be >= 1");
    const auto tokens = tokenizer.tokenize(text);
    std::vector<Chunk> chunks;
    chunks.reserve(tokens.size() / max_tokens + 1);
    for (std::size_t begin = 0; begin < tokens.size(); begin += max_tokens) {
        const std::size_t end = std::min(tokens.size(), begin + max_tokens);
        std::vector<std::string> window(tokens.begin() + static_cast<std::ptrdiff_t>(begin),
                                        tokens.begin() + static_cast<std::ptrdiff_t>(end));
        chunks.push_back(Chunk{tokenizer.detokenize(window), end - begin, std::string(document_id),
                               chunks.size()});
    }
    return chunks;
}

}  // namespace medico
