#pragma once

#include "medico/retrieval/types.hpp"
#include "medico/text.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace medico {

inline constexpr std::size_t kDefaultChunkTokens = 256;

/// Greedy left-to-right packing of tokens into chunks of at most max_tokens.
/// Concatenating the chunks' token sequences reproduces the document's.
std::vector<Chunk> chunk_document(std::string_view text, std::size_t max_tokens = kDefaultChunkTokens,
                                  std::string_view document_id = {},
                                  const Tokenizer& tokenizer = default_tokenizer());

}  // namespace medico
