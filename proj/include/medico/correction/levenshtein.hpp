#pragma once

#include <cstddef>
#include <string_view>

namespace medico {

/// Character-level edit distance (insert, delete, substitute; unit costs)
/// over Unicode scalar values.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);
std::size_t levenshtein(std::string_view a_utf8, std::string_view b_utf8);

/// max(1 - lev(o, o') / len(o), 0) with len counted in scalar values.
/// Throws EmptyOriginal when o is empty.
double preservation(std::string_view original, std::string_view revised);

}  // namespace medico
