#include "medico/correction/levenshtein.hpp"

#include "medico/error.hpp"
#include "medico/text.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace medico {

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
    // Shared prefix and suffix never need edits.
    while (!a.empty() && !b.empty() && a.front() == b.front()) {
        a.remove_prefix(1);
        b.remove_prefix(1);
    }
    while (!a.empty() && !b.empty() && a.back() == b.back()) {
        a.remove_suffix(1);
        b.remove_suffix(1);
    }
    if (a.size() < b.size()) std::swap(a, b);
    if (b.empty()) return a.size();

    std::vector<std::size_t> row(b.size() + 1);
    std::iota(row.begin(), row.end(), std::size_t{0});
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diagonal = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t above = row[j];
            const std::size_t substitute = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
            row[j] = std::min({above + 1, row[j - 1] + 1, substitute});
            diagonal = above;
        }
    }
    return row[b.size()];
}

std::size_t levenshtein(std::string_view a_utf8, std::string_view b_utf8) {
    return levenshtein(utf8_decode(a_utf8), utf8_decode(b_utf8));
}

double preservation(std::string_view original, std::string_view revised) {
    const auto o = utf8_decode(original);
    if (o.empty()) throw Error(ErrorCode::EmptyOriginal, "preservation is undefined for an empty original");
    const auto distance = levenshtein(o, utf8_decode(revised));
    return std::max(1.0 - static_cast<double>(distance) / static_cast<double>(o.size()), 0.0);
}

}  // namespace medico
