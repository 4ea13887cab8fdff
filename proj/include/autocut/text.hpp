#pragma once

#include <cstdint>
#include <string>

namespace autocut {

// Trim, collapse internal whitespace runs to one space, ASCII-lowercase.
// Used as the dedup key normalizer.
std::string normalize_key(const std::string& s);

// Word units: whitespace-delimited runs count one each, CJK codepoints
// count one each, mixed text sums both. CJK punctuation separates words
// without being counted.
std::size_t word_count(const std::string& utf8);

bool is_cjk_codepoint(std::uint32_t cp);

} // namespace autocut
