#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bioqa {

// Decodes UTF-8 into code points. Invalid bytes are kept as single code
// points (latin-1 fallback) so the function is total.
std::vector<char32_t> utf8_decode(std::string_view text);

// Encodes a code point range back to UTF-8.
std::string utf8_encode(const char32_t* begin, const char32_t* end);

// ASCII-only case folding; non-ASCII code points pass through unchanged.
// Keeps code point counts stable, which offset bookkeeping relies on.
std::string ascii_lower(std::string_view s);
char32_t ascii_lower(char32_t c);

// Lowercase + collapse runs of whitespace to single spaces + trim.
// Shared by answer matching and span dedup.
std::string normalize_answer(std::string_view s);

bool is_ascii_space(char32_t c);

}  // namespace bioqa
