#pragma once

#include <string>
#include <vector>

namespace bioqa {

// One token of a snippet or question. Offsets are code point indices into
// the original text; char_end is exclusive.
struct Token {
  std::string text;
  int char_begin = 0;
  int char_end = 0;

  bool operator==(const Token&) const = default;
};

// Whitespace split followed by peeling leading/trailing punctuation
// (.,;:!?()[]{}"'/) into single-character tokens. Deterministic, total.
std::vector<Token> tokenize(const std::string& text);

// Substring of `text` covering code points [cp_begin, cp_end).
std::string codepoint_substr(const std::string& text, int cp_begin,
                             int cp_end);

}  // namespace bioqa
