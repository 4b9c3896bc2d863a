#include "bioqa/tokenize.hpp"

#include "bioqa/text.hpp"

namespace bioqa {

namespace {

bool is_peel_punct(char32_t c) {
  switch (c) {
    case U'.':
    case U',':
    case U';':
    case U':':
    case U'!':
    case U'?':
    case U'(':
    case U')':
    case U'[':
    case U']':
    case U'{':
    case U'}':
    case U'"':
    case U'\'':
    case U'/':
      return true;
    default:
      return false;
  }
}

}  // namespace

std::vector<Token> tokenize(const std::string& text) {
  const std::vector<char32_t> cps = utf8_decode(text);
  std::vector<Token> out;
  const int n = static_cast<int>(cps.size());

  auto emit = [&](int b, int e) {
    out.push_back(
        Token{utf8_encode(cps.data() + b, cps.data() + e), b, e});
  };

  int i = 0;
  while (i < n) {
    while (i < n && is_ascii_space(cps[i])) ++i;
    if (i >= n) break;
    int j = i;
    while (j < n && !is_ascii_space(cps[j])) ++j;

    // Peel punctuation off both ends of the chunk [i, j).
    int s = i;
    int e = j;
    while (s < e && is_peel_punct(cps[s])) {
      emit(s, s + 1);
      ++s;
    }
    int trail_begin = e;
    while (trail_begin > s && is_peel_punct(cps[trail_begin - 1]))
      --trail_begin;
    if (trail_begin > s) emit(s, trail_begin);
    for (int k = trail_begin; k < e; ++k) emit(k, k + 1);

    i = j;
  }
  return out;
}

std::string codepoint_substr(const std::string& text, int cp_begin,
                             int cp_end) {
  const std::vector<char32_t> cps = utf8_decode(text);
  if (cp_begin < 0) cp_begin = 0;
  if (cp_end > static_cast<int>(cps.size()))
    cp_end = static_cast<int>(cps.size());
  if (cp_begin >= cp_end) return {};
  return utf8_encode(cps.data() + cp_begin, cps.data() + cp_end);
}

}  // namespace bioqa
