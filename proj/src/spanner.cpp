#include "bioqa/spanner.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "bioqa/errors.hpp"
#include "bioqa/text.hpp"

namespace bioqa {

double SpanProbabilities::span_prob(int i, int j) const {
  return p_start[i] * end_row(i)[j - i];
}

const Vector& SpanProbabilities::end_row(int i) const {
  auto it = p_end.find(i);
  if (it == p_end.end())
    throw ShapeMismatch("no end probabilities for start " + std::to_string(i));
  return it->second;
}

Vector start_probs(const Vector& start_scores) {
  Vector p(start_scores.size());
  for (size_t i = 0; i < p.size(); ++i) p[i] = sigmoid(start_scores[i]);
  return p;
}

Vector end_probs(const Vector& end_score_row) {
  Vector p(end_score_row.size());
  double mx = -1e300;
  for (double v : end_score_row) mx = std::max(mx, v);
  double z = 0.0;
  for (size_t j = 0; j < p.size(); ++j) {
    p[j] = std::exp(end_score_row[j] - mx);
    z += p[j];
  }
  for (double& v : p) v /= z;
  return p;
}

SpanProbabilities span_probabilities(const ScoreSet& scores) {
  SpanProbabilities probs;
  probs.n = scores.n;
  probs.p_start = start_probs(scores.start_scores);
  for (const auto& [i, row] : scores.end_scores)
    probs.p_end[i] = end_probs(row);
  return probs;
}

std::vector<TokenSpan> decode_spans(const ScoreSet& scores,
                                    const Snippet& snippet, int snippet_index,
                                    const DecodingConfig& cfg) {
  const SpanProbabilities probs = span_probabilities(scores);
  const int n = scores.n;

  // Top k_starts among the available rows, highest start probability first
  // (ties to the smaller index).
  std::vector<int> starts = scores.selected_starts;
  std::stable_sort(starts.begin(), starts.end(), [&](int a, int b) {
    return probs.p_start[a] > probs.p_start[b];
  });
  if (static_cast<int>(starts.size()) > cfg.k_starts)
    starts.resize(cfg.k_starts);

  struct Cand {
    int i, j;
    double p;
  };
  std::vector<Cand> cands;
  for (int i : starts) {
    const Vector& row = probs.end_row(i);
    for (int j = i; j < n; ++j)
      cands.push_back(Cand{i, j, probs.p_start[i] * row[j - i]});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.p != b.p) return a.p > b.p;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  if (static_cast<int>(cands.size()) > cfg.k_spans) cands.resize(cfg.k_spans);

  std::vector<TokenSpan> out;
  out.reserve(cands.size());
  for (const Cand& c : cands) {
    TokenSpan s;
    s.snippet_index = snippet_index;
    s.snippet_id = snippet.id;
    s.token_start = c.i;
    s.token_end = c.j;
    s.char_begin = snippet.tokens[c.i].char_begin;
    s.char_end = snippet.tokens[c.j].char_end;
    s.text = codepoint_substr(snippet.text, s.char_begin, s.char_end);
    s.prob = c.p;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<TokenSpan> dedup(const std::vector<TokenSpan>& ranked) {
  std::vector<TokenSpan> out;
  std::unordered_set<std::string> seen;
  for (const TokenSpan& s : ranked)
    if (seen.insert(normalize_answer(s.text)).second) out.push_back(s);
  return out;
}

std::vector<TokenSpan> merge_snippets(
    const std::vector<std::vector<TokenSpan>>& per_snippet) {
  std::vector<TokenSpan> all;
  for (const auto& spans : per_snippet)
    all.insert(all.end(), spans.begin(), spans.end());
  std::sort(all.begin(), all.end(), [](const TokenSpan& a, const TokenSpan& b) {
    if (a.prob != b.prob) return a.prob > b.prob;
    if (a.snippet_index != b.snippet_index)
      return a.snippet_index < b.snippet_index;
    if (a.token_start != b.token_start) return a.token_start < b.token_start;
    return a.token_end < b.token_end;
  });
  return dedup(all);
}

std::vector<std::string> factoid_answers(const std::vector<TokenSpan>& merged,
                                         const DecodingConfig& cfg) {
  std::vector<std::string> out;
  const int k = std::min<int>(cfg.factoid_top, static_cast<int>(merged.size()));
  out.reserve(k);
  for (int i = 0; i < k; ++i) out.push_back(merged[i].text);
  return out;
}

std::vector<std::string> list_answers(const std::vector<TokenSpan>& merged,
                                      const DecodingConfig& cfg) {
  std::vector<std::string> out;
  for (const TokenSpan& s : merged)
    if (s.prob >= cfg.list_threshold) out.push_back(s.text);
  if (out.empty() && !merged.empty()) out.push_back(merged[0].text);
  return out;
}

}  // namespace bioqa
