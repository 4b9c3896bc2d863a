#pragma once

#include <map>
#include <string>
#include <vector>

#include "bioqa/dataset.hpp"
#include "bioqa/encoder.hpp"

namespace bioqa {

// Start/end probabilities for one snippet: sigmoid over start scores,
// softmax over each selected start's end-score row. span_prob(i, j) is the
// product of its two factors.
struct SpanProbabilities {
  int n = 0;
  Vector p_start;
  std::map<int, Vector> p_end;  // start -> row over j in [start, n)

  double span_prob(int i, int j) const;
  const Vector& end_row(int i) const;
};

Vector start_probs(const Vector& start_scores);
// Numerically stable softmax of one end-score row.
Vector end_probs(const Vector& end_score_row);
SpanProbabilities span_probabilities(const ScoreSet& scores);

struct DecodingConfig {
  int k_starts = 20;
  int k_spans = 20;
  int factoid_top = 5;
  double list_threshold = 0.5;
};

// A candidate answer span with its provenance.
struct TokenSpan {
  int snippet_index = 0;
  std::string snippet_id;
  int token_start = 0;
  int token_end = 0;  // inclusive
  int char_begin = 0;
  int char_end = 0;
  std::string text;
  double prob = 0.0;
};

// Ranks all spans over the selected starts by span probability (ties:
// smaller start, then smaller end) and keeps the top cfg.k_spans.
std::vector<TokenSpan> decode_spans(const ScoreSet& scores,
                                    const Snippet& snippet, int snippet_index,
                                    const DecodingConfig& cfg);

// Keeps only the highest-probability span per normalized surface string
// (lowercase, whitespace collapsed); input order otherwise preserved.
std::vector<TokenSpan> dedup(const std::vector<TokenSpan>& ranked);

// Concatenates per-snippet ranked lists, re-sorts by probability (ties:
// snippet order, then start, then end) and dedups across snippets.
std::vector<TokenSpan> merge_snippets(
    const std::vector<std::vector<TokenSpan>>& per_snippet);

// First min(factoid_top, size) surface strings.
std::vector<std::string> factoid_answers(const std::vector<TokenSpan>& merged,
                                         const DecodingConfig& cfg);

// All spans with prob >= list_threshold; falls back to the single top span
// when the cut leaves nothing.
std::vector<std::string> list_answers(const std::vector<TokenSpan>& merged,
                                      const DecodingConfig& cfg);

}  // namespace bioqa
