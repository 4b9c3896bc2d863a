#include "helpers.hpp"

#include <algorithm>

#include "bioqa/tokenize.hpp"

namespace bioqa::testing {

std::vector<TokenSpan> brute_force_decode(const ScoreSet& scores,
                                          const Snippet& snippet,
                                          int snippet_index,
                                          const DecodingConfig& cfg) {
  const SpanProbabilities probs = span_probabilities(scores);
  struct Cand {
    int i, j;
    double p;
  };
  std::vector<Cand> cands;
  for (int i = 0; i < scores.n; ++i) {
    const Vector& row = probs.end_row(i);
    for (int j = i; j < scores.n; ++j)
      cands.push_back({i, j, probs.p_start[i] * row[j - i]});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.p != b.p) return a.p > b.p;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  if (static_cast<int>(cands.size()) > cfg.k_spans) cands.resize(cfg.k_spans);

  std::vector<TokenSpan> out;
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

ScoreSet random_score_set(int n, Rng& rng) {
  ScoreSet s;
  s.n = n;
  s.start_scores.resize(n);
  for (double& v : s.start_scores) v = rng.uniform(-3.0, 3.0);
  for (int i = 0; i < n; ++i) {
    s.selected_starts.push_back(i);
    Vector row(n - i);
    for (double& v : row) v = rng.uniform(-3.0, 3.0);
    s.end_scores[i] = std::move(row);
  }
  return s;
}

Snippet snippet_of_tokens(const std::string& id, int n, Rng& rng) {
  // small word pool so duplicate surfaces (and hence dedup) do occur
  static const char* pool[] = {"tok0", "tok1", "tok2", "tok3", "tok4"};
  std::string text;
  for (int i = 0; i < n; ++i) {
    if (i) text += ' ';
    text += pool[rng.below(5)];
  }
  Snippet s;
  s.id = id;
  s.text = text;
  s.tokens = tokenize(text);
  return s;
}

GradCheck finite_diff_check(const Question& question, ModelParams& params,
                            const ModelParams* base_params,
                            const BasePredictions* base_preds,
                            const EmbeddingResources& res, const LossConfig& cfg,
                            const std::vector<Vector>* masks, double eps) {
  ModelParams tape = zeros_like(params);
  question_loss_full(question, params, base_params, base_preds, res, cfg, masks,
                     &tape);

  auto loss_at = [&]() {
    return question_loss_full(question, params, base_params, base_preds, res,
                              cfg, masks, nullptr)
        .l_final;
  };

  GradCheck result;
  auto prefs = tensor_refs(params);
  const auto grefs = tensor_refs(tape);
  for (size_t t = 0; t < prefs.size(); ++t) {
    for (size_t i = 0; i < prefs[t].count; ++i) {
      const double saved = prefs[t].data[i];
      prefs[t].data[i] = saved + eps;
      const double up = loss_at();
      prefs[t].data[i] = saved - eps;
      const double down = loss_at();
      prefs[t].data[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = grefs[t].data[i];
      // the 1e-5 floor keeps roundoff in near-zero gradients from
      // dominating the ratio: difference quotients carry ~1e-16*|L|/eps
      // of noise, so those entries are held to ~1e-9 absolute instead
      const double rel = std::abs(analytic - numeric) /
                         std::max(std::abs(analytic) + std::abs(numeric), 1e-5);
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst_tensor = prefs[t].name;
      }
    }
  }
  return result;
}

}  // namespace bioqa::testing
