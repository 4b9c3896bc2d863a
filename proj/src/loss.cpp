#include "bioqa/loss.hpp"

#include <algorithm>
#include <cmath>

#include "bioqa/errors.hpp"

namespace bioqa {

namespace {

double log_sum_exp(const Vector& row) {
  double mx = -1e300;
  for (double v : row) mx = std::max(mx, v);
  double s = 0.0;
  for (double v : row) s += std::exp(v - mx);
  return mx + std::log(s);
}

double clamped_log(double p) { return std::log(std::max(p, 1e-300)); }

int argmax_start(const Vector& p_start) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(p_start.size()); ++i)
    if (p_start[i] > p_start[best]) best = i;
  return best;
}

}  // namespace

SpanLossResult span_loss(const std::vector<ScoreSet>& snippet_scores,
                         const std::vector<AnswerGroup>& gold) {
  SpanLossResult res;
  res.grads.resize(snippet_scores.size());
  long long n_total = 0;
  for (size_t s = 0; s < snippet_scores.size(); ++s) {
    res.grads[s].d_start.assign(snippet_scores[s].n, 0.0);
    n_total += snippet_scores[s].n;
  }
  if (n_total == 0) throw ShapeMismatch("span_loss: no context tokens");

  // Min-loss candidate per group; candidate loss uses the numerically
  // stable identities -log sigmoid(y) = softplus(-y) and
  // -log softmax_j = logsumexp(row) - y_j.
  struct Pick {
    SpanRef span;
    double start_score;
    const Vector* row;
    double lse;
  };
  std::vector<Pick> picks;
  for (const AnswerGroup& g : gold) {
    if (g.spans.empty()) continue;
    bool have = false;
    Pick best{};
    double best_loss = 0.0;
    for (const SpanRef& sp : g.spans) {
      if (sp.snippet_index < 0 ||
          sp.snippet_index >= static_cast<int>(snippet_scores.size()))
        throw ShapeMismatch("span_loss: span references missing snippet");
      const ScoreSet& sc = snippet_scores[sp.snippet_index];
      if (sp.token_start < 0 || sp.token_end >= sc.n ||
          sp.token_end < sp.token_start)
        throw ShapeMismatch("span_loss: span out of range");
      auto it = sc.end_scores.find(sp.token_start);
      if (it == sc.end_scores.end())
        throw ShapeMismatch("span_loss: no end scores for gold start");
      const Vector& row = it->second;
      const double lse = log_sum_exp(row);
      const double cand = softplus(-sc.start_scores[sp.token_start]) +
                          (lse - row[sp.token_end - sp.token_start]);
      if (!have || cand < best_loss) {
        have = true;
        best_loss = cand;
        best = Pick{sp, sc.start_scores[sp.token_start], &row, lse};
      }
    }
    res.loss += best_loss;
    res.selected_spans.push_back(best.span);
    picks.push_back(best);
  }
  if (picks.empty())
    throw NoExtractableAnswer("span_loss: no answer group has a span");

  // Gradients of the selected span terms.
  for (const Pick& p : picks) {
    ScoreGrads& g = res.grads[p.span.snippet_index];
    const int i = p.span.token_start;
    g.d_start[i] += sigmoid(p.start_score) - 1.0;
    Vector& d_row = g.d_end[i];
    if (d_row.empty()) d_row.assign(p.row->size(), 0.0);
    for (size_t j = 0; j < p.row->size(); ++j)
      d_row[j] += std::exp((*p.row)[j] - p.lse);
    d_row[p.span.token_end - i] -= 1.0;
  }

  // Multi-hot start supervision over every context token.
  std::vector<std::vector<char>> positive(snippet_scores.size());
  for (size_t s = 0; s < snippet_scores.size(); ++s)
    positive[s].assign(snippet_scores[s].n, 0);
  for (const Pick& p : picks)
    positive[p.span.snippet_index][p.span.token_start] = 1;

  double bce = 0.0;
  for (size_t s = 0; s < snippet_scores.size(); ++s) {
    const ScoreSet& sc = snippet_scores[s];
    for (int t = 0; t < sc.n; ++t) {
      const double y = sc.start_scores[t];
      const bool pos = positive[s][t];
      bce += pos ? softplus(-y) : softplus(y);
      res.grads[s].d_start[t] +=
          (sigmoid(y) - (pos ? 1.0 : 0.0)) / static_cast<double>(n_total);
    }
  }
  res.loss += bce / static_cast<double>(n_total);
  return res;
}

double forgetting_cost(const SpanProbabilities& current,
                       const SpanProbabilities& base) {
  if (current.n != base.n)
    throw ShapeMismatch("forgetting_cost: context length mismatch");
  const int n = current.n;
  double start_term = 0.0;
  for (int t = 0; t < n; ++t) {
    const double target = base.p_start[t];
    const double p = current.p_start[t];
    start_term += -target * clamped_log(p) - (1.0 - target) * clamped_log(1.0 - p);
  }
  start_term /= n;

  const int i = argmax_start(base.p_start);
  const Vector& base_row = base.end_row(i);
  const Vector& cur_row = current.end_row(i);
  if (base_row.size() != cur_row.size())
    throw ShapeMismatch("forgetting_cost: end row length mismatch");
  double end_term = 0.0;
  for (size_t j = 0; j < base_row.size(); ++j)
    end_term += -base_row[j] * clamped_log(cur_row[j]);
  return start_term + end_term;
}

ForgettingResult forgetting_cost_with_grads(
    const std::vector<ScoreSet>& current_scores,
    const std::vector<SpanProbabilities>& base_probs) {
  if (current_scores.size() != base_probs.size())
    throw ShapeMismatch("forgetting_cost: snippet count mismatch");
  const size_t n_snippets = current_scores.size();
  ForgettingResult res;
  res.grads.resize(n_snippets);

  long long n_total = 0;
  for (const ScoreSet& sc : current_scores) n_total += sc.n;
  if (n_total == 0) throw ShapeMismatch("forgetting_cost: no tokens");

  double start_term = 0.0;
  for (size_t s = 0; s < n_snippets; ++s) {
    const ScoreSet& sc = current_scores[s];
    const SpanProbabilities& bp = base_probs[s];
    if (bp.n != sc.n)
      throw ShapeMismatch("forgetting_cost: context length mismatch");
    res.grads[s].d_start.assign(sc.n, 0.0);
    if (sc.n == 0) continue;
    for (int t = 0; t < sc.n; ++t) {
      const double y = sc.start_scores[t];
      const double target = bp.p_start[t];
      // -target*log(sigmoid(y)) - (1-target)*log(1-sigmoid(y))
      start_term += target * softplus(-y) + (1.0 - target) * softplus(y);
      res.grads[s].d_start[t] =
          (sigmoid(y) - target) / static_cast<double>(n_total);
    }
  }
  start_term /= static_cast<double>(n_total);

  size_t n_nonempty = 0;
  for (const ScoreSet& sc : current_scores)
    if (sc.n > 0) ++n_nonempty;
  double end_term = 0.0;
  for (size_t s = 0; s < n_snippets; ++s) {
    const ScoreSet& sc = current_scores[s];
    const SpanProbabilities& bp = base_probs[s];
    if (sc.n == 0) continue;
    const int i = argmax_start(bp.p_start);
    const Vector& base_row = bp.end_row(i);
    auto it = sc.end_scores.find(i);
    if (it == sc.end_scores.end())
      throw ShapeMismatch("forgetting_cost: missing current end row");
    const Vector& row = it->second;
    if (row.size() != base_row.size())
      throw ShapeMismatch("forgetting_cost: end row length mismatch");
    const double lse = log_sum_exp(row);
    Vector& d_row = res.grads[s].d_end[i];
    d_row.assign(row.size(), 0.0);
    for (size_t j = 0; j < row.size(); ++j) {
      end_term += base_row[j] * (lse - row[j]);
      d_row[j] = (std::exp(row[j] - lse) - base_row[j]) /
                 static_cast<double>(n_nonempty);
    }
  }
  end_term /= static_cast<double>(n_nonempty);

  res.loss = start_term + end_term;
  return res;
}

double l2_param_loss(const ModelParams& params, const ModelParams& base) {
  if (!same_shape(params, base))
    throw ShapeMismatch("l2_param_loss: parameter shape mismatch");
  const auto a = tensor_refs(params);
  const auto b = tensor_refs(base);
  double acc = 0.0;
  for (size_t t = 0; t < a.size(); ++t)
    for (size_t i = 0; i < a[t].count; ++i) {
      const double d = a[t].data[i] - b[t].data[i];
      acc += d * d;
    }
  return 0.5 * acc;
}

LossBreakdown total_loss(double l_original, double l_fc, double l_l2,
                         const LossConfig& cfg) {
  LossBreakdown b;
  b.l_original = l_original;
  b.l_fc = l_fc;
  b.l_l2 = l_l2;
  b.l_final = l_original + cfg.c_fc * l_fc + cfg.c_l2 * l_l2;
  return b;
}

}  // namespace bioqa
