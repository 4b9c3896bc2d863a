#pragma once

#include <map>
#include <vector>

#include "bioqa/dataset.hpp"
#include "bioqa/encoder.hpp"
#include "bioqa/spanner.hpp"

namespace bioqa {

struct LossConfig {
  double c_fc = 0.0;
  double c_l2 = 0.0;
  double dropout_rate = 0.5;
};

struct LossBreakdown {
  double l_original = 0.0;
  double l_fc = 0.0;
  double l_l2 = 0.0;
  double l_final = 0.0;
};

// Gradients w.r.t. one snippet's raw scores.
struct ScoreGrads {
  Vector d_start;
  std::map<int, Vector> d_end;
};

struct SpanLossResult {
  double loss = 0.0;
  std::vector<ScoreGrads> grads;       // one per snippet
  std::vector<SpanRef> selected_spans; // the min-loss pick per answer group
};

// Cross-entropy over the gold spans of one question. Per answer group the
// candidate with the lowest -log p_start - log p_end wins (synonyms and
// repeated occurrences train only their cheapest span). On top, a binary
// cross-entropy over start positions with the selected starts as the
// multi-hot target, averaged over all context tokens of the question.
// Groups without spans are skipped; throws NoExtractableAnswer if none of
// the groups has a span.
SpanLossResult span_loss(const std::vector<ScoreSet>& snippet_scores,
                         const std::vector<AnswerGroup>& gold);

// Divergence of current predictions from a frozen base model on identical
// inputs: mean binary cross-entropy from base start probabilities to
// current ones, plus categorical cross-entropy of the end distribution at
// the base model's argmax start (averaged over snippets).
double forgetting_cost(const SpanProbabilities& current,
                       const SpanProbabilities& base);

struct ForgettingResult {
  double loss = 0.0;
  std::vector<ScoreGrads> grads;  // w.r.t. current scores, unit coefficient
};

ForgettingResult forgetting_cost_with_grads(
    const std::vector<ScoreSet>& current_scores,
    const std::vector<SpanProbabilities>& base_probs);

// 0.5 * sum of squared elementwise deviations over all trainable tensors.
double l2_param_loss(const ModelParams& params, const ModelParams& base);

// Exact composition l_final = l_original + c_fc*l_fc + c_l2*l_l2.
LossBreakdown total_loss(double l_original, double l_fc, double l_l2,
                         const LossConfig& cfg);

}  // namespace bioqa
