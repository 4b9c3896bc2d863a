#pragma once

#include <map>
#include <vector>

#include "bioqa/embedding.hpp"
#include "bioqa/model.hpp"

namespace bioqa {

// Raw model outputs for one snippet. End-score rows exist exactly for
// selected_starts; the row for start i covers j in [i, n) and has length
// n - i (0-based indices throughout).
struct ScoreSet {
  int n = 0;
  Vector start_scores;
  std::vector<int> selected_starts;
  std::map<int, Vector> end_scores;
};

// Per-step recurrent state and gates, stored in token order.
struct GruSeqCache {
  Matrix h, z, r, g;  // each [T x hidden]
};

// Everything the backward pass needs from one forward call.
struct Activations {
  int m = 0;      // question length
  int n = 0;      // context length
  int hidden = 0;
  int x_dim = 0;  // GRU input width

  Matrix q_emb, c_emb;    // embedded inputs as given
  Matrix q_x, c_x;        // GRU inputs [T x x_dim]
  Vector mask_q, mask_c;  // dropout masks actually applied (size hidden)
  GruSeqCache q_fwd, q_bwd, c_fwd, c_bwd;
  Matrix q_states, c_states;  // direction sums, [m x hidden], [n x hidden]
  Vector attn_weights;        // [m]
  Vector q_summary;           // [hidden]
};

struct ForwardOptions {
  // Variational dropout masks (size hidden); null means identity.
  const Vector* mask_q = nullptr;
  const Vector* mask_c = nullptr;
  // Starts to compute end rows for. Empty: the top_k_starts highest start
  // scores (ties to the smaller index).
  std::vector<int> requested_starts;
  int top_k_starts = 20;
};

// Word-in-question features, [n x 2]: binary token match and the max
// cosine similarity against question-token vectors, clamped to [0, 1].
// Vectors are the concatenated frozen lookups from the given tables.
Matrix wiq_features(const std::vector<Token>& question_tokens,
                    const std::vector<Token>& context_tokens,
                    const WordVectorTable* open_table,
                    const WordVectorTable* domain_table);

// Single bidirectional gated recurrent layer over question and context
// (shared weights), attention summary of the question, and concat heads
// producing start scores and per-start end scores.
ScoreSet forward(const Matrix& q_emb, const Matrix& c_emb, const Matrix& wiq,
                 const ModelParams& params, const ForwardOptions& opts,
                 Activations* acts = nullptr);

// Exact reverse-mode gradients for one forward call. d_end_scores rows must
// match acts' selected rows; missing rows mean zero gradient. Gradients
// accumulate into `grads` (shaped like the params); d_q_emb / d_c_emb
// receive gradients w.r.t. the embedded inputs so the caller can continue
// into the char-CNN.
void backward(const Vector& d_start_scores,
              const std::map<int, Vector>& d_end_scores,
              const Activations& acts, const ModelParams& params,
              ModelParams& grads, Matrix* d_q_emb = nullptr,
              Matrix* d_c_emb = nullptr);

}  // namespace bioqa
