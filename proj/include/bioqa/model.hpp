#pragma once

#include <string>
#include <vector>

#include "bioqa/embedding.hpp"
#include "bioqa/matrix.hpp"

namespace bioqa {

// Gated recurrent cell. Weight matrices act on the concatenation
// [previous state ; input], so each is [(hidden + input_dim) x hidden].
struct GruCell {
  Matrix w_update, w_reset, w_cand;
  Vector b_update, b_reset, b_cand;

  GruCell() = default;
  GruCell(int hidden, int input_dim)
      : w_update(hidden + input_dim, hidden),
        w_reset(hidden + input_dim, hidden),
        w_cand(hidden + input_dim, hidden),
        b_update(hidden, 0.0), b_reset(hidden, 0.0), b_cand(hidden, 0.0) {}
};

// Every trainable tensor of the model. Pretrained word vectors and entity
// bits stay outside: they are frozen inputs, not parameters.
struct ModelParams {
  int hidden = 0;
  EmbeddingConfig emb;

  CharCnnParams char_cnn;
  Matrix projection;       // [total_dim x hidden]
  Vector projection_bias;  // [hidden]
  GruCell fwd, bwd;        // shared across question and context
  Vector attention;        // [hidden]
  Vector start_head;       // [3*hidden]
  Vector end_head;         // [4*hidden]
  double start_bias = 0.0;
  double end_bias = 0.0;

  // GRU input width: projected token plus the two feature columns
  // (word-in-question for context, constants for the question).
  int gru_input_dim() const { return hidden + 2; }
};

// Flat view over a parameter set; shared by the optimizer, the L2-to-base
// penalty, checkpointing and the finite-difference harness.
struct TensorRef {
  std::string name;
  double* data;
  size_t count;
  std::vector<int> shape;
};

std::vector<TensorRef> tensor_refs(ModelParams& p);
std::vector<TensorRef> tensor_refs(const ModelParams& p);

ModelParams init_params(const EmbeddingConfig& emb, int hidden, uint64_t seed);
ModelParams zeros_like(const ModelParams& p);

size_t param_count(const ModelParams& p);
bool same_shape(const ModelParams& a, const ModelParams& b);
bool all_finite(const ModelParams& p);

}  // namespace bioqa
