#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "bioqa/dataset.hpp"
#include "bioqa/rng.hpp"
#include "bioqa/spanner.hpp"
#include "bioqa/trainer.hpp"

namespace bioqa::testing {

inline std::string fixture_path(const std::string& name) {
#ifdef BIOQA_FIXTURE_DIR
  return std::string(BIOQA_FIXTURE_DIR) + "/" + name;
#else
  return "tests/fixtures/" + name;
#endif
}

// Exhaustive ranking over every (i, j), i <= j, for contexts where all end
// rows are available. The reference the decoder is checked against.
std::vector<TokenSpan> brute_force_decode(const ScoreSet& scores,
                                          const Snippet& snippet,
                                          int snippet_index,
                                          const DecodingConfig& cfg);

// Random score set with end rows for every start.
ScoreSet random_score_set(int n, Rng& rng);
Snippet snippet_of_tokens(const std::string& id, int n, Rng& rng);

struct GradCheck {
  double max_rel_err = 0.0;
  std::string worst_tensor;
};

// Central finite differences of the full per-question objective against
// the analytic tape.
GradCheck finite_diff_check(const Question& question, ModelParams& params,
                            const ModelParams* base_params,
                            const BasePredictions* base_preds,
                            const EmbeddingResources& res, const LossConfig& cfg,
                            const std::vector<Vector>* masks,
                            double eps = 1e-4);

}  // namespace bioqa::testing
