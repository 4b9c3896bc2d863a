#pragma once

#include <string>
#include <vector>

#include "bioqa/encoder.hpp"
#include "bioqa/predict.hpp"

namespace bioqa {

struct EnsembleSpec {
  std::vector<std::string> checkpoint_paths;
  std::vector<double> weights;  // empty = uniform; must sum to 1 otherwise
};

EnsembleSpec load_ensemble_spec(const std::string& path);

// Elementwise mean of raw start/end scores, taken before the sigmoid and
// softmax transforms. All sets must cover the same context with identical
// selected starts. Empty weights means the arithmetic mean.
ScoreSet average_scores(const std::vector<ScoreSet>& sets,
                        const std::vector<double>& weights = {});

struct Ensemble {
  std::vector<ModelParams> members;
  std::vector<double> weights;

  static Ensemble load(const EnsembleSpec& spec);
  std::vector<const ModelParams*> member_ptrs() const;
};

// Same decoding path as single-model prediction; only the score averaging
// differs.
QuestionPrediction ensemble_predict(const Ensemble& ensemble,
                                    const Question& question,
                                    const EmbeddingResources& res,
                                    const DecodingConfig& cfg);

}  // namespace bioqa
