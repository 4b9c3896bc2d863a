#pragma once

#include <optional>
#include <vector>

#include "bioqa/dataset.hpp"
#include "bioqa/loss.hpp"
#include "bioqa/metrics.hpp"
#include "bioqa/optimizer.hpp"
#include "bioqa/predict.hpp"

namespace bioqa {

// Inverted-dropout masks, one per requested tensor, each reused across all
// time steps of its sequence. Rate 0 yields all-ones masks.
std::vector<Vector> variational_masks(const std::vector<int>& sizes,
                                      double rate, uint64_t seed);

// Exactly alternating half-half stream: target examples drawn with
// replacement (upsampling), source examples cycled without replacement,
// reshuffled per cycle.
class MixedStream {
 public:
  struct Draw {
    bool from_target;
    int index;
  };

  MixedStream(int n_target, int n_source, uint64_t seed);
  Draw next();

 private:
  void reshuffle_source();

  int n_target_;
  int n_source_;
  Rng rng_;
  std::vector<int> source_order_;
  size_t source_pos_ = 0;
  bool target_turn_ = true;
};

// Frozen base-model predictions for one question, reused across steps.
struct BasePredictions {
  std::vector<ScoreSet> scores;           // per snippet, row at argmax start
  std::vector<SpanProbabilities> probs;
};

BasePredictions base_predictions(const Question& question,
                                 const ModelParams& base,
                                 const EmbeddingResources& res);

struct QuestionLoss {
  double l_original = 0.0;
  double l_fc = 0.0;
};

// Loss and gradients of (l_original + c_fc * l_fc) for one question.
// masks layout: [question, snippet 0, snippet 1, ...]; null = identity.
// grads may be null for loss-only evaluation.
QuestionLoss question_grads(const Question& question, const ModelParams& params,
                            const BasePredictions* base_preds,
                            const EmbeddingResources& res, const LossConfig& cfg,
                            const std::vector<Vector>* masks,
                            ModelParams* grads);

// Full per-question objective including the L2-to-base term; the
// finite-difference harness drives this.
LossBreakdown question_loss_full(const Question& question,
                                 const ModelParams& params,
                                 const ModelParams* base_params,
                                 const BasePredictions* base_preds,
                                 const EmbeddingResources& res,
                                 const LossConfig& cfg,
                                 const std::vector<Vector>* masks,
                                 ModelParams* grads);

struct TrainLogEntry {
  int step = 0;
  double l_original = 0.0;
  double l_fc = 0.0;
  double l_l2 = 0.0;
  double l_final = 0.0;
  double lr = 0.0;
  std::optional<double> dev_metric;
};

struct TrainOptions {
  LossConfig loss;
  TrainSchedule schedule;
  DecodingConfig decode;
  uint64_t seed = 1;
  int threads = 1;  // dev-evaluation parallelism only
};

struct TrainResult {
  ModelParams params;
  std::vector<TrainLogEntry> log;
  double final_dev_metric = 0.0;
};

// Deterministic mini-batch training: per-example dropout masks, min-loss
// span supervision, optional forgetting-cost/L2 regularizers against a
// frozen base, checkpoint-driven LR halving. Gradients reduce in fixed
// example order so a seed fully determines the run.
TrainResult train(const std::vector<Question>& train_questions,
                  const std::vector<Question>& dev_questions,
                  const ModelParams& initial_params,
                  const ModelParams* base_params, const EmbeddingResources& res,
                  const TrainOptions& opts,
                  const std::vector<Question>* mix_source = nullptr);

void write_train_log_csv(const std::vector<TrainLogEntry>& log,
                         const std::string& path);

struct CrossValidationResult {
  std::vector<EvalReport> fold_reports;
  std::vector<double> fold_thresholds;
  EvalReport mean;
};

// k-fold CV: train on the remainder (dev slice held out from it for LR
// halving and threshold tuning), evaluate on the fold, average reports.
CrossValidationResult cross_validate(const std::vector<Question>& questions,
                                     int k, const EmbeddingConfig& emb,
                                     int hidden, const EmbeddingResources& res,
                                     const TrainOptions& opts);

}  // namespace bioqa
