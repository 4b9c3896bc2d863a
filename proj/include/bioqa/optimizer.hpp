#pragma once

#include <vector>

#include "bioqa/model.hpp"

namespace bioqa {

// ADAM with bias correction.
struct OptimizerState {
  ModelParams m;  // first moments
  ModelParams v;  // second moments
  long long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static OptimizerState create(const ModelParams& params, double lr);
};

// In-place update. Throws NonFiniteGradient on NaN/inf gradients.
void adam_step(ModelParams& params, const ModelParams& grads,
               OptimizerState& state);

enum class Phase { pretrain, finetune };

struct TrainSchedule {
  Phase phase = Phase::pretrain;
  double initial_lr = 1e-3;  // finetune default: 1e-4
  double lr = 1e-3;
  int checkpoint_every = 50;
  int batch_size = 8;
  int max_steps = 500;
  std::vector<double> metric_history;

  // Pretraining tracks dev loss (lower is better); fine-tuning tracks
  // dev MRR / list F1 (higher is better).
  bool higher_is_better() const { return phase == Phase::finetune; }

  static TrainSchedule pretrain_defaults();
  static TrainSchedule finetune_defaults();
};

// Halves the learning rate whenever the dev metric got worse than the
// previous checkpoint's; always appends to the history.
void maybe_halve_lr(TrainSchedule& schedule, double dev_metric);

}  // namespace bioqa
