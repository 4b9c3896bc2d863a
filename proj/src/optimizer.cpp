#include "bioqa/optimizer.hpp"

#include <cmath>

#include "bioqa/errors.hpp"

namespace bioqa {

OptimizerState OptimizerState::create(const ModelParams& params, double lr_) {
  OptimizerState st;
  st.m = zeros_like(params);
  st.v = zeros_like(params);
  st.lr = lr_;
  return st;
}

void adam_step(ModelParams& params, const ModelParams& grads,
               OptimizerState& state) {
  if (!same_shape(params, grads))
    throw ShapeMismatch("adam_step: gradient shape mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  auto p = tensor_refs(params);
  const auto g = tensor_refs(grads);
  auto m = tensor_refs(state.m);
  auto v = tensor_refs(state.v);
  for (size_t t = 0; t < p.size(); ++t) {
    for (size_t i = 0; i < p[t].count; ++i) {
      const double gi = g[t].data[i];
      if (!std::isfinite(gi))
        throw NonFiniteGradient("adam_step: non-finite gradient in " +
                                g[t].name);
      double& mi = m[t].data[i];
      double& vi = v[t].data[i];
      mi = state.beta1 * mi + (1.0 - state.beta1) * gi;
      vi = state.beta2 * vi + (1.0 - state.beta2) * gi * gi;
      const double m_hat = mi / bc1;
      const double v_hat = vi / bc2;
      p[t].data[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

TrainSchedule TrainSchedule::pretrain_defaults() {
  TrainSchedule s;
  s.phase = Phase::pretrain;
  s.initial_lr = 1e-3;
  s.lr = s.initial_lr;
  return s;
}

TrainSchedule TrainSchedule::finetune_defaults() {
  TrainSchedule s;
  s.phase = Phase::finetune;
  s.initial_lr = 1e-4;
  s.lr = s.initial_lr;
  return s;
}

void maybe_halve_lr(TrainSchedule& schedule, double dev_metric) {
  if (!schedule.metric_history.empty()) {
    const double prev = schedule.metric_history.back();
    const bool worse = schedule.higher_is_better() ? dev_metric < prev
                                                   : dev_metric > prev;
    if (worse) schedule.lr *= 0.5;
  }
  schedule.metric_history.push_back(dev_metric);
}

}  // namespace bioqa
