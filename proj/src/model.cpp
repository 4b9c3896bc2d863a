#include "bioqa/model.hpp"

#include <cmath>

#include "bioqa/errors.hpp"

namespace bioqa {

namespace {

// const_cast is contained here: the const overload below re-adds const.
std::vector<TensorRef> refs_impl(ModelParams& p) {
  std::vector<TensorRef> refs;
  auto mat = [&](const char* name, Matrix& m) {
    refs.push_back(TensorRef{name, m.data().data(), m.size(),
                             {m.rows(), m.cols()}});
  };
  auto vec = [&](const char* name, Vector& v) {
    refs.push_back(
        TensorRef{name, v.data(), v.size(), {static_cast<int>(v.size())}});
  };
  auto scalar = [&](const char* name, double& s) {
    refs.push_back(TensorRef{name, &s, 1, {1}});
  };

  mat("char_table", p.char_cnn.char_table);
  mat("char_filters", p.char_cnn.filters);
  vec("char_bias", p.char_cnn.bias);
  mat("projection", p.projection);
  vec("projection_bias", p.projection_bias);
  auto cell = [&](const char* prefix, GruCell& c) {
    const std::string pre(prefix);
    refs.push_back(TensorRef{pre + ".update", c.w_update.data().data(),
                             c.w_update.size(),
                             {c.w_update.rows(), c.w_update.cols()}});
    refs.push_back(TensorRef{pre + ".reset", c.w_reset.data().data(),
                             c.w_reset.size(),
                             {c.w_reset.rows(), c.w_reset.cols()}});
    refs.push_back(TensorRef{pre + ".cand", c.w_cand.data().data(),
                             c.w_cand.size(),
                             {c.w_cand.rows(), c.w_cand.cols()}});
    refs.push_back(TensorRef{pre + ".update_bias", c.b_update.data(),
                             c.b_update.size(),
                             {static_cast<int>(c.b_update.size())}});
    refs.push_back(TensorRef{pre + ".reset_bias", c.b_reset.data(),
                             c.b_reset.size(),
                             {static_cast<int>(c.b_reset.size())}});
    refs.push_back(TensorRef{pre + ".cand_bias", c.b_cand.data(),
                             c.b_cand.size(),
                             {static_cast<int>(c.b_cand.size())}});
  };
  cell("gru_fwd", p.fwd);
  cell("gru_bwd", p.bwd);
  vec("attention", p.attention);
  vec("start_head", p.start_head);
  scalar("start_head_bias", p.start_bias);
  vec("end_head", p.end_head);
  scalar("end_head_bias", p.end_bias);
  return refs;
}

}  // namespace

std::vector<TensorRef> tensor_refs(ModelParams& p) { return refs_impl(p); }

std::vector<TensorRef> tensor_refs(const ModelParams& p) {
  return refs_impl(const_cast<ModelParams&>(p));
}

ModelParams init_params(const EmbeddingConfig& emb, int hidden,
                        uint64_t seed) {
  if (hidden <= 0) throw ConfigMismatch("hidden size must be positive");
  ModelParams p;
  p.hidden = hidden;
  p.emb = emb;
  p.char_cnn = CharCnnParams(emb.char_dim, emb.char_width, emb.char_filters);

  const int d = emb.total_dim();
  const int x = p.gru_input_dim();
  p.projection = Matrix(d, hidden);
  p.projection_bias.assign(hidden, 0.0);
  p.fwd = GruCell(hidden, x);
  p.bwd = GruCell(hidden, x);
  p.attention.assign(hidden, 0.0);
  p.start_head.assign(3 * hidden, 0.0);
  p.end_head.assign(4 * hidden, 0.0);

  Rng rng(seed);
  p.char_cnn.randomize(rng);
  p.projection.randomize_uniform(rng, std::sqrt(6.0 / (d + hidden)));
  const double gru_scale = std::sqrt(6.0 / (hidden + x + hidden));
  for (GruCell* c : {&p.fwd, &p.bwd}) {
    c->w_update.randomize_uniform(rng, gru_scale);
    c->w_reset.randomize_uniform(rng, gru_scale);
    c->w_cand.randomize_uniform(rng, gru_scale);
  }
  const double head_scale = std::sqrt(3.0 / hidden);
  for (double& v : p.attention) v = rng.uniform(-head_scale, head_scale);
  for (double& v : p.start_head) v = rng.uniform(-head_scale, head_scale);
  for (double& v : p.end_head) v = rng.uniform(-head_scale, head_scale);
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z = p;
  for (TensorRef& t : tensor_refs(z))
    for (size_t i = 0; i < t.count; ++i) t.data[i] = 0.0;
  return z;
}

size_t param_count(const ModelParams& p) {
  size_t n = 0;
  for (const TensorRef& t : tensor_refs(p)) n += t.count;
  return n;
}

bool same_shape(const ModelParams& a, const ModelParams& b) {
  const auto ra = tensor_refs(a);
  const auto rb = tensor_refs(b);
  if (ra.size() != rb.size()) return false;
  for (size_t i = 0; i < ra.size(); ++i)
    if (ra[i].name != rb[i].name || ra[i].shape != rb[i].shape) return false;
  return true;
}

bool all_finite(const ModelParams& p) {
  for (const TensorRef& t : tensor_refs(p))
    for (size_t i = 0; i < t.count; ++i)
      if (!std::isfinite(t.data[i])) return false;
  return true;
}

}  // namespace bioqa
