#include "bioqa/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bioqa/errors.hpp"
#include "bioqa/text.hpp"

namespace bioqa {

namespace {

double cosine(const Vector& a, const Vector& b) {
  double na = 0.0, nb = 0.0, d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    na += a[i] * a[i];
    nb += b[i] * b[i];
    d += a[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return d / (std::sqrt(na) * std::sqrt(nb));
}

Vector concat_lookup(const std::string& word, const WordVectorTable* open_table,
                     const WordVectorTable* domain_table) {
  Vector v;
  if (open_table) {
    const Vector& a = open_table->lookup(word);
    v.insert(v.end(), a.begin(), a.end());
  }
  if (domain_table) {
    const Vector& b = domain_table->lookup(word);
    v.insert(v.end(), b.begin(), b.end());
  }
  return v;
}

void run_gru(const GruCell& cell, const Matrix& inputs, bool reverse,
             int hidden, GruSeqCache& cache) {
  const int T = inputs.rows();
  const int x_dim = inputs.cols();
  cache.h = Matrix(T, hidden);
  cache.z = Matrix(T, hidden);
  cache.r = Matrix(T, hidden);
  cache.g = Matrix(T, hidden);

  Vector h_prev(hidden, 0.0);
  Vector cat(hidden + x_dim, 0.0);
  for (int step = 0; step < T; ++step) {
    const int t = reverse ? T - 1 - step : step;
    std::copy(h_prev.begin(), h_prev.end(), cat.begin());
    const double* x = inputs.row(t);
    std::copy(x, x + x_dim, cat.begin() + hidden);

    double* z = cache.z.row(t);
    double* r = cache.r.row(t);
    double* g = cache.g.row(t);
    double* h = cache.h.row(t);
    for (int c = 0; c < hidden; ++c) {
      double az = cell.b_update[c];
      double ar = cell.b_reset[c];
      for (int u = 0; u < hidden + x_dim; ++u) {
        az += cat[u] * cell.w_update(u, c);
        ar += cat[u] * cell.w_reset(u, c);
      }
      z[c] = sigmoid(az);
      r[c] = sigmoid(ar);
    }
    // candidate uses the reset-gated previous state
    for (int c = 0; c < hidden; ++c) {
      double ag = cell.b_cand[c];
      for (int u = 0; u < hidden; ++u)
        ag += r[u] * h_prev[u] * cell.w_cand(u, c);
      for (int u = 0; u < x_dim; ++u)
        ag += x[u] * cell.w_cand(hidden + u, c);
      g[c] = std::tanh(ag);
      h[c] = (1.0 - z[c]) * h_prev[c] + z[c] * g[c];
    }
    std::copy(h, h + hidden, h_prev.begin());
  }
}

struct GruGrads {
  Matrix* w_update;
  Matrix* w_reset;
  Matrix* w_cand;
  Vector* b_update;
  Vector* b_reset;
  Vector* b_cand;
};

void gru_backward(const GruCell& cell, const Matrix& inputs,
                  const GruSeqCache& cache, const Matrix& d_h_out,
                  bool reverse, int hidden, GruGrads g, Matrix& d_inputs) {
  const int T = inputs.rows();
  const int x_dim = inputs.cols();

  Vector d_h_next(hidden, 0.0);
  Vector dh(hidden), dz(hidden), dg(hidden), dr(hidden), d_h_prev(hidden);
  Vector d_pre(hidden);
  for (int k = T - 1; k >= 0; --k) {
    const int t = reverse ? T - 1 - k : k;
    const int t_prev = reverse ? t + 1 : t - 1;
    const bool has_prev = k > 0;
    const double* h_prev = has_prev ? cache.h.row(t_prev) : nullptr;
    const double* x = inputs.row(t);
    const double* z = cache.z.row(t);
    const double* r = cache.r.row(t);
    const double* gg = cache.g.row(t);

    for (int c = 0; c < hidden; ++c) {
      const double hp = has_prev ? h_prev[c] : 0.0;
      dh[c] = d_h_out(t, c) + d_h_next[c];
      dz[c] = dh[c] * (gg[c] - hp);
      dg[c] = dh[c] * z[c];
      d_h_prev[c] = dh[c] * (1.0 - z[c]);
    }

    // candidate: g = tanh([r*h_prev ; x] . Wc + bc)
    for (int c = 0; c < hidden; ++c) d_pre[c] = dg[c] * (1.0 - gg[c] * gg[c]);
    for (int c = 0; c < hidden; ++c) (*g.b_cand)[c] += d_pre[c];
    for (int u = 0; u < hidden; ++u) {
      const double hp = has_prev ? h_prev[u] : 0.0;
      const double gated = r[u] * hp;
      double dcat = 0.0;
      for (int c = 0; c < hidden; ++c) {
        (*g.w_cand)(u, c) += gated * d_pre[c];
        dcat += cell.w_cand(u, c) * d_pre[c];
      }
      dr[u] = dcat * hp;
      d_h_prev[u] += dcat * r[u];
    }
    for (int u = 0; u < x_dim; ++u) {
      double dcat = 0.0;
      for (int c = 0; c < hidden; ++c) {
        (*g.w_cand)(hidden + u, c) += x[u] * d_pre[c];
        dcat += cell.w_cand(hidden + u, c) * d_pre[c];
      }
      d_inputs(t, u) += dcat;
    }

    // reset gate
    for (int c = 0; c < hidden; ++c) d_pre[c] = dr[c] * r[c] * (1.0 - r[c]);
    for (int c = 0; c < hidden; ++c) (*g.b_reset)[c] += d_pre[c];
    for (int u = 0; u < hidden; ++u) {
      const double hp = has_prev ? h_prev[u] : 0.0;
      double dcat = 0.0;
      for (int c = 0; c < hidden; ++c) {
        (*g.w_reset)(u, c) += hp * d_pre[c];
        dcat += cell.w_reset(u, c) * d_pre[c];
      }
      d_h_prev[u] += dcat;
    }
    for (int u = 0; u < x_dim; ++u) {
      double dcat = 0.0;
      for (int c = 0; c < hidden; ++c) {
        (*g.w_reset)(hidden + u, c) += x[u] * d_pre[c];
        dcat += cell.w_reset(hidden + u, c) * d_pre[c];
      }
      d_inputs(t, u) += dcat;
    }

    // update gate
    for (int c = 0; c < hidden; ++c) d_pre[c] = dz[c] * z[c] * (1.0 - z[c]);
    for (int c = 0; c < hidden; ++c) (*g.b_update)[c] += d_pre[c];
    for (int u = 0; u < hidden; ++u) {
      const double hp = has_prev ? h_prev[u] : 0.0;
      double dcat = 0.0;
      for (int c = 0; c < hidden; ++c) {
        (*g.w_update)(u, c) += hp * d_pre[c];
        dcat += cell.w_update(u, c) * d_pre[c];
      }
      d_h_prev[u] += dcat;
    }
    for (int u = 0; u < x_dim; ++u) {
      double dcat = 0.0;
      for (int c = 0; c < hidden; ++c) {
        (*g.w_update)(hidden + u, c) += x[u] * d_pre[c];
        dcat += cell.w_update(hidden + u, c) * d_pre[c];
      }
      d_inputs(t, u) += dcat;
    }

    d_h_next = d_h_prev;
  }
}

}  // namespace

Matrix wiq_features(const std::vector<Token>& question_tokens,
                    const std::vector<Token>& context_tokens,
                    const WordVectorTable* open_table,
                    const WordVectorTable* domain_table) {
  const int n = static_cast<int>(context_tokens.size());
  Matrix feats(n, 2);

  std::vector<std::string> q_lower;
  q_lower.reserve(question_tokens.size());
  std::vector<Vector> q_vecs;
  q_vecs.reserve(question_tokens.size());
  for (const Token& t : question_tokens) {
    q_lower.push_back(ascii_lower(t.text));
    q_vecs.push_back(concat_lookup(t.text, open_table, domain_table));
  }

  for (int i = 0; i < n; ++i) {
    const std::string lower = ascii_lower(context_tokens[i].text);
    double binary = 0.0;
    for (const std::string& q : q_lower) {
      if (q == lower) {
        binary = 1.0;
        break;
      }
    }
    const Vector cv = concat_lookup(context_tokens[i].text, open_table,
                                    domain_table);
    double best = 0.0;
    for (const Vector& qv : q_vecs)
      best = std::max(best, cosine(cv, qv));
    feats(i, 0) = binary;
    feats(i, 1) = std::clamp(best, 0.0, 1.0);
  }
  return feats;
}

ScoreSet forward(const Matrix& q_emb, const Matrix& c_emb, const Matrix& wiq,
                 const ModelParams& params, const ForwardOptions& opts,
                 Activations* acts_out) {
  const int m = q_emb.rows();
  const int n = c_emb.rows();
  const int h = params.hidden;
  const int d = params.projection.rows();
  const int x_dim = params.gru_input_dim();

  if (m < 1 || n < 1) throw ShapeMismatch("forward: empty sequence");
  if (q_emb.cols() != d || c_emb.cols() != d)
    throw ShapeMismatch("forward: embedding width does not match projection");
  if (wiq.rows() != n || wiq.cols() != 2)
    throw ShapeMismatch("forward: wiq features must be [n x 2]");
  if (opts.mask_q && static_cast<int>(opts.mask_q->size()) != h)
    throw ShapeMismatch("forward: question mask size");
  if (opts.mask_c && static_cast<int>(opts.mask_c->size()) != h)
    throw ShapeMismatch("forward: context mask size");

  Activations local;
  Activations& A = acts_out ? *acts_out : local;
  A.m = m;
  A.n = n;
  A.hidden = h;
  A.x_dim = x_dim;
  A.q_emb = q_emb;
  A.c_emb = c_emb;
  A.mask_q = opts.mask_q ? *opts.mask_q : Vector(h, 1.0);
  A.mask_c = opts.mask_c ? *opts.mask_c : Vector(h, 1.0);

  // Project and assemble GRU inputs. Question rows carry constant features
  // so both sequences share the recurrent weights.
  A.q_x = Matrix(m, x_dim);
  for (int t = 0; t < m; ++t) {
    const double* e = q_emb.row(t);
    double* x = A.q_x.row(t);
    for (int c = 0; c < h; ++c) {
      double acc = params.projection_bias[c];
      for (int u = 0; u < d; ++u) acc += e[u] * params.projection(u, c);
      x[c] = acc * A.mask_q[c];
    }
    x[h] = 1.0;
    x[h + 1] = 1.0;
  }
  A.c_x = Matrix(n, x_dim);
  for (int t = 0; t < n; ++t) {
    const double* e = c_emb.row(t);
    double* x = A.c_x.row(t);
    for (int c = 0; c < h; ++c) {
      double acc = params.projection_bias[c];
      for (int u = 0; u < d; ++u) acc += e[u] * params.projection(u, c);
      x[c] = acc * A.mask_c[c];
    }
    x[h] = wiq(t, 0);
    x[h + 1] = wiq(t, 1);
  }

  run_gru(params.fwd, A.q_x, false, h, A.q_fwd);
  run_gru(params.bwd, A.q_x, true, h, A.q_bwd);
  run_gru(params.fwd, A.c_x, false, h, A.c_fwd);
  run_gru(params.bwd, A.c_x, true, h, A.c_bwd);

  A.q_states = Matrix(m, h);
  for (int t = 0; t < m; ++t)
    for (int c = 0; c < h; ++c)
      A.q_states(t, c) = A.q_fwd.h(t, c) + A.q_bwd.h(t, c);
  A.c_states = Matrix(n, h);
  for (int t = 0; t < n; ++t)
    for (int c = 0; c < h; ++c)
      A.c_states(t, c) = A.c_fwd.h(t, c) + A.c_bwd.h(t, c);

  // Attention summary of the question.
  Vector scores(m);
  double max_s = -1e300;
  for (int t = 0; t < m; ++t) {
    scores[t] = dot(params.attention.data(), A.q_states.row(t), h);
    max_s = std::max(max_s, scores[t]);
  }
  A.attn_weights.assign(m, 0.0);
  double z_sum = 0.0;
  for (int t = 0; t < m; ++t) {
    A.attn_weights[t] = std::exp(scores[t] - max_s);
    z_sum += A.attn_weights[t];
  }
  for (int t = 0; t < m; ++t) A.attn_weights[t] /= z_sum;
  A.q_summary.assign(h, 0.0);
  for (int t = 0; t < m; ++t)
    for (int c = 0; c < h; ++c)
      A.q_summary[c] += A.attn_weights[t] * A.q_states(t, c);

  ScoreSet out;
  out.n = n;
  out.start_scores.resize(n);
  const Vector& q = A.q_summary;
  for (int i = 0; i < n; ++i) {
    const double* hi = A.c_states.row(i);
    double acc = params.start_bias;
    for (int c = 0; c < h; ++c) {
      acc += params.start_head[c] * hi[c];
      acc += params.start_head[h + c] * q[c];
      acc += params.start_head[2 * h + c] * hi[c] * q[c];
    }
    out.start_scores[i] = acc;
  }

  std::vector<int> starts = opts.requested_starts;
  if (starts.empty()) {
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return out.start_scores[a] > out.start_scores[b];
    });
    const int k = std::min(opts.top_k_starts, n);
    starts.assign(order.begin(), order.begin() + k);
  }
  std::sort(starts.begin(), starts.end());
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
  for (int i : starts)
    if (i < 0 || i >= n) throw ShapeMismatch("forward: start index out of range");
  out.selected_starts = starts;

  for (int i : starts) {
    const double* hi = A.c_states.row(i);
    Vector row(n - i);
    for (int j = i; j < n; ++j) {
      const double* hj = A.c_states.row(j);
      double acc = params.end_bias;
      for (int c = 0; c < h; ++c) {
        acc += params.end_head[c] * hj[c];
        acc += params.end_head[h + c] * q[c];
        acc += params.end_head[2 * h + c] * hi[c];
        acc += params.end_head[3 * h + c] * hj[c] * hi[c];
      }
      row[j - i] = acc;
    }
    out.end_scores[i] = std::move(row);
  }
  return out;
}

void backward(const Vector& d_start_scores,
              const std::map<int, Vector>& d_end_scores,
              const Activations& A, const ModelParams& params,
              ModelParams& grads, Matrix* d_q_emb, Matrix* d_c_emb) {
  const int m = A.m;
  const int n = A.n;
  const int h = A.hidden;
  const int d = params.projection.rows();
  const int x_dim = A.x_dim;

  if (static_cast<int>(d_start_scores.size()) != n)
    throw StaleActivations("backward: start gradient length mismatch");
  for (const auto& [i, row] : d_end_scores)
    if (i < 0 || i >= n || static_cast<int>(row.size()) != n - i)
      throw StaleActivations("backward: end gradient row mismatch");
  if (!same_shape(grads, params))
    throw StaleActivations("backward: gradient shape mismatch");

  Matrix d_c_states(n, h);
  Vector d_q_sum(h, 0.0);
  const Vector& q = A.q_summary;

  // start head
  for (int i = 0; i < n; ++i) {
    const double g = d_start_scores[i];
    if (g == 0.0) continue;
    const double* hi = A.c_states.row(i);
    grads.start_bias += g;
    for (int c = 0; c < h; ++c) {
      grads.start_head[c] += g * hi[c];
      grads.start_head[h + c] += g * q[c];
      grads.start_head[2 * h + c] += g * hi[c] * q[c];
      d_c_states(i, c) += g * (params.start_head[c] +
                               params.start_head[2 * h + c] * q[c]);
      d_q_sum[c] += g * (params.start_head[h + c] +
                         params.start_head[2 * h + c] * hi[c]);
    }
  }

  // end head
  for (const auto& [i, row] : d_end_scores) {
    const double* hi = A.c_states.row(i);
    for (int j = i; j < n; ++j) {
      const double g = row[j - i];
      if (g == 0.0) continue;
      const double* hj = A.c_states.row(j);
      grads.end_bias += g;
      for (int c = 0; c < h; ++c) {
        grads.end_head[c] += g * hj[c];
        grads.end_head[h + c] += g * q[c];
        grads.end_head[2 * h + c] += g * hi[c];
        grads.end_head[3 * h + c] += g * hj[c] * hi[c];
        d_c_states(j, c) += g * (params.end_head[c] +
                                 params.end_head[3 * h + c] * hi[c]);
        d_q_sum[c] += g * params.end_head[h + c];
        d_c_states(i, c) += g * (params.end_head[2 * h + c] +
                                 params.end_head[3 * h + c] * hj[c]);
      }
    }
  }

  // attention: q_summary = sum_t alpha_t u_t, alpha = softmax(a . u_t)
  Matrix d_q_states(m, h);
  Vector d_alpha(m, 0.0);
  for (int t = 0; t < m; ++t) {
    const double* ut = A.q_states.row(t);
    for (int c = 0; c < h; ++c) {
      d_q_states(t, c) += A.attn_weights[t] * d_q_sum[c];
      d_alpha[t] += d_q_sum[c] * ut[c];
    }
  }
  double inner = 0.0;
  for (int t = 0; t < m; ++t) inner += A.attn_weights[t] * d_alpha[t];
  for (int t = 0; t < m; ++t) {
    const double ds = A.attn_weights[t] * (d_alpha[t] - inner);
    const double* ut = A.q_states.row(t);
    for (int c = 0; c < h; ++c) {
      grads.attention[c] += ds * ut[c];
      d_q_states(t, c) += ds * params.attention[c];
    }
  }

  // recurrent layers (state sums pass gradients to both directions)
  GruGrads gf{&grads.fwd.w_update, &grads.fwd.w_reset, &grads.fwd.w_cand,
              &grads.fwd.b_update, &grads.fwd.b_reset, &grads.fwd.b_cand};
  GruGrads gb{&grads.bwd.w_update, &grads.bwd.w_reset, &grads.bwd.w_cand,
              &grads.bwd.b_update, &grads.bwd.b_reset, &grads.bwd.b_cand};
  Matrix d_q_x(m, x_dim), d_c_x(n, x_dim);
  gru_backward(params.fwd, A.q_x, A.q_fwd, d_q_states, false, h, gf, d_q_x);
  gru_backward(params.bwd, A.q_x, A.q_bwd, d_q_states, true, h, gb, d_q_x);
  gru_backward(params.fwd, A.c_x, A.c_fwd, d_c_states, false, h, gf, d_c_x);
  gru_backward(params.bwd, A.c_x, A.c_bwd, d_c_states, true, h, gb, d_c_x);

  // projection (feature columns beyond h are inputs, not parameters)
  if (d_q_emb) *d_q_emb = Matrix(m, d);
  if (d_c_emb) *d_c_emb = Matrix(n, d);
  auto proj_backward = [&](const Matrix& emb, const Matrix& d_x,
                           const Vector& mask, Matrix* d_emb, int T) {
    for (int t = 0; t < T; ++t) {
      const double* e = emb.row(t);
      for (int c = 0; c < h; ++c) {
        const double dp = d_x(t, c) * mask[c];
        if (dp == 0.0) continue;
        grads.projection_bias[c] += dp;
        for (int u = 0; u < d; ++u) {
          grads.projection(u, c) += e[u] * dp;
          if (d_emb) (*d_emb)(t, u) += params.projection(u, c) * dp;
        }
      }
    }
  };
  proj_backward(A.q_emb, d_q_x, A.mask_q, d_q_emb, m);
  proj_backward(A.c_emb, d_c_x, A.mask_c, d_c_emb, n);
}

}  // namespace bioqa
