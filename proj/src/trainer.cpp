#include "bioqa/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "bioqa/encoder.hpp"
#include "bioqa/errors.hpp"

namespace bioqa {

std::vector<Vector> variational_masks(const std::vector<int>& sizes,
                                      double rate, uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0)
    throw ConfigMismatch("dropout rate must be in [0, 1)");
  Rng rng(seed);
  std::vector<Vector> masks;
  masks.reserve(sizes.size());
  const double keep = 1.0 - rate;
  for (int size : sizes) {
    Vector m(size, 1.0);
    if (rate > 0.0)
      for (double& v : m) v = rng.next_double() < keep ? 1.0 / keep : 0.0;
    masks.push_back(std::move(m));
  }
  return masks;
}

MixedStream::MixedStream(int n_target, int n_source, uint64_t seed)
    : n_target_(n_target), n_source_(n_source), rng_(seed) {
  if (n_target <= 0 || n_source <= 0)
    throw EmptyDataset("mixed stream needs non-empty target and source");
  reshuffle_source();
}

void MixedStream::reshuffle_source() {
  source_order_.resize(n_source_);
  for (int i = 0; i < n_source_; ++i) source_order_[i] = i;
  rng_.shuffle(source_order_);
  source_pos_ = 0;
}

MixedStream::Draw MixedStream::next() {
  Draw d;
  if (target_turn_) {
    d.from_target = true;
    d.index = static_cast<int>(rng_.below(n_target_));
  } else {
    if (source_pos_ >= source_order_.size()) reshuffle_source();
    d.from_target = false;
    d.index = source_order_[source_pos_++];
  }
  target_turn_ = !target_turn_;
  return d;
}

namespace {

// Gold span starts per snippet; these need end-score rows during training.
std::vector<std::set<int>> gold_starts(const Question& q) {
  std::vector<std::set<int>> starts(q.snippets.size());
  for (const AnswerGroup& g : q.gold)
    for (const SpanRef& sp : g.spans)
      starts[sp.snippet_index].insert(sp.token_start);
  return starts;
}

struct SnippetForward {
  ScoreSet scores;
  Activations acts;
  EmbeddedSequence c_emb;
  bool ran = false;
};

}  // namespace

BasePredictions base_predictions(const Question& question,
                                 const ModelParams& base,
                                 const EmbeddingResources& res) {
  BasePredictions bp;
  const bool is_list = question.qtype == QuestionType::list;
  EmbeddedSequence q_emb =
      embed_sequence(question.question_tokens, is_list, res.open_table,
                     res.domain_table, base.char_cnn, res.entity_dict, base.emb);
  for (const Snippet& snippet : question.snippets) {
    if (snippet.tokens.empty()) {
      bp.scores.emplace_back();
      bp.probs.emplace_back();
      continue;
    }
    EmbeddedSequence c_emb =
        embed_sequence(snippet.tokens, is_list, res.open_table, res.domain_table,
                       base.char_cnn, res.entity_dict, base.emb);
    const Matrix wiq = wiq_features(question.question_tokens, snippet.tokens,
                                    res.open_table, res.domain_table);
    ForwardOptions opts;
    opts.top_k_starts = 1;  // the argmax start is all the forgetting cost needs
    ScoreSet sc = forward(q_emb.emb, c_emb.emb, wiq, base, opts);
    bp.probs.push_back(span_probabilities(sc));
    bp.scores.push_back(std::move(sc));
  }
  return bp;
}

QuestionLoss question_grads(const Question& question, const ModelParams& params,
                            const BasePredictions* base_preds,
                            const EmbeddingResources& res, const LossConfig& cfg,
                            const std::vector<Vector>* masks,
                            ModelParams* grads) {
  const size_t n_snippets = question.snippets.size();
  if (masks && masks->size() != 1 + n_snippets)
    throw ShapeMismatch("question_grads: expected one mask per sequence");
  const bool use_fc = cfg.c_fc > 0.0;
  if (use_fc && !base_preds)
    throw ConfigMismatch("forgetting cost requires base predictions");
  const bool is_list = question.qtype == QuestionType::list;

  EmbeddedSequence q_emb = embed_sequence(
      question.question_tokens, is_list, res.open_table, res.domain_table,
      params.char_cnn, res.entity_dict, params.emb, grads != nullptr);

  // Every non-empty snippet runs a forward pass: even without gold spans
  // its tokens enter the multi-hot start supervision as negatives.
  const std::vector<std::set<int>> starts_per_snippet = gold_starts(question);
  std::vector<SnippetForward> fwd(n_snippets);
  std::vector<ScoreSet> snippet_scores(n_snippets);
  for (size_t s = 0; s < n_snippets; ++s) {
    const Snippet& snippet = question.snippets[s];
    if (snippet.tokens.empty()) continue;
    std::set<int> wanted = starts_per_snippet[s];
    if (use_fc && !(*base_preds).scores[s].selected_starts.empty())
      wanted.insert((*base_preds).scores[s].selected_starts[0]);

    fwd[s].c_emb = embed_sequence(snippet.tokens, is_list, res.open_table,
                                  res.domain_table, params.char_cnn,
                                  res.entity_dict, params.emb, grads != nullptr);
    const Matrix wiq = wiq_features(question.question_tokens, snippet.tokens,
                                    res.open_table, res.domain_table);
    ForwardOptions opts;
    opts.requested_starts.assign(wanted.begin(), wanted.end());
    if (opts.requested_starts.empty()) opts.top_k_starts = 1;
    if (masks) {
      opts.mask_q = &(*masks)[0];
      opts.mask_c = &(*masks)[1 + s];
    }
    fwd[s].scores = forward(q_emb.emb, fwd[s].c_emb.emb, wiq, params, opts,
                            grads ? &fwd[s].acts : nullptr);
    fwd[s].ran = true;
    snippet_scores[s] = fwd[s].scores;
  }

  QuestionLoss out;
  SpanLossResult span = span_loss(snippet_scores, question.gold);
  out.l_original = span.loss;

  std::vector<ScoreGrads> combined = std::move(span.grads);
  if (use_fc) {
    ForgettingResult fc =
        forgetting_cost_with_grads(snippet_scores, base_preds->probs);
    out.l_fc = fc.loss;
    for (size_t s = 0; s < n_snippets; ++s) {
      if (fc.grads[s].d_start.empty()) continue;
      for (size_t t = 0; t < fc.grads[s].d_start.size(); ++t)
        combined[s].d_start[t] += cfg.c_fc * fc.grads[s].d_start[t];
      for (const auto& [i, row] : fc.grads[s].d_end) {
        Vector& dst = combined[s].d_end[i];
        if (dst.empty()) dst.assign(row.size(), 0.0);
        for (size_t j = 0; j < row.size(); ++j)
          dst[j] += cfg.c_fc * row[j];
      }
    }
  }

  if (!grads) return out;

  Matrix d_q_emb_total;
  for (size_t s = 0; s < n_snippets; ++s) {
    if (!fwd[s].ran) continue;
    Matrix d_q_emb, d_c_emb;
    backward(combined[s].d_start, combined[s].d_end, fwd[s].acts, params,
             *grads, &d_q_emb, &d_c_emb);
    if (d_q_emb_total.rows() == 0)
      d_q_emb_total = d_q_emb;
    else
      for (int r = 0; r < d_q_emb.rows(); ++r)
        for (int c = 0; c < d_q_emb.cols(); ++c)
          d_q_emb_total(r, c) += d_q_emb(r, c);

    const int off = params.emb.char_offset();
    const int nf = params.emb.char_filters;
    Vector d_char(nf);
    for (int t = 0; t < d_c_emb.rows(); ++t) {
      for (int f = 0; f < nf; ++f) d_char[f] = d_c_emb(t, off + f);
      char_embed_backward(fwd[s].c_emb.char_caches[t], d_char, params.char_cnn,
                          grads->char_cnn.char_table, grads->char_cnn.filters,
                          grads->char_cnn.bias);
    }
  }
  if (d_q_emb_total.rows() > 0) {
    const int off = params.emb.char_offset();
    const int nf = params.emb.char_filters;
    Vector d_char(nf);
    for (int t = 0; t < d_q_emb_total.rows(); ++t) {
      for (int f = 0; f < nf; ++f) d_char[f] = d_q_emb_total(t, off + f);
      char_embed_backward(q_emb.char_caches[t], d_char, params.char_cnn,
                          grads->char_cnn.char_table, grads->char_cnn.filters,
                          grads->char_cnn.bias);
    }
  }
  return out;
}

LossBreakdown question_loss_full(const Question& question,
                                 const ModelParams& params,
                                 const ModelParams* base_params,
                                 const BasePredictions* base_preds,
                                 const EmbeddingResources& res,
                                 const LossConfig& cfg,
                                 const std::vector<Vector>* masks,
                                 ModelParams* grads) {
  if ((cfg.c_fc > 0.0 || cfg.c_l2 > 0.0) && !base_params)
    throw ConfigMismatch("regularizers require a base model");
  const QuestionLoss ql =
      question_grads(question, params, base_preds, res, cfg, masks, grads);
  double l2 = 0.0;
  if (cfg.c_l2 > 0.0 && base_params) {
    l2 = l2_param_loss(params, *base_params);
    if (grads) {
      auto g = tensor_refs(*grads);
      const auto p = tensor_refs(params);
      const auto b = tensor_refs(*base_params);
      for (size_t t = 0; t < g.size(); ++t)
        for (size_t i = 0; i < g[t].count; ++i)
          g[t].data[i] += cfg.c_l2 * (p[t].data[i] - b[t].data[i]);
    }
  }
  return total_loss(ql.l_original, ql.l_fc, l2, cfg);
}

namespace {

double dev_metric_pretrain(const std::vector<Question>& dev,
                           const ModelParams& params,
                           const EmbeddingResources& res) {
  const std::vector<Question> usable = filter_trainable(dev);
  if (usable.empty()) return 0.0;
  LossConfig plain;  // no regularizers, no dropout at evaluation time
  double sum = 0.0;
  for (const Question& q : usable)
    sum += question_grads(q, params, nullptr, res, plain, nullptr, nullptr)
               .l_original;
  return sum / static_cast<double>(usable.size());
}

double dev_metric_finetune(const std::vector<Question>& dev,
                           const ModelParams& params,
                           const EmbeddingResources& res,
                           const DecodingConfig& decode, int threads) {
  if (dev.empty()) return 0.0;
  const std::vector<const ModelParams*> members{&params};
  std::vector<QuestionPrediction> preds =
      predict_all(members, {}, dev, res, decode, threads);

  DecodingConfig cfg = decode;
  try {
    cfg.list_threshold = tune_threshold(to_span_map(preds), dev);
    for (QuestionPrediction& p : preds)
      if (p.qtype == QuestionType::list) p.list_set = list_answers(p.spans, cfg);
  } catch (const NoListQuestions&) {
  }

  const EvalReport rep = evaluate(to_answer_map(preds), dev);
  const int total = rep.n_factoid_evaluated + rep.n_list_evaluated;
  if (total == 0) return 0.0;
  return (rep.factoid_mrr * rep.n_factoid_evaluated +
          rep.list_f1 * rep.n_list_evaluated) /
         static_cast<double>(total);
}

}  // namespace

TrainResult train(const std::vector<Question>& train_questions,
                  const std::vector<Question>& dev_questions,
                  const ModelParams& initial_params,
                  const ModelParams* base_params, const EmbeddingResources& res,
                  const TrainOptions& opts,
                  const std::vector<Question>* mix_source) {
  const std::vector<Question> target = filter_trainable(train_questions);
  if (target.empty()) throw EmptyDataset("train: no extractable questions");
  if ((opts.loss.c_fc > 0.0 || opts.loss.c_l2 > 0.0) && !base_params)
    throw ConfigMismatch("train: c_fc/c_l2 require a base checkpoint");

  std::vector<Question> source;
  if (mix_source) {
    source = filter_trainable(*mix_source);
    if (source.empty())
      throw EmptyDataset("train: mix-in dataset has no extractable questions");
  }

  // Base predictions are frozen; compute them once per question.
  std::vector<BasePredictions> base_target, base_source;
  if (base_params && opts.loss.c_fc > 0.0) {
    for (const Question& q : target)
      base_target.push_back(base_predictions(q, *base_params, res));
    for (const Question& q : source)
      base_source.push_back(base_predictions(q, *base_params, res));
  }

  TrainResult result;
  result.params = initial_params;
  TrainSchedule schedule = opts.schedule;
  schedule.lr = schedule.initial_lr;
  OptimizerState optimizer = OptimizerState::create(result.params, schedule.lr);

  std::optional<MixedStream> mixer;
  if (mix_source)
    mixer.emplace(static_cast<int>(target.size()),
                  static_cast<int>(source.size()),
                  Rng::derive(opts.seed, 0xA11E));

  std::vector<int> epoch_order;
  size_t epoch_pos = 0;
  int epoch = 0;
  auto next_example = [&]() -> std::pair<const Question*, const BasePredictions*> {
    if (mixer) {
      const MixedStream::Draw d = mixer->next();
      const Question* q = d.from_target ? &target[d.index] : &source[d.index];
      const BasePredictions* bp = nullptr;
      if (opts.loss.c_fc > 0.0)
        bp = d.from_target ? &base_target[d.index] : &base_source[d.index];
      return {q, bp};
    }
    if (epoch_pos >= epoch_order.size()) {
      epoch_order.resize(target.size());
      for (size_t i = 0; i < target.size(); ++i)
        epoch_order[i] = static_cast<int>(i);
      Rng rng(Rng::derive(opts.seed, 0xE70C, static_cast<uint64_t>(epoch)));
      rng.shuffle(epoch_order);
      epoch_pos = 0;
      ++epoch;
    }
    const int idx = epoch_order[epoch_pos++];
    const BasePredictions* bp =
        (opts.loss.c_fc > 0.0 && !base_target.empty()) ? &base_target[idx]
                                                       : nullptr;
    return {&target[idx], bp};
  };

  for (int step = 1; step <= schedule.max_steps; ++step) {
    ModelParams tape = zeros_like(result.params);
    double sum_orig = 0.0;
    double sum_fc = 0.0;
    const int batch = std::max(1, schedule.batch_size);
    for (int b = 0; b < batch; ++b) {
      const auto [q, bp] = next_example();
      std::vector<int> mask_sizes(1 + q->snippets.size(), result.params.hidden);
      const std::vector<Vector> masks = variational_masks(
          mask_sizes, opts.loss.dropout_rate,
          Rng::derive(opts.seed, 0xD0, static_cast<uint64_t>(step),
                      static_cast<uint64_t>(b)));
      const QuestionLoss ql = question_grads(*q, result.params, bp, res,
                                             opts.loss, &masks, &tape);
      sum_orig += ql.l_original;
      sum_fc += ql.l_fc;
    }

    // Mean over the batch, then the parameter-space penalty once.
    const double inv_batch = 1.0 / static_cast<double>(batch);
    for (TensorRef& t : tensor_refs(tape))
      for (size_t i = 0; i < t.count; ++i) t.data[i] *= inv_batch;

    double l2 = 0.0;
    if (opts.loss.c_l2 > 0.0 && base_params) {
      l2 = l2_param_loss(result.params, *base_params);
      auto g = tensor_refs(tape);
      const auto p = tensor_refs(result.params);
      const auto bs = tensor_refs(*base_params);
      for (size_t t = 0; t < g.size(); ++t)
        for (size_t i = 0; i < g[t].count; ++i)
          g[t].data[i] += opts.loss.c_l2 * (p[t].data[i] - bs[t].data[i]);
    }

    const LossBreakdown breakdown =
        total_loss(sum_orig * inv_batch, sum_fc * inv_batch, l2, opts.loss);
    if (!std::isfinite(breakdown.l_final))
      throw DivergedLoss("train: non-finite loss at step " +
                         std::to_string(step));

    optimizer.lr = schedule.lr;
    adam_step(result.params, tape, optimizer);

    TrainLogEntry entry;
    entry.step = step;
    entry.l_original = breakdown.l_original;
    entry.l_fc = breakdown.l_fc;
    entry.l_l2 = breakdown.l_l2;
    entry.l_final = breakdown.l_final;
    entry.lr = schedule.lr;

    if (schedule.checkpoint_every > 0 && step % schedule.checkpoint_every == 0) {
      const double metric =
          schedule.phase == Phase::pretrain
              ? dev_metric_pretrain(dev_questions, result.params, res)
              : dev_metric_finetune(dev_questions, result.params, res,
                                    opts.decode, opts.threads);
      maybe_halve_lr(schedule, metric);
      entry.dev_metric = metric;
      result.final_dev_metric = metric;
    }
    result.log.push_back(entry);
  }
  return result;
}

void write_train_log_csv(const std::vector<TrainLogEntry>& log,
                         const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "step,l_original,l_fc,l_l2,l_final,lr,dev_metric\n";
  char buf[512];
  for (const TrainLogEntry& e : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,", e.step,
                  e.l_original, e.l_fc, e.l_l2, e.l_final, e.lr);
    out << buf;
    if (e.dev_metric) {
      std::snprintf(buf, sizeof(buf), "%.17g", *e.dev_metric);
      out << buf;
    }
    out << "\n";
  }
}

CrossValidationResult cross_validate(const std::vector<Question>& questions,
                                     int k, const EmbeddingConfig& emb,
                                     int hidden, const EmbeddingResources& res,
                                     const TrainOptions& opts) {
  CrossValidationResult result;
  const std::vector<std::vector<Question>> folds =
      make_folds(questions, k, opts.seed);

  for (int f = 0; f < k; ++f) {
    std::vector<Question> rest;
    for (int g = 0; g < k; ++g)
      if (g != f) rest.insert(rest.end(), folds[g].begin(), folds[g].end());

    // Hold out a slice of the remainder for LR halving and the threshold.
    std::vector<int> order(rest.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng rng(Rng::derive(opts.seed, 0xCF, static_cast<uint64_t>(f)));
    rng.shuffle(order);
    const int n_dev = std::max<int>(1, static_cast<int>(rest.size()) / 5);
    std::vector<Question> dev, fold_train;
    for (size_t i = 0; i < order.size(); ++i)
      (static_cast<int>(i) < n_dev ? dev : fold_train)
          .push_back(rest[order[i]]);

    TrainOptions fold_opts = opts;
    fold_opts.seed = Rng::derive(opts.seed, 0xF01D, static_cast<uint64_t>(f));
    const ModelParams init = init_params(emb, hidden, fold_opts.seed);
    TrainResult tr = train(fold_train, dev, init, nullptr, res, fold_opts);

    const std::vector<const ModelParams*> members{&tr.params};
    DecodingConfig decode = opts.decode;
    try {
      const std::vector<QuestionPrediction> dev_preds =
          predict_all(members, {}, dev, res, decode, opts.threads);
      decode.list_threshold = tune_threshold(to_span_map(dev_preds), dev);
    } catch (const NoListQuestions&) {
    }
    result.fold_thresholds.push_back(decode.list_threshold);

    const std::vector<QuestionPrediction> test_preds =
        predict_all(members, {}, folds[f], res, decode, opts.threads);
    result.fold_reports.push_back(evaluate(to_answer_map(test_preds), folds[f]));
  }
  result.mean = mean_report(result.fold_reports);
  return result;
}

}  // namespace bioqa
