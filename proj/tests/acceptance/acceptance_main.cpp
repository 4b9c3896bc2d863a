// Acceptance suite: one line per criterion, nonzero exit on any failure.
//
// The CLI-driven determinism check needs the bioqa binary; its path comes
// from the BIOQA_CLI environment variable (set by ctest) or --cli.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bioqa/checkpoint.hpp"
#include "bioqa/dataset.hpp"
#include "bioqa/ensemble.hpp"
#include "bioqa/errors.hpp"
#include "bioqa/loss.hpp"
#include "bioqa/metrics.hpp"
#include "bioqa/predict.hpp"
#include "bioqa/synthetic.hpp"
#include "bioqa/trainer.hpp"
#include "helpers.hpp"

using namespace bioqa;
namespace fs = std::filesystem;

namespace {

std::string g_cli_path;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

int run_cli(const std::string& args, std::string* output = nullptr) {
  const std::string cmd = g_cli_path + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  std::string out;
  char buf[4096];
  while (fgets(buf, sizeof(buf), pipe)) out += buf;
  if (output) *output = out;
  const int status = pclose(pipe);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

EmbeddingConfig toy_emb(int filters = 6) {
  EmbeddingConfig emb;
  emb.char_dim = 4;
  emb.char_width = 3;
  emb.char_filters = filters;
  return emb;
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_where;

  WordVectorTable open_table(4);
  {
    Rng rng(900);
    for (const char* w : {"which", "term", "terms", "follows", "follow", "the",
                          "marker", "in", "sample", "alpha", "beta", "gamma"}) {
      Vector v(4);
      for (double& x : v) x = rng.uniform(-0.5, 0.5);
      open_table.insert(w, v);
    }
  }
  EntityDictionary dict;
  dict.insert("marker", 3);
  dict.insert("alpha", 17);

  for (int k = 0; k < 20; ++k) {
    const uint64_t seed = 1000 + 17 * k;
    EmbeddingConfig emb = toy_emb();
    EmbeddingResources res;
    if (k % 7 == 3) {
      emb.use_open_domain = true;
      emb.open_dim = 4;
      res.open_table = &open_table;
    }
    if (k % 7 == 5) {
      emb.use_entity_features = true;
      res.entity_dict = &dict;
    }

    const auto qs = synthetic_dataset(2, seed);
    const Question& q = qs[k % 2];
    ModelParams params = init_params(emb, 16, seed + 1);
    // the base sits near the current parameters, as during fine-tuning;
    // a far-away base inflates the L2 term and with it the roundoff of
    // the difference quotients
    ModelParams base = params;
    {
      Rng rng(seed + 2);
      for (TensorRef& t : tensor_refs(base))
        for (size_t i = 0; i < t.count; ++i)
          t.data[i] += rng.uniform(-0.05, 0.05);
    }
    LossConfig cfg;
    cfg.dropout_rate = 0.0;
    cfg.c_fc = 1.0;
    cfg.c_l2 = 0.5;
    const BasePredictions bp = base_predictions(q, base, res);
    // 1e-5 steps stay on one smoothness branch of the max-pooled loss
    const auto check = bioqa::testing::finite_diff_check(q, params, &base, &bp,
                                                         res, cfg, nullptr, 1e-5);
    if (check.max_rel_err > worst) {
      worst = check.max_rel_err;
      worst_where = "instance " + std::to_string(k) + " " + check.worst_tensor;
    }
  }
  const double elapsed = seconds_since(t0);
  char buf[256];
  std::snprintf(buf, sizeof(buf), "max rel err %.3e (%s), %.1fs", worst,
                worst_where.c_str(), elapsed);
  return {worst < 1e-4 && elapsed < 120.0, buf};
}

Outcome decoding_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(4040);
  DecodingConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(20));
    const ScoreSet sc = bioqa::testing::random_score_set(n, rng);
    const Snippet sn =
        bioqa::testing::snippet_of_tokens("s" + std::to_string(trial), n, rng);
    const auto fast = merge_snippets({dedup(decode_spans(sc, sn, 0, cfg))});
    const auto slow = merge_snippets(
        {dedup(bioqa::testing::brute_force_decode(sc, sn, 0, cfg))});
    if (fast.size() != slow.size())
      return {false, "size mismatch at trial " + std::to_string(trial)};
    for (size_t i = 0; i < fast.size(); ++i)
      if (fast[i].token_start != slow[i].token_start ||
          fast[i].token_end != slow[i].token_end || fast[i].prob != slow[i].prob)
        return {false, "rank mismatch at trial " + std::to_string(trial)};
  }
  const double elapsed = seconds_since(t0);
  return {elapsed < 30.0,
          "200 trials exact, " + std::to_string(elapsed) + "s"};
}

Outcome probability_identities() {
  if (start_probs({0.0})[0] != 0.5) return {false, "sigmoid(0) != 0.5"};
  const Vector uniform = end_probs({2.0, 2.0, 2.0, 2.0});
  for (double v : uniform)
    if (std::abs(v - 0.25) > 1e-15) return {false, "uniform softmax"};

  Rng rng(5050);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(15));
    const ScoreSet sc = bioqa::testing::random_score_set(n, rng);
    const SpanProbabilities probs = span_probabilities(sc);
    for (int i = 0; i < n; ++i) {
      double sum = 0.0;
      for (int j = i; j < n; ++j) {
        if (probs.span_prob(i, j) != probs.p_start[i] * probs.end_row(i)[j - i])
          return {false, "span probability is not the stored product"};
        sum += probs.end_row(i)[j - i];
      }
      if (std::abs(sum - 1.0) > 1e-9)
        return {false, "end row does not sum to 1"};
      if (!(probs.p_start[i] > 0.0 && probs.p_start[i] < 1.0))
        return {false, "start probability out of (0,1)"};
    }
  }
  return {true, "sigmoid/softmax fixtures and 50 random score sets"};
}

Outcome overfit_check() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto corpus = synthetic_dataset(20, 7);

  EmbeddingConfig emb;
  emb.char_dim = 8;
  emb.char_width = 5;
  emb.char_filters = 8;
  EmbeddingResources res;

  TrainOptions opts;
  opts.loss.dropout_rate = 0.0;  // overfitting on purpose
  opts.schedule = TrainSchedule::pretrain_defaults();
  opts.schedule.max_steps = 500;
  opts.schedule.batch_size = 8;
  opts.schedule.checkpoint_every = 100;
  opts.seed = 11;

  const ModelParams init = init_params(emb, 16, 11);
  const TrainResult tr = train(corpus, corpus, init, nullptr, res, opts);

  DecodingConfig cfg;
  const std::vector<const ModelParams*> members{&tr.params};
  std::vector<QuestionPrediction> preds =
      predict_all(members, {}, corpus, res, cfg);
  cfg.list_threshold = tune_threshold(to_span_map(preds), corpus);
  for (QuestionPrediction& p : preds)
    if (p.qtype == QuestionType::list) p.list_set = list_answers(p.spans, cfg);
  const EvalReport rep = evaluate(to_answer_map(preds), corpus);

  const double elapsed = seconds_since(t0);
  const double final_original = tr.log.back().l_original;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "train MRR %.3f, list F1 %.3f, final l_original %.4f, %.1fs",
                rep.factoid_mrr, rep.list_f1, final_original, elapsed);
  return {rep.factoid_mrr == 1.0 && rep.list_f1 >= 0.95 &&
              final_original < 0.05 && elapsed < 300.0,
          buf};
}

// Shared by the forgetting-cost and l2-pull checks.
struct ToyTransfer {
  ModelParams base;
  std::vector<Question> target;
  std::vector<Question> heldout;
  EmbeddingResources res;
};

ToyTransfer make_toy_transfer() {
  ToyTransfer t;
  const auto source = synthetic_dataset(16, 21, "marker");
  t.target = synthetic_dataset(12, 22, "vull");
  t.heldout = synthetic_dataset(8, 23, "marker");

  TrainOptions opts;
  opts.loss.dropout_rate = 0.0;
  opts.schedule = TrainSchedule::pretrain_defaults();
  opts.schedule.max_steps = 250;
  opts.schedule.batch_size = 8;
  opts.schedule.checkpoint_every = 0;
  opts.seed = 31;
  t.base = train(source, {}, init_params(toy_emb(8), 16, 31), nullptr, t.res,
                 opts)
               .params;
  return t;
}

ModelParams finetune_with(const ToyTransfer& t, double c_fc, double c_l2,
                          int steps = 200) {
  TrainOptions opts;
  opts.loss.dropout_rate = 0.0;
  opts.loss.c_fc = c_fc;
  opts.loss.c_l2 = c_l2;
  opts.schedule = TrainSchedule::finetune_defaults();
  opts.schedule.max_steps = steps;
  opts.schedule.batch_size = 8;
  opts.schedule.checkpoint_every = 0;
  opts.seed = 33;
  return train(t.target, {}, t.base, &t.base, t.res, opts).params;
}

double mean_divergence(const ToyTransfer& t, const ModelParams& tuned) {
  LossConfig probe;
  probe.c_fc = 1.0;
  double sum = 0.0;
  for (const Question& q : t.heldout) {
    const BasePredictions bp = base_predictions(q, t.base, t.res);
    sum += question_grads(q, tuned, &bp, t.res, probe, nullptr, nullptr).l_fc;
  }
  return sum / static_cast<double>(t.heldout.size());
}

Outcome forgetting_cost_behavior(const ToyTransfer& t) {
  std::array<double, 3> divergence{};
  const std::array<double, 3> coeffs{0.0, 1.0, 100.0};
  for (size_t i = 0; i < coeffs.size(); ++i)
    divergence[i] = mean_divergence(t, finetune_with(t, coeffs[i], 0.0));

  char buf[256];
  std::snprintf(buf, sizeof(buf), "held-out divergence %.4f >= %.4f >= %.4f",
                divergence[0], divergence[1], divergence[2]);
  const bool monotone =
      divergence[0] >= divergence[1] - 1e-12 && divergence[1] >= divergence[2] - 1e-12;
  return {monotone, buf};
}

Outcome l2_pull_behavior(const ToyTransfer& t) {
  const std::array<double, 3> coeffs{0.0, 0.3, 1e6};
  std::array<double, 3> pull{};
  double max_dev_at_huge = 0.0;
  for (size_t i = 0; i < coeffs.size(); ++i) {
    const ModelParams tuned = finetune_with(t, 0.0, coeffs[i], 100);
    pull[i] = l2_param_loss(tuned, t.base);
    if (coeffs[i] == 1e6) {
      const auto a = tensor_refs(tuned);
      const auto b = tensor_refs(t.base);
      for (size_t r = 0; r < a.size(); ++r)
        for (size_t j = 0; j < a[r].count; ++j)
          max_dev_at_huge =
              std::max(max_dev_at_huge, std::abs(a[r].data[j] - b[r].data[j]));
    }
  }
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "l2-to-base %.5f >= %.5f >= %.5f; max |dev| at 1e6: %.2e",
                pull[0], pull[1], pull[2], max_dev_at_huge);
  const bool ok = pull[0] >= pull[1] - 1e-12 && pull[1] >= pull[2] - 1e-12 &&
                  max_dev_at_huge < 1e-3;
  return {ok, buf};
}

Outcome metric_oracles() {
  auto make_q = [](const std::string& id, QuestionType t,
                   std::vector<std::vector<std::string>> gold) {
    Question q;
    q.id = id;
    q.qtype = t;
    for (auto& syns : gold) {
      AnswerGroup g;
      g.synonyms = std::move(syns);
      q.gold.push_back(std::move(g));
    }
    return q;
  };

  std::vector<Question> qs;
  qs.push_back(make_q("f1", QuestionType::factoid, {{"p53"}}));
  qs.push_back(make_q("f2", QuestionType::factoid,
                      {{"CMT4D disease", "Charcot-Marie-Tooth (CMT) 4D disease"}}));
  qs.push_back(make_q("f3", QuestionType::factoid, {{"Beta glucocerebrosidase"}}));
  qs.push_back(make_q("f4", QuestionType::factoid, {{"chromosome XII"}}));
  qs.push_back(make_q("f5", QuestionType::factoid,
                      {{"6th to 10th week of gestation",
                        "first trimester of pregnancy"}}));
  qs.push_back(make_q("f6", QuestionType::factoid, {{"unseen"}}));
  qs.push_back(make_q("l1", QuestionType::list, {{"ans-a"}, {"ans-b"}}));
  qs.push_back(make_q("l2", QuestionType::list,
                      {{"fluorouracil"}, {"epirubicin"}, {"cyclophosphamide"}}));
  qs.push_back(make_q("l3", QuestionType::list, {{"syn-1", "syn-2"}}));
  qs.push_back(make_q("l4", QuestionType::list, {{"gone"}}));

  std::map<std::string, PredictedAnswers> preds;
  preds["f1"] = {{"P53", "mdm2"}, {}};
  preds["f2"] = {{"wrong", "cmt4d disease"}, {}};  // synonym-positive at rank 2
  preds["f3"] = {{"β-glucocerebrosidase", "nope"}, {}};  // string-mismatch negative
  preds["f4"] = {{"chromosome  XII"}, {}};
  preds["f5"] = {{"a", "b", "c", "first trimester of pregnancy"}, {}};
  preds["l1"] = {{}, {"ans-a", "ans-b"}};
  preds["l2"] = {{}, {"fluorouracil", "Epirubicin"}};
  preds["l3"] = {{}, {"syn-1", "syn-2"}};
  preds["l4"] = {{}, {}};

  const EvalReport rep = evaluate(preds, qs);
  const double expected_mrr = 2.75 / 6.0;         // ranks 1, 2, -, 1, 4, -
  const double expected_p = 0.625;                // (1 + 1 + 0.5 + 0) / 4
  const double expected_r = (2.0 + 2.0 / 3.0) / 4.0;
  const double expected_f1 = 37.0 / 60.0;         // (1 + 0.8 + 2/3 + 0) / 4

  char buf[256];
  std::snprintf(buf, sizeof(buf), "MRR %.9f, list p/r/F1 %.6f/%.6f/%.6f",
                rep.factoid_mrr, rep.list_precision, rep.list_recall, rep.list_f1);
  const bool ok = std::abs(rep.factoid_mrr - expected_mrr) < 1e-9 &&
                  std::abs(rep.list_precision - expected_p) < 1e-9 &&
                  std::abs(rep.list_recall - expected_r) < 1e-9 &&
                  std::abs(rep.list_f1 - expected_f1) < 1e-9;
  return {ok, buf};
}

Outcome threshold_optimality() {
  Rng rng(6060);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Question> qs;
    SpanPredictions sp;
    const int nq = 1 + static_cast<int>(rng.below(4));
    for (int k = 0; k < nq; ++k) {
      Question q;
      q.id = "q" + std::to_string(k);
      q.qtype = QuestionType::list;
      const int n_gold = 1 + static_cast<int>(rng.below(3));
      for (int g = 0; g < n_gold; ++g) {
        AnswerGroup ag;
        ag.synonyms = {"g" + std::to_string(g)};
        q.gold.push_back(ag);
      }
      qs.push_back(q);
      std::vector<TokenSpan> spans;
      const int n_spans = 1 + static_cast<int>(rng.below(5));
      for (int s = 0; s < n_spans; ++s) {
        TokenSpan span;
        span.prob = rng.next_double();
        span.text = rng.next_double() < 0.5 ? "g" + std::to_string(rng.below(3))
                                            : "junk" + std::to_string(s);
        spans.push_back(span);
      }
      std::sort(spans.begin(), spans.end(),
                [](const TokenSpan& a, const TokenSpan& b) {
                  return a.prob > b.prob;
                });
      sp[q.id] = spans;
    }

    const double t = tune_threshold(sp, qs);
    auto mean_f1_at = [&](double cut) {
      DecodingConfig cfg;
      cfg.list_threshold = cut;
      double sum = 0.0;
      for (const Question& q : qs)
        sum += question_list_f1(list_answers(sp[q.id], cfg), q.gold).f1;
      return sum / qs.size();
    };
    std::set<double> candidates{0.0};
    for (const auto& [id, spans] : sp)
      for (const TokenSpan& s : spans) candidates.insert(s.prob);
    const double best = mean_f1_at(t);
    for (double c : candidates) {
      if (mean_f1_at(c) > best)
        return {false, "better cutoff exists at trial " + std::to_string(trial)};
      if (mean_f1_at(c) == best && c > t)
        return {false, "tie not broken to the largest threshold"};
    }
  }
  return {true, "50 random dev fixtures, exact"};
}

Outcome ensemble_identity() {
  const ModelParams model = init_params(toy_emb(8), 16, 77);
  const auto qs = synthetic_dataset(6, 78);
  EmbeddingResources res;
  DecodingConfig cfg;

  for (int copies : {1, 2, 5}) {
    const std::vector<const ModelParams*> members(copies, &model);
    for (const Question& q : qs) {
      const auto single = predict_question({&model}, {}, q, res, cfg);
      const auto multi = predict_question(members, {}, q, res, cfg);
      if (single.spans.size() != multi.spans.size())
        return {false, "span count changed with " + std::to_string(copies) +
                           " copies"};
      for (size_t i = 0; i < single.spans.size(); ++i)
        if (std::abs(single.spans[i].prob - multi.spans[i].prob) > 1e-12 ||
            single.spans[i].text != multi.spans[i].text)
          return {false, "probabilities drifted past 1e-12"};
    }
  }

  const ModelParams m2 = init_params(toy_emb(8), 16, 79);
  const ModelParams m3 = init_params(toy_emb(8), 16, 80);
  for (const Question& q : qs) {
    const auto a = predict_question({&model, &m2, &m3}, {}, q, res, cfg);
    const auto b = predict_question({&m3, &model, &m2}, {}, q, res, cfg);
    if (a.spans.size() != b.spans.size())
      return {false, "member permutation changed span count"};
    for (size_t i = 0; i < a.spans.size(); ++i)
      if (a.spans[i].text != b.spans[i].text ||
          std::abs(a.spans[i].prob - b.spans[i].prob) > 1e-12)
        return {false, "member permutation changed output"};
  }
  return {true, "N in {1,2,5} within 1e-12, permutation-invariant"};
}

Outcome cli_determinism() {
  if (g_cli_path.empty()) return {false, "bioqa binary path not provided"};
  const fs::path dir = fs::temp_directory_path() / "bioqa_accept_det";
  fs::create_directories(dir);
  const std::string data = (dir / "data.json").string();
  if (run_cli("gen-synthetic --n 12 --seed 3 --out " + data) != 0)
    return {false, "gen-synthetic failed"};

  const std::string common =
      " --data " + data + " --seed 17 --hidden 12 --char-dim 4 --char-width 3"
      " --char-filters 6 --steps 40 --batch-size 4 --dropout 0.5"
      " --checkpoint-every 20 --dev " + data;
  const std::string c1 = (dir / "a.bqc").string();
  const std::string c2 = (dir / "b.bqc").string();
  const std::string l1 = (dir / "a.csv").string();
  const std::string l2 = (dir / "b.csv").string();
  if (run_cli("train" + common + " --out " + c1 + " --log " + l1) != 0)
    return {false, "first training run failed"};
  if (run_cli("train" + common + " --out " + c2 + " --log " + l2) != 0)
    return {false, "second training run failed"};

  const uint64_t h1 = fnv1a_file(c1);
  const uint64_t h2 = fnv1a_file(c2);
  std::ifstream f1(l1), f2(l2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  char buf[128];
  std::snprintf(buf, sizeof(buf), "checkpoint checksums %016llx == %016llx",
                static_cast<unsigned long long>(h1),
                static_cast<unsigned long long>(h2));
  return {h1 == h2 && s1.str() == s2.str(), buf};
}

Outcome cv_partition() {
  for (int n : {10, 11, 487}) {
    const auto qs = synthetic_dataset(n, 5);
    const auto folds = make_folds(qs, 5, 99);
    std::set<std::string> seen;
    size_t smallest = qs.size(), largest = 0, total = 0;
    for (const auto& fold : folds) {
      smallest = std::min(smallest, fold.size());
      largest = std::max(largest, fold.size());
      total += fold.size();
      for (const Question& q : fold)
        if (!seen.insert(q.id).second)
          return {false, "duplicate question across folds at n=" +
                             std::to_string(n)};
    }
    if (total != qs.size() || seen.size() != qs.size())
      return {false, "folds are not union-complete at n=" + std::to_string(n)};
    if (largest - smallest > 1)
      return {false, "fold sizes unbalanced at n=" + std::to_string(n)};
  }
  return {true, "n in {10, 11, 487}: disjoint, complete, balanced"};
}

Outcome external_bioasq() {
  const char* path = std::getenv("BIOASQ_TRAIN_JSON");
  if (!path || !*path) return {true, "SKIP (set BIOASQ_TRAIN_JSON to enable)"};
  const auto qs = load_bioasq(path);
  const DatasetStats st = dataset_stats(qs);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "factoid %d (want 413), list %d (want 486), extractable "
                "%.3f/%.3f (want ~0.65/~0.92)",
                st.n_factoid, st.n_list, st.extractable_fraction_factoid,
                st.extractable_fraction_list);
  const bool ok = st.n_factoid == 413 && st.n_list == 486 &&
                  std::abs(st.extractable_fraction_factoid - 0.65) <= 0.03 &&
                  std::abs(st.extractable_fraction_list - 0.92) <= 0.03;
  return {ok, buf};
}

}  // namespace

int main(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--cli") g_cli_path = argv[i + 1];
  if (g_cli_path.empty())
    if (const char* env = std::getenv("BIOQA_CLI")) g_cli_path = env;

  int failures = 0;
  auto run = [&](const std::string& name, const std::function<Outcome()>& fn) {
    Outcome out;
    try {
      out = fn();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %-28s %s\n", out.pass ? "PASS" : "FAIL", name.c_str(),
                out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  };

  run("gradient-correctness", gradient_correctness);
  run("decoding-oracle", decoding_oracle);
  run("probability-identities", probability_identities);
  run("overfit-check", overfit_check);
  {
    const ToyTransfer t = make_toy_transfer();
    run("forgetting-cost-behavior", [&] { return forgetting_cost_behavior(t); });
    run("l2-pull-behavior", [&] { return l2_pull_behavior(t); });
  }
  run("metric-oracles", metric_oracles);
  run("threshold-optimality", threshold_optimality);
  run("ensemble-identity", ensemble_identity);
  run("cli-determinism", cli_determinism);
  run("cv-partition", cv_partition);
  run("external-bioasq-data", external_bioasq);

  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
