#include "bioqa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "bioqa/errors.hpp"
#include "bioqa/rng.hpp"
#include "bioqa/text.hpp"

namespace bioqa {

bool match_answer(const std::string& predicted,
                  const std::vector<std::string>& gold_synonyms) {
  const std::string norm = normalize_answer(predicted);
  for (const std::string& syn : gold_synonyms)
    if (normalize_answer(syn) == norm) return true;
  return false;
}

double question_rr(const std::vector<std::string>& ranked,
                   const AnswerGroup& gold) {
  const int limit = std::min<int>(5, static_cast<int>(ranked.size()));
  for (int r = 0; r < limit; ++r)
    if (match_answer(ranked[r], gold.synonyms)) return 1.0 / (r + 1);
  return 0.0;
}

namespace {

// Augmenting-path maximum matching; sizes here are tiny.
bool try_assign(int pred, const std::vector<std::vector<char>>& edge,
                std::vector<char>& visited, std::vector<int>& group_owner) {
  for (size_t g = 0; g < edge[pred].size(); ++g) {
    if (!edge[pred][g] || visited[g]) continue;
    visited[g] = 1;
    if (group_owner[g] < 0 ||
        try_assign(group_owner[g], edge, visited, group_owner)) {
      group_owner[g] = pred;
      return true;
    }
  }
  return false;
}

}  // namespace

ListScore question_list_f1(const std::vector<std::string>& predicted,
                           const std::vector<AnswerGroup>& gold) {
  ListScore s;
  if (gold.empty()) return s;
  if (predicted.empty()) return s;

  const int np = static_cast<int>(predicted.size());
  const int ng = static_cast<int>(gold.size());
  std::vector<std::vector<char>> edge(np, std::vector<char>(ng, 0));
  for (int p = 0; p < np; ++p)
    for (int g = 0; g < ng; ++g)
      edge[p][g] = match_answer(predicted[p], gold[g].synonyms) ? 1 : 0;

  std::vector<int> group_owner(ng, -1);
  int tp = 0;
  for (int p = 0; p < np; ++p) {
    std::vector<char> visited(ng, 0);
    if (try_assign(p, edge, visited, group_owner)) ++tp;
  }

  s.matched = tp;
  s.precision = static_cast<double>(tp) / np;
  s.recall = static_cast<double>(tp) / ng;
  s.f1 = (s.precision + s.recall) > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

EvalReport evaluate(const std::map<std::string, PredictedAnswers>& predictions,
                    const std::vector<Question>& questions) {
  EvalReport rep;
  double mrr_sum = 0.0;
  double p_sum = 0.0, r_sum = 0.0, f1_sum = 0.0;
  static const PredictedAnswers kEmpty;

  for (const Question& q : questions) {
    auto it = predictions.find(q.id);
    const PredictedAnswers& pred = it == predictions.end() ? kEmpty : it->second;

    PerQuestionResult pq;
    pq.id = q.id;
    pq.qtype = q.qtype;
    if (q.qtype == QuestionType::factoid) {
      ++rep.n_factoid_evaluated;
      double rr = 0.0;
      if (!q.gold.empty()) rr = question_rr(pred.factoid_ranked, q.gold[0]);
      pq.metric = rr;
      pq.rank = rr > 0.0 ? static_cast<int>(std::lround(1.0 / rr)) : 0;
      mrr_sum += rr;
    } else {
      ++rep.n_list_evaluated;
      const ListScore ls = question_list_f1(pred.list_set, q.gold);
      pq.metric = ls.f1;
      pq.matches = ls.matched;
      p_sum += ls.precision;
      r_sum += ls.recall;
      f1_sum += ls.f1;
    }
    rep.per_question.push_back(std::move(pq));
  }

  if (rep.n_factoid_evaluated > 0) rep.factoid_mrr = mrr_sum / rep.n_factoid_evaluated;
  if (rep.n_list_evaluated > 0) {
    rep.list_precision = p_sum / rep.n_list_evaluated;
    rep.list_recall = r_sum / rep.n_list_evaluated;
    rep.list_f1 = f1_sum / rep.n_list_evaluated;
  }
  return rep;
}

double tune_threshold(const SpanPredictions& dev_predictions,
                      const std::vector<Question>& dev_questions) {
  std::vector<const Question*> list_questions;
  std::set<double> candidate_set{0.0};
  bool any_scored = false;
  for (const Question& q : dev_questions) {
    if (q.qtype != QuestionType::list) continue;
    list_questions.push_back(&q);
    auto it = dev_predictions.find(q.id);
    if (it == dev_predictions.end()) continue;
    for (const TokenSpan& s : it->second) {
      candidate_set.insert(s.prob);
      any_scored = true;
    }
  }
  if (list_questions.empty() || !any_scored)
    throw NoListQuestions("tune_threshold: no list question with scored spans");

  double best_t = 0.0;
  double best_f1 = -1.0;
  // Descending order; strict improvement keeps the largest tying cutoff.
  for (auto it = candidate_set.rbegin(); it != candidate_set.rend(); ++it) {
    const double t = *it;
    DecodingConfig cfg;
    cfg.list_threshold = t;
    double f1_sum = 0.0;
    for (const Question* q : list_questions) {
      auto pit = dev_predictions.find(q->id);
      std::vector<std::string> answers;
      if (pit != dev_predictions.end())
        answers = list_answers(pit->second, cfg);
      f1_sum += question_list_f1(answers, q->gold).f1;
    }
    const double mean_f1 = f1_sum / list_questions.size();
    if (mean_f1 > best_f1) {
      best_f1 = mean_f1;
      best_t = t;
    }
  }
  return best_t;
}

std::vector<std::vector<Question>> make_folds(
    const std::vector<Question>& questions, int k, uint64_t seed) {
  if (k < 2) throw TooFewQuestions("make_folds: k must be at least 2");
  if (static_cast<int>(questions.size()) < k)
    throw TooFewQuestions("make_folds: fewer questions than folds");

  std::vector<int> order(questions.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Rng rng(seed);
  rng.shuffle(order);

  const int n = static_cast<int>(questions.size());
  const int base = n / k;
  const int extra = n % k;
  std::vector<std::vector<Question>> folds(k);
  int pos = 0;
  for (int f = 0; f < k; ++f) {
    const int size = base + (f < extra ? 1 : 0);
    for (int i = 0; i < size; ++i) folds[f].push_back(questions[order[pos++]]);
  }
  return folds;
}

EvalReport mean_report(const std::vector<EvalReport>& reports) {
  EvalReport mean;
  if (reports.empty()) return mean;
  for (const EvalReport& r : reports) {
    mean.factoid_mrr += r.factoid_mrr;
    mean.list_precision += r.list_precision;
    mean.list_recall += r.list_recall;
    mean.list_f1 += r.list_f1;
    mean.n_factoid_evaluated += r.n_factoid_evaluated;
    mean.n_list_evaluated += r.n_list_evaluated;
  }
  const double k = static_cast<double>(reports.size());
  mean.factoid_mrr /= k;
  mean.list_precision /= k;
  mean.list_recall /= k;
  mean.list_f1 /= k;
  return mean;
}

}  // namespace bioqa
