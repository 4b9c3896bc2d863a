#pragma once

#include <map>
#include <string>
#include <vector>

#include "bioqa/dataset.hpp"
#include "bioqa/spanner.hpp"

namespace bioqa {

struct PerQuestionResult {
  std::string id;
  QuestionType qtype = QuestionType::factoid;
  double metric = 0.0;  // reciprocal rank or F1
  int rank = 0;         // factoid: rank of the first match, 0 if none
  int matches = 0;      // list: matched gold groups
};

struct EvalReport {
  double factoid_mrr = 0.0;
  double list_precision = 0.0;
  double list_recall = 0.0;
  double list_f1 = 0.0;
  int n_factoid_evaluated = 0;
  int n_list_evaluated = 0;
  std::vector<PerQuestionResult> per_question;
};

// Case-insensitive, whitespace-collapsed string equality against any
// synonym.
bool match_answer(const std::string& predicted,
                  const std::vector<std::string>& gold_synonyms);

// Reciprocal rank of the first matching answer among the top five.
double question_rr(const std::vector<std::string>& ranked,
                   const AnswerGroup& gold);

struct ListScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int matched = 0;
};

// One-to-one matching between predicted strings and gold groups: each
// prediction credits at most one group and each group is creditable once
// (maximum bipartite matching, so scoring is order-independent).
ListScore question_list_f1(const std::vector<std::string>& predicted,
                           const std::vector<AnswerGroup>& gold);

// Per-question answers as produced by the predict command.
struct PredictedAnswers {
  std::vector<std::string> factoid_ranked;
  std::vector<std::string> list_set;
};

// Macro means over the respective question types; questions missing from
// the prediction map score zero, extra ids are ignored.
EvalReport evaluate(const std::map<std::string, PredictedAnswers>& predictions,
                    const std::vector<Question>& questions);

// Ranked candidate spans per question id (merged and deduped, with
// probabilities), used for threshold calibration.
using SpanPredictions = std::map<std::string, std::vector<TokenSpan>>;

// Exhaustive search over {0} and all observed span probabilities for the
// cutoff maximizing mean list F1; ties go to the largest threshold.
// Throws NoListQuestions when no list question has a scored span.
double tune_threshold(const SpanPredictions& dev_predictions,
                      const std::vector<Question>& dev_questions);

// Deterministic shuffle, then contiguous folds with sizes differing by at
// most one (larger folds first).
std::vector<std::vector<Question>> make_folds(
    const std::vector<Question>& questions, int k, uint64_t seed);

// Arithmetic mean of the metric fields; counts are summed.
EvalReport mean_report(const std::vector<EvalReport>& reports);

}  // namespace bioqa
