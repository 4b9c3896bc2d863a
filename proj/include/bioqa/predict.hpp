#pragma once

#include <string>
#include <vector>

#include "bioqa/dataset.hpp"
#include "bioqa/embedding.hpp"
#include "bioqa/metrics.hpp"
#include "bioqa/model.hpp"
#include "bioqa/spanner.hpp"

namespace bioqa {

// Frozen lookup inputs shared by every model.
struct EmbeddingResources {
  const WordVectorTable* open_table = nullptr;
  const WordVectorTable* domain_table = nullptr;
  const EntityDictionary* entity_dict = nullptr;
};

struct QuestionPrediction {
  std::string id;
  QuestionType qtype = QuestionType::factoid;
  std::vector<TokenSpan> spans;  // merged, deduped, ranked
  std::vector<std::string> factoid_ranked;
  std::vector<std::string> list_set;
};

// Runs every model over each snippet, averages their raw scores over the
// union of the models' top starts, then decodes, dedups and merges. A
// single model is the one-member case of the same path.
QuestionPrediction predict_question(const std::vector<const ModelParams*>& models,
                                    const std::vector<double>& weights,
                                    const Question& question,
                                    const EmbeddingResources& res,
                                    const DecodingConfig& cfg);

// threads <= 1 runs inline; otherwise questions are scored in parallel
// with results placed by index, so output order never depends on timing.
std::vector<QuestionPrediction> predict_all(
    const std::vector<const ModelParams*>& models,
    const std::vector<double>& weights, const std::vector<Question>& questions,
    const EmbeddingResources& res, const DecodingConfig& cfg, int threads = 1);

std::map<std::string, PredictedAnswers> to_answer_map(
    const std::vector<QuestionPrediction>& predictions);
SpanPredictions to_span_map(const std::vector<QuestionPrediction>& predictions);

// Prediction dump (JSON): per question id, type, ranked spans with
// probabilities and provenance, and the final answers.
void save_predictions(const std::vector<QuestionPrediction>& predictions,
                      double list_threshold, const std::string& path);
std::vector<QuestionPrediction> load_predictions(const std::string& path);

}  // namespace bioqa
