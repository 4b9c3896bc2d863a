#include "bioqa/ensemble.hpp"

#include <cmath>
#include <fstream>

#include "bioqa/checkpoint.hpp"
#include "bioqa/errors.hpp"
#include "json.hpp"

namespace bioqa {

using nlohmann::json;

EnsembleSpec load_ensemble_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json root;
  try {
    in >> root;
  } catch (const json::parse_error& e) {
    throw MalformedInput(path + ": " + e.what());
  }
  EnsembleSpec spec;
  if (!root.contains("checkpoints") || !root["checkpoints"].is_array() ||
      root["checkpoints"].empty())
    throw MalformedInput(path + ": 'checkpoints' must be a non-empty array");
  for (const json& c : root["checkpoints"])
    spec.checkpoint_paths.push_back(c.get<std::string>());
  if (root.contains("weights")) {
    for (const json& w : root["weights"])
      spec.weights.push_back(w.get<double>());
    if (spec.weights.size() != spec.checkpoint_paths.size())
      throw MalformedInput(path + ": weights/checkpoints length mismatch");
    double sum = 0.0;
    for (double w : spec.weights) sum += w;
    if (std::abs(sum - 1.0) > 1e-9)
      throw MalformedInput(path + ": weights must sum to 1");
  }
  return spec;
}

ScoreSet average_scores(const std::vector<ScoreSet>& sets,
                        const std::vector<double>& weights) {
  if (sets.empty()) throw EmptyEnsemble("average_scores: no score sets");
  if (!weights.empty() && weights.size() != sets.size())
    throw ShapeMismatch("average_scores: weight count mismatch");

  const ScoreSet& first = sets[0];
  for (const ScoreSet& s : sets) {
    if (s.n != first.n)
      throw ShapeMismatch("average_scores: context length mismatch");
    if (s.selected_starts != first.selected_starts)
      throw ShapeMismatch("average_scores: selected starts differ");
  }

  const double uniform = 1.0 / static_cast<double>(sets.size());
  auto weight = [&](size_t k) { return weights.empty() ? uniform : weights[k]; };

  ScoreSet out;
  out.n = first.n;
  out.selected_starts = first.selected_starts;
  out.start_scores.assign(first.n, 0.0);
  for (size_t k = 0; k < sets.size(); ++k)
    for (int i = 0; i < first.n; ++i)
      out.start_scores[i] += weight(k) * sets[k].start_scores[i];

  for (int i : first.selected_starts) {
    Vector row(first.end_scores.at(i).size(), 0.0);
    for (size_t k = 0; k < sets.size(); ++k) {
      const Vector& r = sets[k].end_scores.at(i);
      if (r.size() != row.size())
        throw ShapeMismatch("average_scores: end row length mismatch");
      for (size_t j = 0; j < row.size(); ++j) row[j] += weight(k) * r[j];
    }
    out.end_scores[i] = std::move(row);
  }
  return out;
}

Ensemble Ensemble::load(const EnsembleSpec& spec) {
  if (spec.checkpoint_paths.empty())
    throw EmptyEnsemble("ensemble: no checkpoints");
  Ensemble e;
  for (const std::string& path : spec.checkpoint_paths)
    e.members.push_back(load_checkpoint(path));
  for (size_t i = 1; i < e.members.size(); ++i)
    if (!same_shape(e.members[i], e.members[0]))
      throw ShapeMismatch("ensemble: member parameter shapes differ");
  e.weights = spec.weights;
  return e;
}

std::vector<const ModelParams*> Ensemble::member_ptrs() const {
  std::vector<const ModelParams*> out;
  out.reserve(members.size());
  for (const ModelParams& m : members) out.push_back(&m);
  return out;
}

QuestionPrediction ensemble_predict(const Ensemble& ensemble,
                                    const Question& question,
                                    const EmbeddingResources& res,
                                    const DecodingConfig& cfg) {
  return predict_question(ensemble.member_ptrs(), ensemble.weights, question,
                          res, cfg);
}

}  // namespace bioqa
