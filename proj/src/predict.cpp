#include "bioqa/predict.hpp"

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "bioqa/encoder.hpp"
#include "bioqa/ensemble.hpp"
#include "bioqa/errors.hpp"
#include "json.hpp"

namespace bioqa {

using nlohmann::json;

QuestionPrediction predict_question(const std::vector<const ModelParams*>& models,
                                    const std::vector<double>& weights,
                                    const Question& question,
                                    const EmbeddingResources& res,
                                    const DecodingConfig& cfg) {
  if (models.empty()) throw EmptyEnsemble("predict: no models");
  for (const ModelParams* m : models)
    if (!same_shape(*m, *models[0]))
      throw ShapeMismatch("predict: member parameter shapes differ");

  QuestionPrediction out;
  out.id = question.id;
  out.qtype = question.qtype;

  const bool is_list = question.qtype == QuestionType::list;
  std::vector<std::vector<TokenSpan>> per_snippet;
  for (int si = 0; si < static_cast<int>(question.snippets.size()); ++si) {
    const Snippet& snippet = question.snippets[si];
    if (snippet.tokens.empty()) continue;

    const Matrix wiq = wiq_features(question.question_tokens, snippet.tokens,
                                    res.open_table, res.domain_table);

    // First pass: each member picks its own top starts.
    std::vector<ScoreSet> member_scores;
    std::vector<int> start_union;
    for (const ModelParams* m : models) {
      const EmbeddedSequence q_emb =
          embed_sequence(question.question_tokens, is_list, res.open_table,
                         res.domain_table, m->char_cnn, res.entity_dict, m->emb);
      const EmbeddedSequence c_emb =
          embed_sequence(snippet.tokens, is_list, res.open_table,
                         res.domain_table, m->char_cnn, res.entity_dict, m->emb);
      ForwardOptions opts;
      opts.top_k_starts = cfg.k_starts;
      ScoreSet sc = forward(q_emb.emb, c_emb.emb, wiq, *m, opts);
      start_union.insert(start_union.end(), sc.selected_starts.begin(),
                         sc.selected_starts.end());
      member_scores.push_back(std::move(sc));
    }
    std::sort(start_union.begin(), start_union.end());
    start_union.erase(std::unique(start_union.begin(), start_union.end()),
                      start_union.end());

    // Second pass where a member is missing rows from the union.
    for (size_t mi = 0; mi < models.size(); ++mi) {
      if (member_scores[mi].selected_starts == start_union) continue;
      const ModelParams* m = models[mi];
      const EmbeddedSequence q_emb =
          embed_sequence(question.question_tokens, is_list, res.open_table,
                         res.domain_table, m->char_cnn, res.entity_dict, m->emb);
      const EmbeddedSequence c_emb =
          embed_sequence(snippet.tokens, is_list, res.open_table,
                         res.domain_table, m->char_cnn, res.entity_dict, m->emb);
      ForwardOptions opts;
      opts.requested_starts = start_union;
      member_scores[mi] = forward(q_emb.emb, c_emb.emb, wiq, *m, opts);
    }

    const ScoreSet averaged = average_scores(member_scores, weights);
    per_snippet.push_back(dedup(decode_spans(averaged, snippet, si, cfg)));
  }

  out.spans = merge_snippets(per_snippet);
  out.factoid_ranked = factoid_answers(out.spans, cfg);
  out.list_set = list_answers(out.spans, cfg);
  return out;
}

std::vector<QuestionPrediction> predict_all(
    const std::vector<const ModelParams*>& models,
    const std::vector<double>& weights, const std::vector<Question>& questions,
    const EmbeddingResources& res, const DecodingConfig& cfg, int threads) {
  std::vector<QuestionPrediction> out(questions.size());
  if (threads <= 1) {
    for (size_t i = 0; i < questions.size(); ++i)
      out[i] = predict_question(models, weights, questions[i], res, cfg);
    return out;
  }
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= questions.size()) break;
      out[i] = predict_question(models, weights, questions[i], res, cfg);
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min<int>(threads, static_cast<int>(questions.size()));
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  return out;
}

std::map<std::string, PredictedAnswers> to_answer_map(
    const std::vector<QuestionPrediction>& predictions) {
  std::map<std::string, PredictedAnswers> out;
  for (const QuestionPrediction& p : predictions)
    out[p.id] = PredictedAnswers{p.factoid_ranked, p.list_set};
  return out;
}

SpanPredictions to_span_map(const std::vector<QuestionPrediction>& predictions) {
  SpanPredictions out;
  for (const QuestionPrediction& p : predictions) out[p.id] = p.spans;
  return out;
}

void save_predictions(const std::vector<QuestionPrediction>& predictions,
                      double list_threshold, const std::string& path) {
  json jpreds = json::array();
  for (const QuestionPrediction& p : predictions) {
    json jspans = json::array();
    for (const TokenSpan& s : p.spans)
      jspans.push_back({{"text", s.text},
                        {"prob", s.prob},
                        {"snippet_id", s.snippet_id},
                        {"snippet_index", s.snippet_index},
                        {"token_start", s.token_start},
                        {"token_end", s.token_end},
                        {"char_begin", s.char_begin},
                        {"char_end", s.char_end}});
    jpreds.push_back({{"id", p.id},
                      {"type", to_string(p.qtype)},
                      {"spans", jspans},
                      {"factoid_answers", p.factoid_ranked},
                      {"list_answers", p.list_set}});
  }
  json root = {{"format", "bioqa.predictions.v1"},
               {"list_threshold", list_threshold},
               {"predictions", jpreds}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << root.dump(2) << "\n";
}

std::vector<QuestionPrediction> load_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  json root;
  try {
    in >> root;
  } catch (const json::parse_error& e) {
    throw MalformedInput(path + ": " + e.what());
  }
  if (!root.contains("predictions") || !root["predictions"].is_array())
    throw MalformedInput(path + ": missing 'predictions'");

  std::vector<QuestionPrediction> out;
  for (const json& jp : root["predictions"]) {
    QuestionPrediction p;
    p.id = jp.at("id").get<std::string>();
    p.qtype = question_type_from_string(jp.at("type").get<std::string>());
    for (const json& js : jp.at("spans")) {
      TokenSpan s;
      s.text = js.at("text").get<std::string>();
      s.prob = js.at("prob").get<double>();
      s.snippet_id = js.at("snippet_id").get<std::string>();
      s.snippet_index = js.value("snippet_index", 0);
      s.token_start = js.value("token_start", 0);
      s.token_end = js.value("token_end", 0);
      s.char_begin = js.value("char_begin", 0);
      s.char_end = js.value("char_end", 0);
      p.spans.push_back(std::move(s));
    }
    p.factoid_ranked = jp.at("factoid_answers").get<std::vector<std::string>>();
    p.list_set = jp.at("list_answers").get<std::vector<std::string>>();
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace bioqa
