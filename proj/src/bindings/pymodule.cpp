// Python bindings: dataset handling, training, prediction and evaluation.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "bioqa/checkpoint.hpp"
#include "bioqa/dataset.hpp"
#include "bioqa/ensemble.hpp"
#include "bioqa/errors.hpp"
#include "bioqa/metrics.hpp"
#include "bioqa/predict.hpp"
#include "bioqa/synthetic.hpp"
#include "bioqa/tokenize.hpp"
#include "bioqa/trainer.hpp"

namespace py = pybind11;
using namespace bioqa;

namespace {

// Owns frozen lookup tables for one call.
struct Resources {
  std::optional<WordVectorTable> open_table;
  std::optional<WordVectorTable> domain_table;
  std::optional<EntityDictionary> dict;

  Resources(const std::string& open_vectors, int open_dim,
            const std::string& domain_vectors, int domain_dim,
            const std::string& entity_dict) {
    if (!open_vectors.empty())
      open_table = load_word_vectors(open_vectors, open_dim);
    if (!domain_vectors.empty())
      domain_table = load_word_vectors(domain_vectors, domain_dim);
    if (!entity_dict.empty()) dict = load_entity_dictionary(entity_dict);
  }

  EmbeddingResources view() const {
    EmbeddingResources r;
    if (open_table) r.open_table = &*open_table;
    if (domain_table) r.domain_table = &*domain_table;
    if (dict) r.entity_dict = &*dict;
    return r;
  }
};

struct PyDataset {
  std::vector<Question> questions;
};

py::dict stats_dict(const DatasetStats& st) {
  py::dict d;
  d["n_questions"] = st.n_questions;
  d["n_factoid"] = st.n_factoid;
  d["n_list"] = st.n_list;
  d["mean_snippets_per_question"] = st.mean_snippets_per_question;
  d["mean_tokens_per_snippet"] = st.mean_tokens_per_snippet;
  d["extractable_fraction_factoid"] = st.extractable_fraction_factoid;
  d["extractable_fraction_list"] = st.extractable_fraction_list;
  return d;
}

py::dict prediction_dict(const QuestionPrediction& p) {
  py::dict d;
  d["id"] = p.id;
  d["type"] = to_string(p.qtype);
  py::list spans;
  for (const TokenSpan& s : p.spans) {
    py::dict js;
    js["text"] = s.text;
    js["prob"] = s.prob;
    js["snippet_id"] = s.snippet_id;
    js["token_start"] = s.token_start;
    js["token_end"] = s.token_end;
    js["char_begin"] = s.char_begin;
    js["char_end"] = s.char_end;
    spans.append(js);
  }
  d["spans"] = spans;
  d["factoid_answers"] = p.factoid_ranked;
  d["list_answers"] = p.list_set;
  return d;
}

QuestionPrediction prediction_from_dict(const py::dict& d) {
  QuestionPrediction p;
  p.id = d["id"].cast<std::string>();
  p.qtype = question_type_from_string(d["type"].cast<std::string>());
  if (d.contains("spans"))
    for (py::handle h : d["spans"]) {
      const py::dict js = h.cast<py::dict>();
      TokenSpan s;
      s.text = js["text"].cast<std::string>();
      s.prob = js["prob"].cast<double>();
      if (js.contains("snippet_id"))
        s.snippet_id = js["snippet_id"].cast<std::string>();
      p.spans.push_back(std::move(s));
    }
  if (d.contains("factoid_answers"))
    p.factoid_ranked = d["factoid_answers"].cast<std::vector<std::string>>();
  if (d.contains("list_answers"))
    p.list_set = d["list_answers"].cast<std::vector<std::string>>();
  return p;
}

py::dict report_dict(const EvalReport& rep) {
  py::dict d;
  d["factoid_mrr"] = rep.factoid_mrr;
  d["list_precision"] = rep.list_precision;
  d["list_recall"] = rep.list_recall;
  d["list_f1"] = rep.list_f1;
  d["n_factoid_evaluated"] = rep.n_factoid_evaluated;
  d["n_list_evaluated"] = rep.n_list_evaluated;
  py::list per;
  for (const PerQuestionResult& p : rep.per_question) {
    py::dict jp;
    jp["id"] = p.id;
    jp["type"] = to_string(p.qtype);
    jp["metric"] = p.metric;
    if (p.qtype == QuestionType::factoid)
      jp["rank"] = p.rank;
    else
      jp["matches"] = p.matches;
    per.append(jp);
  }
  d["per_question"] = per;
  return d;
}

std::vector<QuestionPrediction> predictions_from_list(const py::list& preds) {
  std::vector<QuestionPrediction> out;
  for (py::handle h : preds)
    out.push_back(prediction_from_dict(h.cast<py::dict>()));
  return out;
}

}  // namespace

PYBIND11_MODULE(_bioqa, m) {
  m.doc() = "extractive question answering: span model, transfer learning, "
            "BioASQ-style evaluation";

  py::register_exception<Error>(m, "BioqaError");

  m.def(
      "tokenize",
      [](const std::string& text) {
        py::list out;
        for (const Token& t : tokenize(text)) {
          py::dict d;
          d["text"] = t.text;
          d["begin"] = t.char_begin;
          d["end"] = t.char_end;
          out.append(d);
        }
        return out;
      },
      py::arg("text"),
      "Whitespace tokenization with punctuation peeling; code point offsets.");

  m.def("match_answer", &match_answer, py::arg("predicted"),
        py::arg("gold_synonyms"),
        "Case-insensitive, whitespace-collapsed synonym matching.");

  py::class_<PyDataset>(m, "Dataset")
      .def_static("from_squad",
                  [](const std::string& path) {
                    return PyDataset{load_squad(path)};
                  },
                  py::arg("path"))
      .def_static("from_bioasq",
                  [](const std::string& path) {
                    return PyDataset{load_bioasq(path)};
                  },
                  py::arg("path"))
      .def_static("load",
                  [](const std::string& path) {
                    return PyDataset{load_dataset(path)};
                  },
                  py::arg("path"))
      .def_static("synthetic",
                  [](int n, uint64_t seed, const std::string& cue) {
                    return PyDataset{synthetic_dataset(n, seed, cue)};
                  },
                  py::arg("n"), py::arg("seed") = 1, py::arg("cue") = "marker")
      .def("__len__", [](const PyDataset& d) { return d.questions.size(); })
      .def("ids",
           [](const PyDataset& d) {
             std::vector<std::string> ids;
             for (const Question& q : d.questions) ids.push_back(q.id);
             return ids;
           })
      .def("stats",
           [](const PyDataset& d) { return stats_dict(dataset_stats(d.questions)); })
      .def("filter_trainable",
           [](const PyDataset& d) {
             return PyDataset{filter_trainable(d.questions)};
           })
      .def("save",
           [](const PyDataset& d, const std::string& path) {
             save_dataset(d.questions, path);
           },
           py::arg("path"));

  m.def(
      "make_folds",
      [](const PyDataset& data, int k, uint64_t seed) {
        py::list out;
        for (auto& fold : make_folds(data.questions, k, seed))
          out.append(PyDataset{std::move(fold)});
        return out;
      },
      py::arg("data"), py::arg("k") = 5, py::arg("seed") = 1);

  m.def(
      "train",
      [](const PyDataset& data, const std::string& out_checkpoint,
         uint64_t seed, const PyDataset* dev, int hidden, int steps,
         int batch_size, int checkpoint_every, double lr, double dropout,
         double c_fc, double c_l2, const std::string& base_checkpoint,
         const PyDataset* mix, int char_dim, int char_width, int char_filters,
         const std::string& open_vectors, int open_dim,
         const std::string& domain_vectors, int domain_dim,
         const std::string& entity_dict) {
        const Resources res(open_vectors, open_dim, domain_vectors, domain_dim,
                            entity_dict);
        const bool finetune = !base_checkpoint.empty();
        TrainOptions opts;
        opts.loss.c_fc = c_fc;
        opts.loss.c_l2 = c_l2;
        opts.loss.dropout_rate = dropout;
        opts.schedule = finetune ? TrainSchedule::finetune_defaults()
                                 : TrainSchedule::pretrain_defaults();
        if (lr > 0.0) {
          opts.schedule.initial_lr = lr;
          opts.schedule.lr = lr;
        }
        opts.schedule.max_steps = steps;
        opts.schedule.batch_size = batch_size;
        opts.schedule.checkpoint_every = checkpoint_every;
        opts.seed = seed;

        std::optional<ModelParams> base;
        ModelParams initial;
        if (finetune) {
          base = load_checkpoint(base_checkpoint);
          initial = *base;
        } else {
          EmbeddingConfig emb;
          emb.char_dim = char_dim;
          emb.char_width = char_width;
          emb.char_filters = char_filters;
          if (res.open_table) {
            emb.use_open_domain = true;
            emb.open_dim = res.open_table->dim();
          }
          if (res.domain_table) {
            emb.use_domain = true;
            emb.domain_dim = res.domain_table->dim();
          }
          if (res.dict) emb.use_entity_features = true;
          initial = init_params(emb, hidden, seed);
        }

        const std::vector<Question> empty_dev;
        const TrainResult result =
            train(data.questions, dev ? dev->questions : empty_dev, initial,
                  base ? &*base : nullptr, res.view(), opts,
                  mix ? &mix->questions : nullptr);
        save_checkpoint(result.params, out_checkpoint);

        py::dict summary;
        summary["steps"] = steps;
        summary["final_loss"] =
            result.log.empty() ? 0.0 : result.log.back().l_final;
        summary["dev_metric"] = result.final_dev_metric;
        summary["checkpoint"] = out_checkpoint;
        return summary;
      },
      py::arg("data"), py::arg("out_checkpoint"), py::arg("seed"),
      py::arg("dev") = nullptr, py::arg("hidden") = 16, py::arg("steps") = 100,
      py::arg("batch_size") = 8, py::arg("checkpoint_every") = 0,
      py::arg("lr") = -1.0, py::arg("dropout") = 0.5, py::arg("c_fc") = 0.0,
      py::arg("c_l2") = 0.0, py::arg("base_checkpoint") = "",
      py::arg("mix") = nullptr, py::arg("char_dim") = 8,
      py::arg("char_width") = 5, py::arg("char_filters") = 8,
      py::arg("open_vectors") = "", py::arg("open_dim") = 0,
      py::arg("domain_vectors") = "", py::arg("domain_dim") = 0,
      py::arg("entity_dict") = "",
      "Train (or fine-tune, when base_checkpoint is set) and save a "
      "checkpoint; returns a summary dict.");

  m.def(
      "predict",
      [](const std::vector<std::string>& checkpoints, const PyDataset& data,
         double threshold, int k_starts, int k_spans, int factoid_top,
         int threads, const std::string& open_vectors, int open_dim,
         const std::string& domain_vectors, int domain_dim,
         const std::string& entity_dict) {
        EnsembleSpec spec;
        spec.checkpoint_paths = checkpoints;
        const Ensemble ensemble = Ensemble::load(spec);
        const Resources res(open_vectors, open_dim, domain_vectors, domain_dim,
                            entity_dict);
        DecodingConfig cfg;
        cfg.k_starts = k_starts;
        cfg.k_spans = k_spans;
        cfg.factoid_top = factoid_top;
        cfg.list_threshold = threshold;
        const auto preds =
            predict_all(ensemble.member_ptrs(), ensemble.weights,
                        data.questions, res.view(), cfg, threads);
        py::list out;
        for (const QuestionPrediction& p : preds) out.append(prediction_dict(p));
        return out;
      },
      py::arg("checkpoints"), py::arg("data"), py::arg("threshold") = 0.5,
      py::arg("k_starts") = 20, py::arg("k_spans") = 20,
      py::arg("factoid_top") = 5, py::arg("threads") = 1,
      py::arg("open_vectors") = "", py::arg("open_dim") = 0,
      py::arg("domain_vectors") = "", py::arg("domain_dim") = 0,
      py::arg("entity_dict") = "",
      "Decode answers; several checkpoints form a score-averaging ensemble.");

  m.def(
      "evaluate",
      [](const py::list& predictions, const PyDataset& data) {
        const auto preds = predictions_from_list(predictions);
        return report_dict(evaluate(to_answer_map(preds), data.questions));
      },
      py::arg("predictions"), py::arg("data"),
      "Factoid MRR and macro list precision/recall/F1.");

  m.def(
      "tune_threshold",
      [](const py::list& predictions, const PyDataset& data) {
        const auto preds = predictions_from_list(predictions);
        return tune_threshold(to_span_map(preds), data.questions);
      },
      py::arg("predictions"), py::arg("data"),
      "List-F1-optimal probability cutoff over the dev predictions.");

  m.def(
      "save_predictions",
      [](const py::list& predictions, double threshold, const std::string& path) {
        save_predictions(predictions_from_list(predictions), threshold, path);
      },
      py::arg("predictions"), py::arg("threshold"), py::arg("path"));
}
