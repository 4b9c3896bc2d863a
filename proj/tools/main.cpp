// bioqa: extractive question answering pipeline driver.
//
// Exit codes:
//   0  success
//   1  unexpected error
//   2  malformed input data
//   3  training diverged
//   4  invalid configuration or unusable dataset
//   5  file I/O failure

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "bioqa/checkpoint.hpp"
#include "bioqa/dataset.hpp"
#include "bioqa/ensemble.hpp"
#include "bioqa/errors.hpp"
#include "bioqa/metrics.hpp"
#include "bioqa/predict.hpp"
#include "bioqa/synthetic.hpp"
#include "bioqa/trainer.hpp"

using namespace bioqa;
using nlohmann::json;

namespace {

constexpr const char* kExitCodesFooter =
    "Exit codes: 0 success, 1 unexpected error, 2 malformed input, "
    "3 diverged loss, 4 invalid configuration, 5 I/O failure.";

struct ResourceFlags {
  std::string open_vectors;
  int open_dim = 0;
  std::string domain_vectors;
  int domain_dim = 0;
  std::string entity_dict;
};

void add_resource_flags(CLI::App* cmd, ResourceFlags& rf) {
  cmd->add_option("--open-vectors", rf.open_vectors,
                  "open-domain word vector file (text format)");
  cmd->add_option("--open-dim", rf.open_dim, "open-domain vector width");
  cmd->add_option("--domain-vectors", rf.domain_vectors,
                  "in-domain word vector file (text format)");
  cmd->add_option("--domain-dim", rf.domain_dim, "in-domain vector width");
  cmd->add_option("--entity-dict", rf.entity_dict,
                  "entity dictionary TSV (surface<TAB>type_index)");
}

// Owns the loaded tables; EmbeddingResources points into it.
struct LoadedResources {
  std::optional<WordVectorTable> open_table;
  std::optional<WordVectorTable> domain_table;
  std::optional<EntityDictionary> dict;

  EmbeddingResources view() const {
    EmbeddingResources r;
    if (open_table) r.open_table = &*open_table;
    if (domain_table) r.domain_table = &*domain_table;
    if (dict) r.entity_dict = &*dict;
    return r;
  }
};

LoadedResources load_resources(const ResourceFlags& rf) {
  LoadedResources lr;
  if (!rf.open_vectors.empty()) {
    if (rf.open_dim <= 0)
      throw ConfigMismatch("--open-dim is required with --open-vectors");
    lr.open_table = load_word_vectors(rf.open_vectors, rf.open_dim);
  }
  if (!rf.domain_vectors.empty()) {
    if (rf.domain_dim <= 0)
      throw ConfigMismatch("--domain-dim is required with --domain-vectors");
    lr.domain_table = load_word_vectors(rf.domain_vectors, rf.domain_dim);
  }
  if (!rf.entity_dict.empty()) lr.dict = load_entity_dictionary(rf.entity_dict);
  return lr;
}

void require_resources_for(const ModelParams& params, const LoadedResources& lr) {
  if (params.emb.use_open_domain && !lr.open_table)
    throw ConfigMismatch("checkpoint uses open-domain vectors; pass --open-vectors");
  if (params.emb.use_domain && !lr.domain_table)
    throw ConfigMismatch("checkpoint uses domain vectors; pass --domain-vectors");
  if (params.emb.use_entity_features && !lr.dict)
    throw ConfigMismatch("checkpoint uses entity features; pass --entity-dict");
}

void print_stats(const DatasetStats& st) {
  std::printf("questions:                %d\n", st.n_questions);
  std::printf("  factoid:                %d\n", st.n_factoid);
  std::printf("  list:                   %d\n", st.n_list);
  std::printf("mean snippets/question:   %.4f\n", st.mean_snippets_per_question);
  std::printf("mean tokens/snippet:      %.4f\n", st.mean_tokens_per_snippet);
  std::printf("extractable factoid:      %.4f\n", st.extractable_fraction_factoid);
  std::printf("extractable list:         %.4f\n", st.extractable_fraction_list);
}

json report_to_json(const EvalReport& rep) {
  json per = json::array();
  for (const PerQuestionResult& p : rep.per_question) {
    json jp = {{"id", p.id},
               {"type", to_string(p.qtype)},
               {"metric", p.metric}};
    if (p.qtype == QuestionType::factoid)
      jp["rank"] = p.rank;
    else
      jp["matches"] = p.matches;
    per.push_back(std::move(jp));
  }
  return json{{"format", "bioqa.report.v1"},
              {"factoid_mrr", rep.factoid_mrr},
              {"list_precision", rep.list_precision},
              {"list_recall", rep.list_recall},
              {"list_f1", rep.list_f1},
              {"n_factoid_evaluated", rep.n_factoid_evaluated},
              {"n_list_evaluated", rep.n_list_evaluated},
              {"per_question", per}};
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
}

json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw MalformedInput(path + ": " + e.what());
  }
  return j;
}

// Training configuration: JSON file values overridden by CLI flags.
struct TrainFlags {
  std::string config_path;
  std::string data;
  std::string dev_data;
  std::string base_checkpoint;
  std::string mix_data;
  std::string out_checkpoint;
  std::string log_csv;
  uint64_t seed = 0;
  int hidden = 100;
  int steps = 500;
  int batch_size = 8;
  int checkpoint_every = 50;
  double lr = -1.0;  // phase default when unset
  double dropout = 0.5;
  double c_fc = 0.0;
  double c_l2 = 0.0;
  int char_dim = 8;
  int char_width = 5;
  int char_filters = 8;
  bool entity_features = false;
  int threads = 1;
};

void add_train_flags(CLI::App* cmd, TrainFlags& tf, ResourceFlags& rf,
                     bool finetune, bool checkpoint_outputs = true) {
  cmd->add_option("--config", tf.config_path,
                  "JSON config file; explicit flags override its values");
  cmd->add_option("--data", tf.data, "canonical training dataset JSON");
  cmd->add_option("--dev", tf.dev_data,
                  "canonical dev dataset JSON (checkpoint metric)");
  if (checkpoint_outputs) {
    cmd->add_option("--out", tf.out_checkpoint, "output checkpoint path");
    cmd->add_option("--log", tf.log_csv, "training log CSV path");
  }
  cmd->add_option("--seed", tf.seed, "random seed (required)");
  cmd->add_option("--hidden", tf.hidden, "recurrent hidden size");
  cmd->add_option("--steps", tf.steps, "number of optimizer steps");
  cmd->add_option("--batch-size", tf.batch_size, "questions per step");
  cmd->add_option("--checkpoint-every", tf.checkpoint_every,
                  "steps between dev evaluations (0 disables)");
  cmd->add_option("--lr", tf.lr, "initial learning rate");
  cmd->add_option("--dropout", tf.dropout, "variational dropout rate");
  cmd->add_option("--char-dim", tf.char_dim, "character embedding size");
  cmd->add_option("--char-width", tf.char_width, "character window width");
  cmd->add_option("--char-filters", tf.char_filters, "character filter count");
  cmd->add_flag("--entity-features", tf.entity_features,
                "append entity-type bit features");
  cmd->add_option("--threads", tf.threads, "worker cap for dev evaluation");
  if (finetune) {
    cmd->add_option("--base", tf.base_checkpoint,
                    "base checkpoint to start from (required)");
    cmd->add_option("--c-fc", tf.c_fc, "forgetting cost coefficient");
    cmd->add_option("--c-l2", tf.c_l2, "L2-to-base coefficient");
    cmd->add_option("--mix-data", tf.mix_data,
                    "canonical dataset mixed in half-half during fine-tuning");
  }
  add_resource_flags(cmd, rf);
}

// Applies config-file defaults for flags the user did not pass.
void merge_config_file(const CLI::App* cmd, TrainFlags& tf, ResourceFlags& rf) {
  if (tf.config_path.empty()) return;
  const json cfg = read_json(tf.config_path);
  auto set_if_unset = [&](const char* flag, auto& target, const char* key) {
    if (cmd->count(flag) == 0 && cfg.contains(key))
      target = cfg.at(key).get<std::decay_t<decltype(target)>>();
  };
  set_if_unset("--data", tf.data, "data");
  set_if_unset("--dev", tf.dev_data, "dev_data");
  if (cmd->get_option_no_throw("--out") != nullptr) {
    set_if_unset("--out", tf.out_checkpoint, "out_checkpoint");
    set_if_unset("--log", tf.log_csv, "log_csv");
  }
  set_if_unset("--seed", tf.seed, "seed");
  set_if_unset("--hidden", tf.hidden, "hidden");
  set_if_unset("--steps", tf.steps, "steps");
  set_if_unset("--batch-size", tf.batch_size, "batch_size");
  set_if_unset("--checkpoint-every", tf.checkpoint_every, "checkpoint_every");
  set_if_unset("--lr", tf.lr, "lr");
  set_if_unset("--dropout", tf.dropout, "dropout");
  set_if_unset("--char-dim", tf.char_dim, "char_dim");
  set_if_unset("--char-width", tf.char_width, "char_width");
  set_if_unset("--char-filters", tf.char_filters, "char_filters");
  set_if_unset("--threads", tf.threads, "threads");
  if (cmd->get_option_no_throw("--base") != nullptr) {
    set_if_unset("--base", tf.base_checkpoint, "base_checkpoint");
    set_if_unset("--c-fc", tf.c_fc, "c_fc");
    set_if_unset("--c-l2", tf.c_l2, "c_l2");
    set_if_unset("--mix-data", tf.mix_data, "mix_data");
  }
  set_if_unset("--open-vectors", rf.open_vectors, "open_vectors");
  set_if_unset("--open-dim", rf.open_dim, "open_dim");
  set_if_unset("--domain-vectors", rf.domain_vectors, "domain_vectors");
  set_if_unset("--domain-dim", rf.domain_dim, "domain_dim");
  set_if_unset("--entity-dict", rf.entity_dict, "entity_dict");
}

int run_training(const CLI::App* cmd, TrainFlags& tf, ResourceFlags& rf,
                 bool finetune) {
  merge_config_file(cmd, tf, rf);
  if (tf.data.empty()) throw ConfigMismatch("--data is required");
  if (tf.out_checkpoint.empty()) throw ConfigMismatch("--out is required");
  if (cmd->count("--seed") == 0 && tf.seed == 0)
    throw ConfigMismatch("--seed is required for training commands");
  if (finetune && tf.base_checkpoint.empty())
    throw ConfigMismatch("--base is required for finetune");

  const LoadedResources lr = load_resources(rf);
  const std::vector<Question> data = load_dataset(tf.data);
  std::vector<Question> dev;
  if (!tf.dev_data.empty()) dev = load_dataset(tf.dev_data);

  TrainOptions opts;
  opts.loss.c_fc = tf.c_fc;
  opts.loss.c_l2 = tf.c_l2;
  opts.loss.dropout_rate = tf.dropout;
  opts.schedule = finetune ? TrainSchedule::finetune_defaults()
                           : TrainSchedule::pretrain_defaults();
  if (tf.lr > 0.0) {
    opts.schedule.initial_lr = tf.lr;
    opts.schedule.lr = tf.lr;
  }
  opts.schedule.max_steps = tf.steps;
  opts.schedule.batch_size = tf.batch_size;
  opts.schedule.checkpoint_every = tf.checkpoint_every;
  opts.seed = tf.seed;
  opts.threads = tf.threads;

  std::optional<ModelParams> base;
  ModelParams initial;
  if (finetune) {
    base = load_checkpoint(tf.base_checkpoint);
    require_resources_for(*base, lr);
    initial = *base;
  } else {
    EmbeddingConfig emb;
    emb.char_dim = tf.char_dim;
    emb.char_width = tf.char_width;
    emb.char_filters = tf.char_filters;
    emb.use_entity_features = tf.entity_features;
    if (lr.open_table) {
      emb.use_open_domain = true;
      emb.open_dim = lr.open_table->dim();
    }
    if (lr.domain_table) {
      emb.use_domain = true;
      emb.domain_dim = lr.domain_table->dim();
    }
    if (emb.use_entity_features && !lr.dict)
      throw ConfigMismatch("--entity-features needs --entity-dict");
    initial = init_params(emb, tf.hidden, tf.seed);
  }

  std::optional<std::vector<Question>> mix;
  if (!tf.mix_data.empty()) mix = load_dataset(tf.mix_data);

  const TrainResult result =
      train(data, dev, initial, base ? &*base : nullptr, lr.view(), opts,
            mix ? &*mix : nullptr);

  save_checkpoint(result.params, tf.out_checkpoint);
  if (!tf.log_csv.empty()) write_train_log_csv(result.log, tf.log_csv);

  std::printf("steps:        %d\n", tf.steps);
  std::printf("final loss:   %.6f\n",
              result.log.empty() ? 0.0 : result.log.back().l_final);
  std::printf("dev metric:   %.6f\n", result.final_dev_metric);
  std::printf("checkpoint:   %s\n", tf.out_checkpoint.c_str());
  return 0;
}

double resolve_threshold(double flag_value, const std::string& threshold_file) {
  if (threshold_file.empty()) return flag_value;
  const json j = read_json(threshold_file);
  if (!j.contains("threshold"))
    throw MalformedInput(threshold_file + ": missing 'threshold'");
  return j.at("threshold").get<double>();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bioqa: desk-scale extractive question answering "
               "(span model, transfer learning, BioASQ-style evaluation)"};
  app.require_subcommand(1);
  app.footer(kExitCodesFooter);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "convert a dataset to canonical JSON");
  ingest->footer(kExitCodesFooter);
  std::string ingest_format, ingest_in, ingest_out;
  ingest->add_option("--format", ingest_format, "input format: squad | bioasq")
      ->required()
      ->check(CLI::IsMember({"squad", "bioasq"}));
  ingest->add_option("--in", ingest_in, "input dataset file")->required();
  ingest->add_option("--out", ingest_out, "canonical dataset output")->required();

  // train / finetune
  auto* train_cmd = app.add_subcommand("train", "train a model from scratch");
  train_cmd->footer(kExitCodesFooter);
  TrainFlags train_tf;
  ResourceFlags train_rf;
  add_train_flags(train_cmd, train_tf, train_rf, false);

  auto* finetune_cmd =
      app.add_subcommand("finetune", "continue training from a base checkpoint");
  finetune_cmd->footer(kExitCodesFooter);
  TrainFlags ft_tf;
  ResourceFlags ft_rf;
  add_train_flags(finetune_cmd, ft_tf, ft_rf, true);

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "decode answers for a dataset");
  predict_cmd->footer(kExitCodesFooter);
  std::string pr_ckpt, pr_data, pr_out, pr_threshold_file;
  double pr_threshold = 0.5;
  int pr_k_starts = 20, pr_k_spans = 20, pr_factoid_top = 5, pr_threads = 1;
  ResourceFlags pr_rf;
  predict_cmd->add_option("--checkpoint", pr_ckpt, "model checkpoint")->required();
  predict_cmd->add_option("--data", pr_data, "canonical dataset JSON")->required();
  predict_cmd->add_option("--out", pr_out, "predictions JSON output")->required();
  predict_cmd->add_option("--threshold", pr_threshold,
                          "list answer probability cutoff");
  predict_cmd->add_option("--threshold-file", pr_threshold_file,
                          "JSON file with a tuned {\"threshold\": t}");
  predict_cmd->add_option("--k-starts", pr_k_starts, "start candidates per snippet");
  predict_cmd->add_option("--k-spans", pr_k_spans, "span candidates per snippet");
  predict_cmd->add_option("--factoid-top", pr_factoid_top,
                          "ranked answers for factoid questions");
  predict_cmd->add_option("--threads", pr_threads, "worker cap");
  add_resource_flags(predict_cmd, pr_rf);

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "score predictions against gold");
  eval_cmd->footer(kExitCodesFooter);
  std::string ev_pred, ev_data, ev_out, ev_csv;
  eval_cmd->add_option("--predictions", ev_pred, "predictions JSON")->required();
  eval_cmd->add_option("--data", ev_data, "canonical dataset JSON")->required();
  eval_cmd->add_option("--out", ev_out, "report JSON output");
  eval_cmd->add_option("--csv", ev_csv, "one-line CSV summary output");

  // tune-threshold
  auto* tune_cmd = app.add_subcommand(
      "tune-threshold", "pick the list cutoff maximizing dev list F1");
  tune_cmd->footer(kExitCodesFooter);
  std::string tu_pred, tu_data, tu_out;
  tune_cmd->add_option("--predictions", tu_pred, "dev predictions JSON")->required();
  tune_cmd->add_option("--data", tu_data, "canonical dev dataset JSON")->required();
  tune_cmd->add_option("--out", tu_out, "threshold JSON output")->required();

  // cross-validate
  auto* cv_cmd = app.add_subcommand("cross-validate",
                                    "k-fold cross-validated training/evaluation");
  cv_cmd->footer(kExitCodesFooter);
  TrainFlags cv_tf;
  ResourceFlags cv_rf;
  int cv_k = 5;
  std::string cv_out, cv_csv;
  cv_cmd->add_option("--k", cv_k, "number of folds");
  cv_cmd->add_option("--out", cv_out, "cross-validation report JSON");
  cv_cmd->add_option("--csv", cv_csv, "per-fold CSV summary");
  add_train_flags(cv_cmd, cv_tf, cv_rf, false, false);

  // ensemble
  auto* ens_cmd = app.add_subcommand("ensemble",
                                     "predict with averaged member scores");
  ens_cmd->footer(kExitCodesFooter);
  std::string en_spec, en_data, en_out, en_threshold_file;
  double en_threshold = 0.5;
  int en_threads = 1;
  ResourceFlags en_rf;
  ens_cmd->add_option("--spec", en_spec, "ensemble spec JSON")->required();
  ens_cmd->add_option("--data", en_data, "canonical dataset JSON")->required();
  ens_cmd->add_option("--out", en_out, "predictions JSON output")->required();
  ens_cmd->add_option("--threshold", en_threshold, "list answer probability cutoff");
  ens_cmd->add_option("--threshold-file", en_threshold_file,
                      "JSON file with a tuned {\"threshold\": t}");
  ens_cmd->add_option("--threads", en_threads, "worker cap");
  add_resource_flags(ens_cmd, en_rf);

  // gen-synthetic (demo corpus)
  auto* synth_cmd = app.add_subcommand(
      "gen-synthetic", "write a deterministic toy dataset for smoke runs");
  synth_cmd->footer(kExitCodesFooter);
  int sy_n = 20;
  uint64_t sy_seed = 1;
  std::string sy_out, sy_cue = "marker";
  synth_cmd->add_option("--n", sy_n, "number of questions");
  synth_cmd->add_option("--seed", sy_seed, "random seed");
  synth_cmd->add_option("--cue", sy_cue, "cue token preceding answers");
  synth_cmd->add_option("--out", sy_out, "canonical dataset output")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const std::vector<Question> qs = ingest_format == "squad"
                                           ? load_squad(ingest_in)
                                           : load_bioasq(ingest_in);
      print_stats(dataset_stats(qs));
      save_dataset(qs, ingest_out);
      return 0;
    }
    if (*train_cmd) return run_training(train_cmd, train_tf, train_rf, false);
    if (*finetune_cmd) return run_training(finetune_cmd, ft_tf, ft_rf, true);

    if (*predict_cmd) {
      const ModelParams params = load_checkpoint(pr_ckpt);
      const LoadedResources lr = load_resources(pr_rf);
      require_resources_for(params, lr);
      const std::vector<Question> qs = load_dataset(pr_data);
      DecodingConfig cfg;
      cfg.k_starts = pr_k_starts;
      cfg.k_spans = pr_k_spans;
      cfg.factoid_top = pr_factoid_top;
      cfg.list_threshold = resolve_threshold(pr_threshold, pr_threshold_file);
      const auto preds =
          predict_all({&params}, {}, qs, lr.view(), cfg, pr_threads);
      save_predictions(preds, cfg.list_threshold, pr_out);
      std::printf("predicted %zu questions -> %s\n", preds.size(), pr_out.c_str());
      return 0;
    }

    if (*eval_cmd) {
      const auto preds = load_predictions(ev_pred);
      const auto qs = load_dataset(ev_data);
      const EvalReport rep = evaluate(to_answer_map(preds), qs);
      std::printf("factoid MRR:    %.6f  (n=%d)\n", rep.factoid_mrr,
                  rep.n_factoid_evaluated);
      std::printf("list precision: %.6f\n", rep.list_precision);
      std::printf("list recall:    %.6f\n", rep.list_recall);
      std::printf("list F1:        %.6f  (n=%d)\n", rep.list_f1,
                  rep.n_list_evaluated);
      if (!ev_out.empty()) write_json(report_to_json(rep), ev_out);
      if (!ev_csv.empty()) {
        std::ofstream out(ev_csv, std::ios::binary);
        if (!out) throw IoError("cannot write " + ev_csv);
        out << "factoid_mrr,list_precision,list_recall,list_f1,n_factoid,n_list\n";
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%d,%d\n",
                      rep.factoid_mrr, rep.list_precision, rep.list_recall,
                      rep.list_f1, rep.n_factoid_evaluated, rep.n_list_evaluated);
        out << buf;
      }
      return 0;
    }

    if (*tune_cmd) {
      const auto preds = load_predictions(tu_pred);
      const auto qs = load_dataset(tu_data);
      const double t = tune_threshold(to_span_map(preds), qs);
      write_json(json{{"threshold", t}}, tu_out);
      std::printf("threshold: %.17g -> %s\n", t, tu_out.c_str());
      return 0;
    }

    if (*cv_cmd) {
      merge_config_file(cv_cmd, cv_tf, cv_rf);
      if (cv_tf.data.empty()) throw ConfigMismatch("--data is required");
      if (cv_cmd->count("--seed") == 0 && cv_tf.seed == 0)
        throw ConfigMismatch("--seed is required for training commands");
      const LoadedResources lr = load_resources(cv_rf);
      const auto qs = load_dataset(cv_tf.data);

      TrainOptions opts;
      opts.loss.dropout_rate = cv_tf.dropout;
      opts.schedule = TrainSchedule::pretrain_defaults();
      if (cv_tf.lr > 0.0) {
        opts.schedule.initial_lr = cv_tf.lr;
        opts.schedule.lr = cv_tf.lr;
      }
      opts.schedule.max_steps = cv_tf.steps;
      opts.schedule.batch_size = cv_tf.batch_size;
      opts.schedule.checkpoint_every = cv_tf.checkpoint_every;
      opts.seed = cv_tf.seed;
      opts.threads = cv_tf.threads;

      EmbeddingConfig emb;
      emb.char_dim = cv_tf.char_dim;
      emb.char_width = cv_tf.char_width;
      emb.char_filters = cv_tf.char_filters;
      if (lr.open_table) {
        emb.use_open_domain = true;
        emb.open_dim = lr.open_table->dim();
      }
      if (lr.domain_table) {
        emb.use_domain = true;
        emb.domain_dim = lr.domain_table->dim();
      }

      const CrossValidationResult cv =
          cross_validate(qs, cv_k, emb, cv_tf.hidden, lr.view(), opts);
      for (int f = 0; f < cv_k; ++f)
        std::printf("fold %d: MRR %.6f, list F1 %.6f (threshold %.4f)\n", f,
                    cv.fold_reports[f].factoid_mrr, cv.fold_reports[f].list_f1,
                    cv.fold_thresholds[f]);
      std::printf("mean:   MRR %.6f, list F1 %.6f\n", cv.mean.factoid_mrr,
                  cv.mean.list_f1);

      if (!cv_out.empty()) {
        json folds = json::array();
        for (const EvalReport& rep : cv.fold_reports)
          folds.push_back(report_to_json(rep));
        write_json(json{{"format", "bioqa.cv_report.v1"},
                        {"folds", folds},
                        {"thresholds", cv.fold_thresholds},
                        {"mean", report_to_json(cv.mean)}},
                   cv_out);
      }
      if (!cv_csv.empty()) {
        std::ofstream out(cv_csv, std::ios::binary);
        if (!out) throw IoError("cannot write " + cv_csv);
        out << "fold,factoid_mrr,list_precision,list_recall,list_f1,n_factoid,n_list\n";
        char buf[256];
        for (size_t f = 0; f < cv.fold_reports.size(); ++f) {
          const EvalReport& r = cv.fold_reports[f];
          std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%d,%d\n",
                        f, r.factoid_mrr, r.list_precision, r.list_recall,
                        r.list_f1, r.n_factoid_evaluated, r.n_list_evaluated);
          out << buf;
        }
        std::snprintf(buf, sizeof(buf), "mean,%.17g,%.17g,%.17g,%.17g,%d,%d\n",
                      cv.mean.factoid_mrr, cv.mean.list_precision,
                      cv.mean.list_recall, cv.mean.list_f1,
                      cv.mean.n_factoid_evaluated, cv.mean.n_list_evaluated);
        out << buf;
      }
      return 0;
    }

    if (*ens_cmd) {
      const EnsembleSpec spec = load_ensemble_spec(en_spec);
      const Ensemble ensemble = Ensemble::load(spec);
      const LoadedResources lr = load_resources(en_rf);
      require_resources_for(ensemble.members[0], lr);
      const auto qs = load_dataset(en_data);
      DecodingConfig cfg;
      cfg.list_threshold = resolve_threshold(en_threshold, en_threshold_file);
      const auto preds = predict_all(ensemble.member_ptrs(), ensemble.weights,
                                     qs, lr.view(), cfg, en_threads);
      save_predictions(preds, cfg.list_threshold, en_out);
      std::printf("ensemble of %zu predicted %zu questions -> %s\n",
                  ensemble.members.size(), preds.size(), en_out.c_str());
      return 0;
    }

    if (*synth_cmd) {
      save_dataset(synthetic_dataset(sy_n, sy_seed, sy_cue), sy_out);
      std::printf("wrote %d synthetic questions -> %s\n", sy_n, sy_out.c_str());
      return 0;
    }
  } catch (const DivergedLoss& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const MalformedInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ChecksumError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const EmptyDataset& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const TooFewQuestions& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const NoListQuestions& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const EmptyEnsemble& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
