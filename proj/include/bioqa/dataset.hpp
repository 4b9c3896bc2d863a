#pragma once

#include <string>
#include <vector>

#include "bioqa/tokenize.hpp"

namespace bioqa {

struct Snippet {
  std::string id;
  std::string text;
  std::vector<Token> tokens;
};

// A gold answer span, expressed in token indices of one snippet.
// token_end is inclusive (the span covers tokens [token_start, token_end]).
struct SpanRef {
  int snippet_index = 0;
  std::string snippet_id;
  int token_start = 0;
  int token_end = 0;

  bool operator==(const SpanRef&) const = default;
};

// One gold answer plus its accepted synonyms, with every token-aligned
// occurrence found in the question's snippets. Empty spans mark a
// non-extractable answer.
struct AnswerGroup {
  std::vector<std::string> synonyms;
  std::vector<SpanRef> spans;
};

enum class QuestionType { factoid, list };

std::string to_string(QuestionType t);
QuestionType question_type_from_string(const std::string& s);

struct Question {
  std::string id;
  QuestionType qtype = QuestionType::factoid;
  std::string text;
  std::vector<Token> question_tokens;
  std::vector<Snippet> snippets;
  std::vector<AnswerGroup> gold;

  bool extractable() const {
    for (const auto& g : gold)
      if (!g.spans.empty()) return true;
    return false;
  }
};

struct DatasetStats {
  int n_questions = 0;
  int n_factoid = 0;
  int n_list = 0;
  double mean_snippets_per_question = 0.0;
  double mean_tokens_per_snippet = 0.0;
  double extractable_fraction_factoid = 0.0;
  double extractable_fraction_list = 0.0;
};

// Every token-aligned, case-insensitive occurrence of any synonym.
// Order: snippet, then start, then end; exact duplicates collapsed.
std::vector<SpanRef> annotate_spans(const std::vector<Snippet>& snippets,
                                    const std::vector<std::string>& synonyms);

// SQuAD v1.1 reader: every QA pair becomes a factoid question over its
// paragraph context; distinct answer texts form one synonym group.
std::vector<Question> load_squad(const std::string& path);

// BioASQ Task B training reader; only factoid and list questions are kept.
std::vector<Question> load_bioasq(const std::string& path);

// Throws EmptyDataset on an empty input.
DatasetStats dataset_stats(const std::vector<Question>& questions);

// Questions with at least one extractable answer, original order.
std::vector<Question> filter_trainable(const std::vector<Question>& questions);

// Canonical dataset dump consumed by the train/predict/evaluate commands.
void save_dataset(const std::vector<Question>& questions,
                  const std::string& path);
std::vector<Question> load_dataset(const std::string& path);

std::string dataset_to_json(const std::vector<Question>& questions);
std::vector<Question> dataset_from_json(const std::string& json_text);

}  // namespace bioqa
