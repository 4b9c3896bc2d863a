#include "bioqa/synthetic.hpp"

#include "bioqa/rng.hpp"

namespace bioqa {

namespace {

const char* kFillers[] = {"alpha", "beta",  "gamma", "delta", "omega",
                          "kappa", "sigma", "theta", "lambda"};
const char* kSyllables[] = {"ba", "co", "di", "fu", "ge", "hi", "jo", "ku",
                            "le", "mi", "no", "pa", "qu", "re", "si", "tu"};

std::string make_answer_word(Rng& rng) {
  std::string w = "zq";
  const int n = 2 + static_cast<int>(rng.below(2));
  for (int i = 0; i < n; ++i) w += kSyllables[rng.below(16)];
  return w;
}

std::string filler(Rng& rng) { return kFillers[rng.below(9)]; }

}  // namespace

std::vector<Question> synthetic_dataset(int n_questions, uint64_t seed,
                                        const std::string& cue) {
  Rng rng(seed);
  std::vector<Question> questions;
  for (int k = 0; k < n_questions; ++k) {
    const bool is_list = k % 2 == 1;
    Question q;
    q.id = "synth-" + std::to_string(k);
    q.qtype = is_list ? QuestionType::list : QuestionType::factoid;
    q.text = std::string(is_list ? "which terms follow the " : "which term follows the ") +
             cue + " in sample " + std::to_string(k);
    q.question_tokens = tokenize(q.text);

    if (!is_list) {
      const std::string answer = make_answer_word(rng);
      Snippet s;
      s.id = q.id + "#s0";
      s.text = filler(rng) + " " + filler(rng) + " " + cue + " " + answer +
               " " + filler(rng) + " " + filler(rng);
      s.tokens = tokenize(s.text);
      q.snippets.push_back(std::move(s));
      // every fourth question gets a distractor snippet without the answer
      if (k % 4 == 0) {
        Snippet d;
        d.id = q.id + "#s1";
        d.text = filler(rng) + " " + filler(rng) + " " + filler(rng);
        d.tokens = tokenize(d.text);
        q.snippets.push_back(std::move(d));
      }
      AnswerGroup g;
      g.synonyms.push_back(answer);
      q.gold.push_back(std::move(g));
    } else {
      const std::string a1 = make_answer_word(rng);
      std::string a2 = make_answer_word(rng);
      while (a2 == a1) a2 = make_answer_word(rng);
      Snippet s;
      s.id = q.id + "#s0";
      s.text = filler(rng) + " " + cue + " " + a1 + " " + filler(rng) + " " +
               cue + " " + a2 + " " + filler(rng);
      s.tokens = tokenize(s.text);
      q.snippets.push_back(std::move(s));
      for (const std::string& a : {a1, a2}) {
        AnswerGroup g;
        g.synonyms.push_back(a);
        q.gold.push_back(std::move(g));
      }
    }
    for (AnswerGroup& g : q.gold)
      g.spans = annotate_spans(q.snippets, g.synonyms);
    questions.push_back(std::move(q));
  }
  return questions;
}

}  // namespace bioqa
