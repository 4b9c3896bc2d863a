#include "bioqa/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "bioqa/errors.hpp"
#include "bioqa/text.hpp"
#include "json.hpp"

namespace bioqa {

using nlohmann::json;

std::string to_string(QuestionType t) {
  return t == QuestionType::factoid ? "factoid" : "list";
}

QuestionType question_type_from_string(const std::string& s) {
  if (s == "factoid") return QuestionType::factoid;
  if (s == "list") return QuestionType::list;
  throw MalformedInput("unknown question type: " + s);
}

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw MalformedInput(path + ": " + e.what());
  }
  return j;
}

const json& require(const json& obj, const char* key, const std::string& at) {
  if (!obj.is_object() || !obj.contains(key))
    throw MalformedInput("missing key '" + std::string(key) + "' at " + at);
  return obj.at(key);
}

std::string require_string(const json& obj, const char* key,
                           const std::string& at) {
  const json& v = require(obj, key, at);
  if (!v.is_string())
    throw MalformedInput("expected string '" + std::string(key) + "' at " +
                         at);
  return v.get<std::string>();
}

Snippet make_snippet(std::string id, std::string text) {
  Snippet s;
  s.id = std::move(id);
  s.text = std::move(text);
  s.tokens = tokenize(s.text);
  return s;
}

void annotate_question(Question& q) {
  for (auto& g : q.gold) g.spans = annotate_spans(q.snippets, g.synonyms);
}

}  // namespace

std::vector<SpanRef> annotate_spans(const std::vector<Snippet>& snippets,
                                    const std::vector<std::string>& synonyms) {
  std::vector<SpanRef> spans;
  for (int si = 0; si < static_cast<int>(snippets.size()); ++si) {
    const Snippet& sn = snippets[si];
    const std::vector<char32_t> cps = utf8_decode(sn.text);
    std::vector<char32_t> lowered(cps);
    for (char32_t& c : lowered) c = ascii_lower(c);

    // Token boundary lookup by character offset.
    std::unordered_map<int, int> begin_to_tok;
    std::unordered_map<int, int> end_to_tok;
    for (int t = 0; t < static_cast<int>(sn.tokens.size()); ++t) {
      begin_to_tok[sn.tokens[t].char_begin] = t;
      end_to_tok[sn.tokens[t].char_end] = t;
    }

    std::vector<SpanRef> local;
    for (const std::string& syn : synonyms) {
      std::vector<char32_t> pat = utf8_decode(syn);
      for (char32_t& c : pat) c = ascii_lower(c);
      if (pat.empty() || pat.size() > lowered.size()) continue;
      const int limit = static_cast<int>(lowered.size() - pat.size());
      for (int o = 0; o <= limit; ++o) {
        if (!std::equal(pat.begin(), pat.end(), lowered.begin() + o)) continue;
        auto b = begin_to_tok.find(o);
        auto e = end_to_tok.find(o + static_cast<int>(pat.size()));
        if (b == begin_to_tok.end() || e == end_to_tok.end()) continue;
        local.push_back(SpanRef{si, sn.id, b->second, e->second});
      }
    }
    std::sort(local.begin(), local.end(), [](const SpanRef& a, const SpanRef& b) {
      return std::tie(a.token_start, a.token_end) <
             std::tie(b.token_start, b.token_end);
    });
    local.erase(std::unique(local.begin(), local.end()), local.end());
    spans.insert(spans.end(), local.begin(), local.end());
  }
  return spans;
}

std::vector<Question> load_squad(const std::string& path) {
  const json root = load_json_file(path);
  const json& data = require(root, "data", path);
  if (!data.is_array()) throw MalformedInput("'data' is not an array in " + path);

  std::vector<Question> questions;
  int article_idx = 0;
  for (const json& article : data) {
    const std::string at_article = path + "#data[" + std::to_string(article_idx) + "]";
    const json& paragraphs = require(article, "paragraphs", at_article);
    if (!paragraphs.is_array())
      throw MalformedInput("'paragraphs' is not an array at " + at_article);
    int para_idx = 0;
    for (const json& para : paragraphs) {
      const std::string at_para =
          at_article + ".paragraphs[" + std::to_string(para_idx) + "]";
      const std::string context = require_string(para, "context", at_para);
      const json& qas = require(para, "qas", at_para);
      if (!qas.is_array())
        throw MalformedInput("'qas' is not an array at " + at_para);
      int qa_idx = 0;
      for (const json& qa : qas) {
        const std::string at_qa = at_para + ".qas[" + std::to_string(qa_idx) + "]";
        Question q;
        q.id = require_string(qa, "id", at_qa);
        q.qtype = QuestionType::factoid;
        q.text = require_string(qa, "question", at_qa);
        q.question_tokens = tokenize(q.text);
        q.snippets.push_back(make_snippet(q.id + "#s0", context));

        const json& answers = require(qa, "answers", at_qa);
        if (!answers.is_array())
          throw MalformedInput("'answers' is not an array at " + at_qa);
        AnswerGroup group;
        int ans_idx = 0;
        for (const json& ans : answers) {
          const std::string at_ans =
              at_qa + ".answers[" + std::to_string(ans_idx) + "]";
          const std::string text = require_string(ans, "text", at_ans);
          const json& start = require(ans, "answer_start", at_ans);
          if (!start.is_number())
            throw MalformedInput("'answer_start' is not a number at " + at_ans);
          if (std::find(group.synonyms.begin(), group.synonyms.end(), text) ==
              group.synonyms.end())
            group.synonyms.push_back(text);
          ++ans_idx;
        }
        if (group.synonyms.empty())
          throw MalformedInput("empty 'answers' at " + at_qa);
        q.gold.push_back(std::move(group));
        annotate_question(q);
        questions.push_back(std::move(q));
        ++qa_idx;
      }
      ++para_idx;
    }
    ++article_idx;
  }
  return questions;
}

std::vector<Question> load_bioasq(const std::string& path) {
  const json root = load_json_file(path);
  const json& qs = require(root, "questions", path);
  if (!qs.is_array())
    throw MalformedInput("'questions' is not an array in " + path);

  std::vector<Question> questions;
  int idx = 0;
  for (const json& jq : qs) {
    const std::string at = path + "#questions[" + std::to_string(idx) + "]";
    ++idx;
    const std::string type = require_string(jq, "type", at);
    if (type != "factoid" && type != "list") continue;

    Question q;
    q.id = require_string(jq, "id", at);
    q.qtype = question_type_from_string(type);
    q.text = require_string(jq, "body", at);
    q.question_tokens = tokenize(q.text);

    const json& snippets = require(jq, "snippets", at);
    if (!snippets.is_array())
      throw MalformedInput("'snippets' is not an array at " + at);
    int sn_idx = 0;
    for (const json& jsn : snippets) {
      const std::string at_sn = at + ".snippets[" + std::to_string(sn_idx) + "]";
      q.snippets.push_back(make_snippet(q.id + "#s" + std::to_string(sn_idx),
                                        require_string(jsn, "text", at_sn)));
      ++sn_idx;
    }

    const json& exact = require(jq, "exact_answer", at);
    auto as_synonyms = [&](const json& v,
                           const std::string& where) -> std::vector<std::string> {
      std::vector<std::string> out;
      if (v.is_string()) {
        out.push_back(v.get<std::string>());
      } else if (v.is_array()) {
        for (const json& e : v) {
          if (!e.is_string())
            throw MalformedInput("expected string synonym at " + where);
          out.push_back(e.get<std::string>());
        }
      } else {
        throw MalformedInput("unexpected exact_answer shape at " + where);
      }
      if (out.empty()) throw MalformedInput("empty synonym list at " + where);
      return out;
    };

    if (q.qtype == QuestionType::factoid) {
      AnswerGroup g;
      g.synonyms = as_synonyms(exact, at + ".exact_answer");
      q.gold.push_back(std::move(g));
    } else {
      if (!exact.is_array())
        throw MalformedInput("list exact_answer is not an array at " + at);
      int e_idx = 0;
      for (const json& element : exact) {
        AnswerGroup g;
        g.synonyms = as_synonyms(
            element, at + ".exact_answer[" + std::to_string(e_idx) + "]");
        q.gold.push_back(std::move(g));
        ++e_idx;
      }
      if (q.gold.empty())
        throw MalformedInput("empty list exact_answer at " + at);
    }

    annotate_question(q);
    questions.push_back(std::move(q));
  }
  return questions;
}

DatasetStats dataset_stats(const std::vector<Question>& questions) {
  if (questions.empty()) throw EmptyDataset("dataset_stats: no questions");
  DatasetStats st;
  st.n_questions = static_cast<int>(questions.size());
  long long snippet_count = 0;
  long long token_count = 0;
  int extr_factoid = 0;
  int extr_list = 0;
  for (const Question& q : questions) {
    if (q.qtype == QuestionType::factoid) {
      ++st.n_factoid;
      if (q.extractable()) ++extr_factoid;
    } else {
      ++st.n_list;
      if (q.extractable()) ++extr_list;
    }
    snippet_count += static_cast<long long>(q.snippets.size());
    for (const Snippet& s : q.snippets)
      token_count += static_cast<long long>(s.tokens.size());
  }
  st.mean_snippets_per_question =
      static_cast<double>(snippet_count) / st.n_questions;
  st.mean_tokens_per_snippet =
      snippet_count == 0 ? 0.0
                         : static_cast<double>(token_count) / snippet_count;
  st.extractable_fraction_factoid =
      st.n_factoid == 0 ? 0.0 : static_cast<double>(extr_factoid) / st.n_factoid;
  st.extractable_fraction_list =
      st.n_list == 0 ? 0.0 : static_cast<double>(extr_list) / st.n_list;
  return st;
}

std::vector<Question> filter_trainable(const std::vector<Question>& questions) {
  std::vector<Question> out;
  for (const Question& q : questions)
    if (q.extractable()) out.push_back(q);
  return out;
}

namespace {

json tokens_to_json(const std::vector<Token>& tokens) {
  json arr = json::array();
  for (const Token& t : tokens)
    arr.push_back({{"text", t.text}, {"begin", t.char_begin}, {"end", t.char_end}});
  return arr;
}

std::vector<Token> tokens_from_json(const json& arr, const std::string& at) {
  if (!arr.is_array()) throw MalformedInput("expected token array at " + at);
  std::vector<Token> out;
  for (const json& jt : arr) {
    Token t;
    t.text = require_string(jt, "text", at);
    t.char_begin = require(jt, "begin", at).get<int>();
    t.char_end = require(jt, "end", at).get<int>();
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

std::string dataset_to_json(const std::vector<Question>& questions) {
  json jqs = json::array();
  for (const Question& q : questions) {
    json jsnips = json::array();
    for (const Snippet& s : q.snippets)
      jsnips.push_back(
          {{"id", s.id}, {"text", s.text}, {"tokens", tokens_to_json(s.tokens)}});
    json jgold = json::array();
    for (const AnswerGroup& g : q.gold) {
      json jspans = json::array();
      for (const SpanRef& sp : g.spans)
        jspans.push_back({{"snippet_id", sp.snippet_id},
                          {"token_start", sp.token_start},
                          {"token_end", sp.token_end}});
      jgold.push_back({{"synonyms", g.synonyms}, {"spans", jspans}});
    }
    jqs.push_back({{"id", q.id},
                   {"type", to_string(q.qtype)},
                   {"text", q.text},
                   {"question_tokens", tokens_to_json(q.question_tokens)},
                   {"snippets", jsnips},
                   {"gold", jgold}});
  }
  json root = {{"format", "bioqa.dataset.v1"}, {"questions", jqs}};
  return root.dump(2) + "\n";
}

std::vector<Question> dataset_from_json(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw MalformedInput(std::string("dataset parse: ") + e.what());
  }
  const json& jqs = require(root, "questions", "dataset");
  if (!jqs.is_array()) throw MalformedInput("'questions' is not an array");

  std::vector<Question> out;
  int idx = 0;
  for (const json& jq : jqs) {
    const std::string at = "questions[" + std::to_string(idx) + "]";
    ++idx;
    Question q;
    q.id = require_string(jq, "id", at);
    q.qtype = question_type_from_string(require_string(jq, "type", at));
    q.text = require_string(jq, "text", at);
    q.question_tokens = tokens_from_json(require(jq, "question_tokens", at), at);
    if (q.question_tokens != tokenize(q.text))
      throw MalformedInput("stored question tokens do not match "
                           "re-tokenization at " + at);

    std::unordered_map<std::string, int> snippet_index;
    const json& jsnips = require(jq, "snippets", at);
    if (!jsnips.is_array())
      throw MalformedInput("'snippets' is not an array at " + at);
    for (const json& jsn : jsnips) {
      Snippet s;
      s.id = require_string(jsn, "id", at);
      s.text = require_string(jsn, "text", at);
      s.tokens = tokens_from_json(require(jsn, "tokens", at), at);
      if (s.tokens != tokenize(s.text))
        throw MalformedInput("stored tokens do not match re-tokenization at " +
                             at + " snippet " + s.id);
      snippet_index[s.id] = static_cast<int>(q.snippets.size());
      q.snippets.push_back(std::move(s));
    }

    const json& jgold = require(jq, "gold", at);
    if (!jgold.is_array()) throw MalformedInput("'gold' is not an array at " + at);
    for (const json& jg : jgold) {
      AnswerGroup g;
      const json& syns = require(jg, "synonyms", at);
      if (!syns.is_array() || syns.empty())
        throw MalformedInput("bad 'synonyms' at " + at);
      for (const json& s : syns) g.synonyms.push_back(s.get<std::string>());
      const json& jspans = require(jg, "spans", at);
      if (!jspans.is_array()) throw MalformedInput("bad 'spans' at " + at);
      for (const json& jsp : jspans) {
        SpanRef sp;
        sp.snippet_id = require_string(jsp, "snippet_id", at);
        auto it = snippet_index.find(sp.snippet_id);
        if (it == snippet_index.end())
          throw MalformedInput("span references unknown snippet at " + at);
        sp.snippet_index = it->second;
        sp.token_start = require(jsp, "token_start", at).get<int>();
        sp.token_end = require(jsp, "token_end", at).get<int>();
        const Snippet& sn = q.snippets[sp.snippet_index];
        if (sp.token_start < 0 || sp.token_end < sp.token_start ||
            sp.token_end >= static_cast<int>(sn.tokens.size()))
          throw MalformedInput("span out of range at " + at);
        g.spans.push_back(sp);
      }
      q.gold.push_back(std::move(g));
    }
    if (q.qtype == QuestionType::factoid && q.gold.size() != 1)
      throw MalformedInput("factoid question needs exactly one answer group at " +
                           at);
    out.push_back(std::move(q));
  }
  return out;
}

void save_dataset(const std::vector<Question>& questions,
                  const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << dataset_to_json(questions);
}

std::vector<Question> load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return dataset_from_json(ss.str());
}

}  // namespace bioqa
