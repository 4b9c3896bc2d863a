#include "doctest.h"

#include <cmath>

#include "bioqa/spanner.hpp"
#include "bioqa/text.hpp"
#include "helpers.hpp"

using namespace bioqa;
using bioqa::testing::brute_force_decode;
using bioqa::testing::random_score_set;
using bioqa::testing::snippet_of_tokens;

TEST_CASE("sigmoid start probabilities") {
  CHECK(start_probs({0.0, 0.0}) == Vector{0.5, 0.5});
  // sigmoid(ln 3) = 3/4
  CHECK(start_probs({std::log(3.0)})[0] == doctest::Approx(0.75).epsilon(1e-12));
  // strictly increasing
  const Vector p = start_probs({-1.0, 0.5, 2.0});
  CHECK(p[0] < p[1]);
  CHECK(p[1] < p[2]);
}

TEST_CASE("softmax end probabilities") {
  const Vector equal = end_probs({3.0, 3.0, 3.0});
  for (double v : equal) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-12));

  // softmax of ln(1), ln(2), ln(3) is (1,2,3)/6
  const Vector logs = end_probs({std::log(1.0), std::log(2.0), std::log(3.0)});
  CHECK(logs[0] == doctest::Approx(1.0 / 6).epsilon(1e-12));
  CHECK(logs[1] == doctest::Approx(2.0 / 6).epsilon(1e-12));
  CHECK(logs[2] == doctest::Approx(0.5).epsilon(1e-12));

  // stability under large scores
  const Vector big = end_probs({1000.0, 0.0});
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(big[1] == doctest::Approx(0.0));
  CHECK(std::isfinite(big[0]));
}

TEST_CASE("span probabilities multiply their factors exactly") {
  Rng rng(17);
  const ScoreSet sc = random_score_set(9, rng);
  const SpanProbabilities probs = span_probabilities(sc);
  for (int i = 0; i < sc.n; ++i) {
    double row_sum = 0.0;
    for (int j = i; j < sc.n; ++j) {
      CHECK(probs.span_prob(i, j) == probs.p_start[i] * probs.end_row(i)[j - i]);
      row_sum += probs.end_row(i)[j - i];
    }
    CHECK(std::abs(row_sum - 1.0) < 1e-9);
    CHECK(probs.p_start[i] > 0.0);
    CHECK(probs.p_start[i] < 1.0);
  }
}

TEST_CASE("two-token decoding example") {
  // p_start = [0.8, 0.1]; end row of start 0 = [0.75, 0.25]
  ScoreSet sc;
  sc.n = 2;
  sc.start_scores = {std::log(0.8 / 0.2), std::log(0.1 / 0.9)};
  sc.selected_starts = {0, 1};
  sc.end_scores[0] = {std::log(3.0), 0.0};  // softmax -> [0.75, 0.25]
  sc.end_scores[1] = {0.0};
  Rng rng(1);
  const Snippet sn = snippet_of_tokens("s", 2, rng);
  DecodingConfig cfg;
  const auto spans = decode_spans(sc, sn, 0, cfg);
  REQUIRE(!spans.empty());
  CHECK(spans[0].token_start == 0);
  CHECK(spans[0].token_end == 0);
  CHECK(spans[0].prob == doctest::Approx(0.6).epsilon(1e-9));
}

TEST_CASE("equal scores break ties toward the earliest span") {
  // single-token context: the only span is (0, 0)
  ScoreSet one;
  one.n = 1;
  one.start_scores = {0.0};
  one.selected_starts = {0};
  one.end_scores[0] = {0.0};
  Rng rng(2);
  const Snippet sn1 = snippet_of_tokens("s1", 1, rng);
  DecodingConfig cfg;
  const auto only = decode_spans(one, sn1, 0, cfg);
  REQUIRE(only.size() == 1);
  CHECK(only[0].token_start == 0);
  CHECK(only[0].token_end == 0);

  // a genuine probability tie: both spans from start 0 share p_span, so
  // the smaller end index ranks first
  ScoreSet sc;
  sc.n = 2;
  sc.start_scores = {0.0, 0.0};
  sc.selected_starts = {0, 1};
  sc.end_scores[0] = {1.5, 1.5};
  sc.end_scores[1] = {0.0};
  const Snippet sn2 = snippet_of_tokens("s2", 2, rng);
  const auto spans = decode_spans(sc, sn2, 0, cfg);
  REQUIRE(spans.size() == 3);
  // (1,1) has p 0.5; the tied pair (0,0) and (0,1) follows at 0.25 each
  CHECK(spans[0].token_start == 1);
  CHECK(spans[1].token_start == 0);
  CHECK(spans[1].token_end == 0);
  CHECK(spans[2].token_start == 0);
  CHECK(spans[2].token_end == 1);
}

TEST_CASE("decoding equals brute force whenever all starts fit") {
  Rng rng(40);
  DecodingConfig cfg;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(20));
    const ScoreSet sc = random_score_set(n, rng);
    const Snippet sn = snippet_of_tokens("s" + std::to_string(trial), n, rng);
    const auto fast = merge_snippets({dedup(decode_spans(sc, sn, 0, cfg))});
    const auto slow = merge_snippets({dedup(brute_force_decode(sc, sn, 0, cfg))});
    REQUIRE(fast.size() == slow.size());
    for (size_t i = 0; i < fast.size(); ++i) {
      CHECK(fast[i].token_start == slow[i].token_start);
      CHECK(fast[i].token_end == slow[i].token_end);
      CHECK(fast[i].prob == slow[i].prob);
    }
  }
}

TEST_CASE("decoded span probabilities match recomputation from scores") {
  Rng rng(41);
  DecodingConfig cfg;
  const int n = 12;
  const ScoreSet sc = random_score_set(n, rng);
  const SpanProbabilities probs = span_probabilities(sc);
  const Snippet sn = snippet_of_tokens("s", n, rng);
  for (const TokenSpan& s : decode_spans(sc, sn, 0, cfg))
    CHECK(s.prob == probs.span_prob(s.token_start, s.token_end));
}

TEST_CASE("dedup keeps the first occurrence per normalized text") {
  auto mk = [](const std::string& text, double p, int start) {
    TokenSpan s;
    s.text = text;
    s.prob = p;
    s.token_start = start;
    s.token_end = start;
    return s;
  };
  const std::vector<TokenSpan> in = {mk("p53", 0.4, 0), mk("P53", 0.3, 3),
                                     mk("mdm2", 0.2, 5)};
  const auto out = dedup(in);
  REQUIRE(out.size() == 2);
  CHECK(out[0].text == "p53");
  CHECK(out[0].prob == 0.4);
  CHECK(out[1].text == "mdm2");

  // no duplicates: unchanged
  const std::vector<TokenSpan> uniq = {mk("a", 0.9, 0), mk("b", 0.8, 1)};
  CHECK(dedup(uniq).size() == 2);

  // equal probabilities: earliest-ranked position wins
  const std::vector<TokenSpan> tie = {mk("x", 0.5, 2), mk("x", 0.5, 7),
                                      mk("x", 0.1, 9)};
  const auto t = dedup(tie);
  REQUIRE(t.size() == 1);
  CHECK(t[0].token_start == 2);
  CHECK(t[0].prob == 0.5);
}

TEST_CASE("dedup output is a subsequence with pairwise distinct strings") {
  Rng rng(42);
  DecodingConfig cfg;
  const ScoreSet sc = random_score_set(10, rng);
  const Snippet sn = snippet_of_tokens("s", 10, rng);
  const auto ranked = decode_spans(sc, sn, 0, cfg);
  const auto out = dedup(ranked);
  size_t pos = 0;
  for (const TokenSpan& s : out) {
    while (pos < ranked.size() && !(ranked[pos].token_start == s.token_start &&
                                    ranked[pos].token_end == s.token_end))
      ++pos;
    CHECK(pos < ranked.size());
    ++pos;
  }
  for (size_t i = 0; i < out.size(); ++i)
    for (size_t j = i + 1; j < out.size(); ++j)
      CHECK(normalize_answer(out[i].text) != normalize_answer(out[j].text));
}

TEST_CASE("merging ranks across snippets and dedups") {
  auto mk = [](const std::string& text, double p, int snippet) {
    TokenSpan s;
    s.text = text;
    s.prob = p;
    s.snippet_index = snippet;
    return s;
  };
  // single snippet: unchanged
  const std::vector<TokenSpan> one = {mk("a", 0.9, 0), mk("b", 0.3, 0)};
  const auto same = merge_snippets({one});
  CHECK(same.size() == 2);
  CHECK(same[0].text == "a");

  // two snippets: higher probability leads
  const auto merged = merge_snippets({{mk("a", 0.3, 0)}, {mk("b", 0.7, 1)}});
  REQUIRE(merged.size() == 2);
  CHECK(merged[0].text == "b");

  // same answer in two snippets: keep the stronger
  const auto deduped = merge_snippets({{mk("a", 0.6, 0)}, {mk("A", 0.4, 1)}});
  REQUIRE(deduped.size() == 1);
  CHECK(deduped[0].prob == 0.6);
  CHECK(deduped[0].snippet_index == 0);
}

TEST_CASE("factoid answers are a prefix of at most five") {
  std::vector<TokenSpan> merged;
  for (int i = 0; i < 8; ++i) {
    TokenSpan s;
    s.text = "ans" + std::to_string(i);
    s.prob = 1.0 - 0.1 * i;
    merged.push_back(s);
  }
  DecodingConfig cfg;
  const auto five = factoid_answers(merged, cfg);
  REQUIRE(five.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(five[i] == merged[i].text);

  merged.resize(2);
  CHECK(factoid_answers(merged, cfg).size() == 2);
}

TEST_CASE("list answers by threshold with top-1 fallback") {
  std::vector<TokenSpan> merged;
  for (double p : {0.9, 0.5, 0.2}) {
    TokenSpan s;
    s.text = "p" + std::to_string(p);
    s.prob = p;
    merged.push_back(s);
  }
  DecodingConfig cfg;
  cfg.list_threshold = 0.4;
  CHECK(list_answers(merged, cfg).size() == 2);

  cfg.list_threshold = 0.0;
  CHECK(list_answers(merged, cfg).size() == 3);

  cfg.list_threshold = 0.99;
  const auto fallback = list_answers(merged, cfg);
  REQUIRE(fallback.size() == 1);
  CHECK(fallback[0] == merged[0].text);
}

TEST_CASE("list answers are monotone in the threshold") {
  Rng rng(43);
  std::vector<TokenSpan> merged;
  for (int i = 0; i < 10; ++i) {
    TokenSpan s;
    s.text = "t" + std::to_string(i);
    s.prob = rng.next_double();
    merged.push_back(s);
  }
  DecodingConfig lo, hi;
  lo.list_threshold = 0.2;
  hi.list_threshold = 0.6;
  const auto at_lo = list_answers(merged, lo);
  const auto at_hi = list_answers(merged, hi);
  for (const std::string& a : at_hi)
    CHECK(std::find(at_lo.begin(), at_lo.end(), a) != at_lo.end());
}
