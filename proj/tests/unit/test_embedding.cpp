#include "doctest.h"

#include <cmath>

#include "bioqa/embedding.hpp"
#include "bioqa/errors.hpp"
#include "helpers.hpp"

using namespace bioqa;
using bioqa::testing::fixture_path;

TEST_CASE("word vector loading and OOV convention") {
  const WordVectorTable t = load_word_vectors(fixture_path("word_vectors_tiny.txt"), 4);
  CHECK(t.size() == 5);
  CHECK(t.lookup("missing") == Vector{0.0, 0.0, 0.0, 0.0});
  CHECK(t.lookup("drugs") == Vector{0.1, 0.2, 0.3, 0.4});
  // case-insensitive lookup
  CHECK(t.lookup("P53") == t.lookup("p53"));
}

TEST_CASE("word vector dimension mismatch reports the line") {
  CHECK_THROWS_AS(load_word_vectors(fixture_path("word_vectors_bad.txt"), 4),
                  DimensionMismatch);
  try {
    load_word_vectors(fixture_path("word_vectors_bad.txt"), 4);
  } catch (const DimensionMismatch& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
}

TEST_CASE("char embedding with zero filters is zero") {
  CharCnnParams p(4, 3, 5);  // zero-initialized filters and bias
  const Vector v = char_embed("anything", p);
  REQUIRE(v.size() == 5);
  for (double x : v) CHECK(x == 0.0);  // tanh(0) = 0
}

TEST_CASE("1x1 char convolution reproduces a single char dimension") {
  CharCnnParams p(4, 1, 1);
  Rng rng(7);
  p.char_table.randomize_uniform(rng, 1.0);
  p.filters(2, 0) = 1.0;  // pick out dimension 2
  const Vector v = char_embed("a", p);
  REQUIRE(v.size() == 1);
  const double expected = std::tanh(p.char_table(char_index(U'a'), 2));
  CHECK(v[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("char embedding output width is n_filters for any word length") {
  CharCnnParams p(4, 5, 7);
  Rng rng(9);
  p.randomize(rng);
  for (const std::string& w : {std::string("x"), std::string("hello"),
                               std::string(50, 'q')})
    CHECK(char_embed(w, p).size() == 7);
  CHECK_THROWS_AS(char_embed("", p), EmptyWord);
}

TEST_CASE("non-ascii characters share the UNK slot") {
  CHECK(char_index(U'a') == 'a' - 32);
  CHECK(char_index(U'β') == kCharUnkIndex);
  CHECK(char_index(U'\n') == kCharUnkIndex);
}

TEST_CASE("entity features: empty dictionary yields zeros") {
  EntityDictionary dict;
  const auto toks = tokenize("breast cancer gene");
  const Matrix bits = entity_features(toks, dict);
  CHECK(bits.rows() == 3);
  CHECK(bits.cols() == 127);
  for (int i = 0; i < bits.rows(); ++i)
    for (int j = 0; j < bits.cols(); ++j) CHECK(bits(i, j) == 0.0);
}

TEST_CASE("entity features: multi-token match covers all tokens") {
  EntityDictionary dict;
  dict.insert("breast cancer", 5);
  const auto toks = tokenize("Breast cancer gene");
  const Matrix bits = entity_features(toks, dict);
  CHECK(bits(0, 5) == 1.0);
  CHECK(bits(1, 5) == 1.0);
  CHECK(bits(2, 5) == 0.0);
}

TEST_CASE("entity features OR-accumulate across overlapping entries") {
  EntityDictionary dict;
  dict.insert("p53", 1);
  dict.insert("p53 gene", 2);
  const auto toks = tokenize("p53 gene");
  const Matrix bits = entity_features(toks, dict);
  CHECK(bits(0, 1) == 1.0);
  CHECK(bits(0, 2) == 1.0);
  CHECK(bits(1, 1) == 0.0);
  CHECK(bits(1, 2) == 1.0);
}

TEST_CASE("entity dictionary TSV loading") {
  const EntityDictionary dict =
      load_entity_dictionary(fixture_path("entity_dict_tiny.tsv"));
  CHECK(dict.size() == 4);
  CHECK(dict.find_normalized("breast cancer") != nullptr);
  CHECK(dict.find_normalized("p53 gene")->count(2) == 1);
}

TEST_CASE("embed_sequence dimensions follow the config") {
  CharCnnParams cnn(4, 3, 8);
  Rng rng(3);
  cnn.randomize(rng);

  EmbeddingConfig cfg;
  cfg.char_dim = 4;
  cfg.char_width = 3;
  cfg.char_filters = 8;
  CHECK(cfg.total_dim() == 10);  // char 8 + one-hot 2

  const auto toks = tokenize("alpha beta gamma");
  const EmbeddedSequence seq =
      embed_sequence(toks, false, nullptr, nullptr, cnn, nullptr, cfg);
  CHECK(seq.emb.rows() == 3);
  CHECK(seq.emb.cols() == 10);
  // factoid one-hot is [1, 0]
  for (int t = 0; t < 3; ++t) {
    CHECK(seq.emb(t, 8) == 1.0);
    CHECK(seq.emb(t, 9) == 0.0);
  }

  const EmbeddedSequence list_seq =
      embed_sequence(toks, true, nullptr, nullptr, cnn, nullptr, cfg);
  for (int t = 0; t < 3; ++t) {
    CHECK(list_seq.emb(t, 8) == 0.0);
    CHECK(list_seq.emb(t, 9) == 1.0);
  }
}

TEST_CASE("full configuration reaches the published total width") {
  EmbeddingConfig cfg;
  cfg.use_open_domain = true;
  cfg.open_dim = 300;
  cfg.use_domain = true;
  cfg.domain_dim = 200;
  cfg.use_entity_features = true;
  cfg.char_filters = 8;
  CHECK(cfg.total_dim() == 300 + 8 + 200 + 127 + 2);
}

TEST_CASE("disabling a source shrinks the width and keeps other slices") {
  const WordVectorTable open = load_word_vectors(fixture_path("word_vectors_tiny.txt"), 4);
  CharCnnParams cnn(4, 3, 6);
  Rng rng(11);
  cnn.randomize(rng);

  EmbeddingConfig with;
  with.use_open_domain = true;
  with.open_dim = 4;
  with.char_dim = 4;
  with.char_width = 3;
  with.char_filters = 6;

  EmbeddingConfig without = with;
  without.use_open_domain = false;

  const auto toks = tokenize("p53 gene");
  const auto a = embed_sequence(toks, false, &open, nullptr, cnn, nullptr, with);
  const auto b = embed_sequence(toks, false, nullptr, nullptr, cnn, nullptr, without);
  CHECK(a.emb.cols() - b.emb.cols() == 4);
  for (int t = 0; t < 2; ++t)
    for (int c = 0; c < b.emb.cols(); ++c)
      CHECK(a.emb(t, 4 + c) == b.emb(t, c));

  CHECK_THROWS_AS(
      embed_sequence(toks, false, nullptr, nullptr, cnn, nullptr, with),
      ConfigMismatch);
}
