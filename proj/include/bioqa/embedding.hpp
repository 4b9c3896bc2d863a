#pragma once

#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "bioqa/matrix.hpp"
#include "bioqa/tokenize.hpp"

namespace bioqa {

// Frozen pretrained word vectors. Lookup is case-insensitive and total:
// out-of-vocabulary words map to the all-zero vector.
class WordVectorTable {
 public:
  WordVectorTable() = default;
  explicit WordVectorTable(int dim) : dim_(dim), oov_(dim, 0.0) {}

  int dim() const { return dim_; }
  size_t size() const { return entries_.size(); }
  void insert(const std::string& word, Vector v);
  const Vector& lookup(const std::string& word) const;
  bool contains(const std::string& word) const;

 private:
  int dim_ = 0;
  std::unordered_map<std::string, Vector> entries_;
  Vector oov_;
};

// One entry per line: "word v1 v2 ... vd". Throws DimensionMismatch or
// MalformedInput with the offending line number.
WordVectorTable load_word_vectors(const std::string& path, int expected_dim);

// Character vocabulary: printable ASCII 32..126 plus a trailing UNK slot
// shared by every other code point.
constexpr int kCharVocabSize = 96;
constexpr int kCharUnkIndex = 95;
int char_index(char32_t cp);

// Trainable 1-d convolution over character embeddings with tanh and
// max-pooling. Lives inside ModelParams during training.
struct CharCnnParams {
  int char_dim = 8;   // per-character embedding size
  int width = 5;      // convolution window
  int n_filters = 8;  // output size

  Matrix char_table;  // [kCharVocabSize x char_dim]
  Matrix filters;     // [width*char_dim x n_filters]
  Vector bias;        // [n_filters]

  CharCnnParams() = default;
  CharCnnParams(int char_dim, int width, int n_filters);
  void randomize(Rng& rng);
};

// Forward cache needed to push gradients back through max-pool/tanh/conv.
struct CharCnnCache {
  std::vector<int> char_indices;
  std::vector<int> argmax;  // winning window position per filter
  Vector output;            // tanh activations at the winning positions
};

// Throws EmptyWord on an empty string.
Vector char_embed(const std::string& word, const CharCnnParams& params,
                  CharCnnCache* cache = nullptr);

// Accumulates d(loss)/d(char table, filters, bias) for one embedded word.
void char_embed_backward(const CharCnnCache& cache, const Vector& d_output,
                         const CharCnnParams& params, Matrix& g_char_table,
                         Matrix& g_filters, Vector& g_bias);

// Surface-string -> semantic type indices, matched over detokenized token
// windows. Fixed 127-bit type space.
class EntityDictionary {
 public:
  static constexpr int kNumTypes = 127;

  void insert(const std::string& surface, int type_index);
  const std::set<int>* find_normalized(const std::string& normalized) const;
  size_t size() const { return entries_.size(); }
  int max_window() const { return max_window_; }
  void set_max_window(int w) { max_window_ = w; }

 private:
  std::unordered_map<std::string, std::set<int>> entries_;
  int max_window_ = 8;
};

// TSV "surface<TAB>type_index", duplicates OR-ed together.
EntityDictionary load_entity_dictionary(const std::string& path);

// [n x 127] bit matrix. A dictionary surface matching the detokenized
// window (single-space joined, case-insensitive) sets its type bits on
// every covered token; overlapping matches OR together.
Matrix entity_features(const std::vector<Token>& tokens,
                       const EntityDictionary& dict);

struct EmbeddingConfig {
  bool use_open_domain = false;
  bool use_domain = false;
  bool use_entity_features = false;
  int open_dim = 0;
  int domain_dim = 0;
  int char_dim = 8;  // d_c
  int char_width = 5;
  int char_filters = 8;

  int total_dim() const {
    return (use_open_domain ? open_dim : 0) + char_filters +
           (use_domain ? domain_dim : 0) +
           (use_entity_features ? EntityDictionary::kNumTypes : 0) + 2;
  }
  // Column where the char-CNN component starts (the only trainable slice).
  int char_offset() const { return use_open_domain ? open_dim : 0; }
};

struct EmbeddedSequence {
  Matrix emb;  // [n x total_dim]
  std::vector<CharCnnCache> char_caches;
};

// Per token: concat(open vec?, char vec, domain vec?, entity bits?,
// qtype one-hot). One-hot order is [factoid, list].
EmbeddedSequence embed_sequence(const std::vector<Token>& tokens, bool is_list,
                                const WordVectorTable* open_table,
                                const WordVectorTable* domain_table,
                                const CharCnnParams& char_params,
                                const EntityDictionary* dict,
                                const EmbeddingConfig& config,
                                bool keep_caches = false);

}  // namespace bioqa
