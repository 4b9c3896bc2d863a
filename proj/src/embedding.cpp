#include "bioqa/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bioqa/errors.hpp"
#include "bioqa/text.hpp"

namespace bioqa {

void WordVectorTable::insert(const std::string& word, Vector v) {
  if (static_cast<int>(v.size()) != dim_)
    throw DimensionMismatch("word vector for '" + word + "' has dimension " +
                            std::to_string(v.size()) + ", expected " +
                            std::to_string(dim_));
  entries_[ascii_lower(word)] = std::move(v);
}

const Vector& WordVectorTable::lookup(const std::string& word) const {
  auto it = entries_.find(ascii_lower(word));
  return it == entries_.end() ? oov_ : it->second;
}

bool WordVectorTable::contains(const std::string& word) const {
  return entries_.count(ascii_lower(word)) > 0;
}

WordVectorTable load_word_vectors(const std::string& path, int expected_dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  WordVectorTable table(expected_dim);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    if (!(ss >> word))
      throw MalformedInput(path + ":" + std::to_string(line_no) +
                           ": missing word");
    Vector v;
    std::string field;
    while (ss >> field) {
      char* end = nullptr;
      const double x = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0')
        throw MalformedInput(path + ":" + std::to_string(line_no) +
                             ": bad number '" + field + "'");
      v.push_back(x);
    }
    if (static_cast<int>(v.size()) != expected_dim)
      throw DimensionMismatch(path + ":" + std::to_string(line_no) + ": got " +
                              std::to_string(v.size()) + " values, expected " +
                              std::to_string(expected_dim));
    table.insert(word, std::move(v));
  }
  return table;
}

int char_index(char32_t cp) {
  if (cp >= 32 && cp <= 126) return static_cast<int>(cp) - 32;
  return kCharUnkIndex;
}

CharCnnParams::CharCnnParams(int char_dim_, int width_, int n_filters_)
    : char_dim(char_dim_), width(width_), n_filters(n_filters_),
      char_table(kCharVocabSize, char_dim_),
      filters(width_ * char_dim_, n_filters_), bias(n_filters_, 0.0) {}

void CharCnnParams::randomize(Rng& rng) {
  char_table.randomize_uniform(rng, std::sqrt(3.0 / char_dim));
  filters.randomize_uniform(rng, std::sqrt(6.0 / (width * char_dim + n_filters)));
  std::fill(bias.begin(), bias.end(), 0.0);
}

Vector char_embed(const std::string& word, const CharCnnParams& params,
                  CharCnnCache* cache) {
  if (word.empty()) throw EmptyWord("char_embed: empty word");
  const std::vector<char32_t> cps = utf8_decode(word);
  std::vector<int> idx(cps.size());
  for (size_t i = 0; i < cps.size(); ++i) idx[i] = char_index(cps[i]);

  const int len = static_cast<int>(idx.size());
  const int w = params.width;
  const int dc = params.char_dim;
  const int nf = params.n_filters;
  const int padded = std::max(len, w);  // zero-pad short words on the right
  const int n_pos = padded - w + 1;

  Vector out(nf, 0.0);
  std::vector<int> argmax(nf, 0);
  Vector window(w * dc, 0.0);
  bool first = true;
  for (int p = 0; p < n_pos; ++p) {
    std::fill(window.begin(), window.end(), 0.0);
    for (int k = 0; k < w; ++k) {
      const int pos = p + k;
      if (pos >= len) break;
      const double* row = params.char_table.row(idx[pos]);
      std::copy(row, row + dc, window.begin() + k * dc);
    }
    for (int f = 0; f < nf; ++f) {
      double acc = params.bias[f];
      for (int u = 0; u < w * dc; ++u) acc += window[u] * params.filters(u, f);
      const double a = std::tanh(acc);
      if (first || a > out[f]) {
        out[f] = a;
        argmax[f] = p;
      }
    }
    first = false;
  }

  if (cache) {
    cache->char_indices = std::move(idx);
    cache->argmax = std::move(argmax);
    cache->output = out;
  }
  return out;
}

void char_embed_backward(const CharCnnCache& cache, const Vector& d_output,
                         const CharCnnParams& params, Matrix& g_char_table,
                         Matrix& g_filters, Vector& g_bias) {
  const int w = params.width;
  const int dc = params.char_dim;
  const int nf = params.n_filters;
  const int len = static_cast<int>(cache.char_indices.size());

  Vector window(w * dc, 0.0);
  for (int f = 0; f < nf; ++f) {
    const double g = d_output[f];
    if (g == 0.0) continue;
    const double a = cache.output[f];
    const double d_pre = g * (1.0 - a * a);
    const int p = cache.argmax[f];

    std::fill(window.begin(), window.end(), 0.0);
    for (int k = 0; k < w; ++k) {
      const int pos = p + k;
      if (pos >= len) break;
      const double* row = params.char_table.row(cache.char_indices[pos]);
      std::copy(row, row + dc, window.begin() + k * dc);
    }

    g_bias[f] += d_pre;
    for (int u = 0; u < w * dc; ++u) g_filters(u, f) += d_pre * window[u];
    for (int k = 0; k < w; ++k) {
      const int pos = p + k;
      if (pos >= len) break;
      double* g_row = g_char_table.row(cache.char_indices[pos]);
      for (int d = 0; d < dc; ++d)
        g_row[d] += d_pre * params.filters(k * dc + d, f);
    }
  }
}

void EntityDictionary::insert(const std::string& surface, int type_index) {
  if (surface.empty()) throw MalformedInput("empty entity surface string");
  if (type_index < 0 || type_index >= kNumTypes)
    throw MalformedInput("entity type index out of range: " +
                         std::to_string(type_index));
  entries_[normalize_answer(surface)].insert(type_index);
}

const std::set<int>* EntityDictionary::find_normalized(
    const std::string& normalized) const {
  auto it = entries_.find(normalized);
  return it == entries_.end() ? nullptr : &it->second;
}

EntityDictionary load_entity_dictionary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  EntityDictionary dict;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw MalformedInput(path + ":" + std::to_string(line_no) +
                           ": expected 'surface<TAB>type_index'");
    const std::string surface = line.substr(0, tab);
    char* end = nullptr;
    const long idx = std::strtol(line.c_str() + tab + 1, &end, 10);
    if (end == line.c_str() + tab + 1 || (*end != '\0' && *end != '\r'))
      throw MalformedInput(path + ":" + std::to_string(line_no) +
                           ": bad type index");
    dict.insert(surface, static_cast<int>(idx));
  }
  return dict;
}

Matrix entity_features(const std::vector<Token>& tokens,
                       const EntityDictionary& dict) {
  const int n = static_cast<int>(tokens.size());
  Matrix bits(n, EntityDictionary::kNumTypes);
  if (dict.size() == 0) return bits;
  for (int i = 0; i < n; ++i) {
    std::string key;
    const int max_w = std::min(dict.max_window(), n - i);
    for (int w = 1; w <= max_w; ++w) {
      if (w > 1) key += ' ';
      key += ascii_lower(tokens[i + w - 1].text);
      const std::set<int>* types = dict.find_normalized(key);
      if (!types) continue;
      for (int t : *types)
        for (int j = i; j < i + w; ++j) bits(j, t) = 1.0;
    }
  }
  return bits;
}

EmbeddedSequence embed_sequence(const std::vector<Token>& tokens, bool is_list,
                                const WordVectorTable* open_table,
                                const WordVectorTable* domain_table,
                                const CharCnnParams& char_params,
                                const EntityDictionary* dict,
                                const EmbeddingConfig& config,
                                bool keep_caches) {
  if (config.use_open_domain) {
    if (!open_table)
      throw ConfigMismatch("open-domain vectors requested but not provided");
    if (open_table->dim() != config.open_dim)
      throw ConfigMismatch("open-domain vector dimension mismatch");
  }
  if (config.use_domain) {
    if (!domain_table)
      throw ConfigMismatch("domain vectors requested but not provided");
    if (domain_table->dim() != config.domain_dim)
      throw ConfigMismatch("domain vector dimension mismatch");
  }
  if (config.use_entity_features && !dict)
    throw ConfigMismatch("entity features requested but no dictionary");
  if (char_params.n_filters != config.char_filters)
    throw ConfigMismatch("char-CNN filter count mismatch");

  const int n = static_cast<int>(tokens.size());
  EmbeddedSequence seq;
  seq.emb = Matrix(n, config.total_dim());
  if (keep_caches) seq.char_caches.resize(n);

  Matrix ent;
  if (config.use_entity_features) ent = entity_features(tokens, *dict);

  for (int i = 0; i < n; ++i) {
    double* row = seq.emb.row(i);
    int off = 0;
    if (config.use_open_domain) {
      const Vector& v = open_table->lookup(tokens[i].text);
      std::copy(v.begin(), v.end(), row + off);
      off += config.open_dim;
    }
    CharCnnCache local_cache;
    const Vector cv = char_embed(tokens[i].text, char_params,
                                 keep_caches ? &seq.char_caches[i] : &local_cache);
    std::copy(cv.begin(), cv.end(), row + off);
    off += config.char_filters;
    if (config.use_domain) {
      const Vector& v = domain_table->lookup(tokens[i].text);
      std::copy(v.begin(), v.end(), row + off);
      off += config.domain_dim;
    }
    if (config.use_entity_features) {
      const double* e = ent.row(i);
      std::copy(e, e + EntityDictionary::kNumTypes, row + off);
      off += EntityDictionary::kNumTypes;
    }
    row[off] = is_list ? 0.0 : 1.0;
    row[off + 1] = is_list ? 1.0 : 0.0;
  }
  return seq;
}

}  // namespace bioqa
