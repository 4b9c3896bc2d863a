#include "bioqa/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "bioqa/errors.hpp"
#include "json.hpp"

namespace bioqa {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'B', 'Q', 'A', 'C', 'K', 'P', 'T', '1'};
constexpr uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr uint64_t kFnvPrime = 1099511628211ULL;

void fnv1a(uint64_t& h, const void* data, size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

void append_u32_le(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void append_u64_le(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void append_f64_le(std::string& out, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  append_u64_le(out, bits);
}

uint64_t read_u64_le(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

double read_f64_le(const unsigned char* p) {
  const uint64_t bits = read_u64_le(p);
  double d;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}

json emb_to_json(const EmbeddingConfig& e) {
  return json{{"use_open_domain", e.use_open_domain},
              {"use_domain", e.use_domain},
              {"use_entity_features", e.use_entity_features},
              {"open_dim", e.open_dim},
              {"domain_dim", e.domain_dim},
              {"char_dim", e.char_dim},
              {"char_width", e.char_width},
              {"char_filters", e.char_filters}};
}

EmbeddingConfig emb_from_json(const json& j) {
  EmbeddingConfig e;
  e.use_open_domain = j.at("use_open_domain").get<bool>();
  e.use_domain = j.at("use_domain").get<bool>();
  e.use_entity_features = j.at("use_entity_features").get<bool>();
  e.open_dim = j.at("open_dim").get<int>();
  e.domain_dim = j.at("domain_dim").get<int>();
  e.char_dim = j.at("char_dim").get<int>();
  e.char_width = j.at("char_width").get<int>();
  e.char_filters = j.at("char_filters").get<int>();
  return e;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  const auto refs = tensor_refs(params);
  json manifest;
  manifest["meta"] = {{"hidden", params.hidden}, {"emb", emb_to_json(params.emb)}};
  json tensors = json::array();
  for (const TensorRef& t : refs)
    tensors.push_back(
        {{"name", t.name}, {"shape", t.shape}, {"count", t.count}});
  manifest["tensors"] = tensors;
  const std::string manifest_str = manifest.dump();

  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  append_u32_le(buf, static_cast<uint32_t>(manifest_str.size()));
  buf += manifest_str;
  for (const TensorRef& t : refs)
    for (size_t i = 0; i < t.count; ++i) append_f64_le(buf, t.data[i]);

  uint64_t checksum = kFnvOffset;
  fnv1a(checksum, buf.data(), buf.size());
  append_u64_le(buf, checksum);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write to " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();
  const unsigned char* p = reinterpret_cast<const unsigned char*>(buf.data());

  if (buf.size() < sizeof(kMagic) + 4 + 8 ||
      std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
    throw MalformedInput(path + ": not a checkpoint file");

  uint64_t expected = read_u64_le(p + buf.size() - 8);
  uint64_t actual = kFnvOffset;
  fnv1a(actual, buf.data(), buf.size() - 8);
  if (expected != actual)
    throw ChecksumError(path + ": checksum mismatch");

  size_t off = sizeof(kMagic);
  uint32_t manifest_len = 0;
  for (int i = 3; i >= 0; --i)
    manifest_len = (manifest_len << 8) | p[off + i];
  off += 4;
  if (off + manifest_len > buf.size() - 8)
    throw MalformedInput(path + ": truncated manifest");

  json manifest;
  try {
    manifest = json::parse(buf.substr(off, manifest_len));
  } catch (const json::parse_error& e) {
    throw MalformedInput(path + ": bad manifest: " + e.what());
  }
  off += manifest_len;

  const json& meta = manifest.at("meta");
  ModelParams params =
      init_params(emb_from_json(meta.at("emb")), meta.at("hidden").get<int>(), 0);

  auto refs = tensor_refs(params);
  const json& tensors = manifest.at("tensors");
  if (tensors.size() != refs.size())
    throw MalformedInput(path + ": tensor manifest mismatch");
  for (size_t t = 0; t < refs.size(); ++t) {
    const json& jt = tensors[t];
    if (jt.at("name").get<std::string>() != refs[t].name)
      throw MalformedInput(path + ": unexpected tensor '" +
                           jt.at("name").get<std::string>() + "'");
    if (jt.at("count").get<size_t>() != refs[t].count)
      throw MalformedInput(path + ": tensor size mismatch for " + refs[t].name);
    if (off + refs[t].count * 8 > buf.size() - 8)
      throw MalformedInput(path + ": truncated tensor data");
    for (size_t i = 0; i < refs[t].count; ++i) {
      refs[t].data[i] = read_f64_le(p + off);
      off += 8;
    }
  }
  if (off != buf.size() - 8)
    throw MalformedInput(path + ": trailing bytes after tensor data");
  return params;
}

uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  uint64_t h = kFnvOffset;
  char chunk[4096];
  while (in.read(chunk, sizeof(chunk)) || in.gcount() > 0) {
    fnv1a(h, chunk, static_cast<size_t>(in.gcount()));
    if (!in) break;
  }
  return h;
}

}  // namespace bioqa
