#include "csqn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "csqn/errors.hpp"

namespace csqn {

static constexpr char kMagic[4] = {'C', 'S', 'Q', 'N'};
static constexpr uint32_t kVersion = 1;

static void put_u32(std::ostream& out, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

static void put_f64(std::ostream& out, double v) {
  const uint64_t bits = std::bit_cast<uint64_t>(v);
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(b, 8);
}

static uint32_t get_u32(std::istream& in) {
  char b[4];
  if (!in.read(b, 4)) throw std::runtime_error("checkpoint: truncated file");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return v;
}

static double get_f64(std::istream& in) {
  char b[8];
  if (!in.read(b, 8)) throw std::runtime_error("checkpoint: truncated file");
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

static std::string get_bytes(std::istream& in, uint32_t n) {
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw std::runtime_error("checkpoint: truncated file");
  return s;
}

Checkpoint Checkpoint::from_store(const ParamStore& store, std::string config_json) {
  Checkpoint ck;
  ck.config_json = std::move(config_json);
  for (const auto& [name, t] : store)  // ParamStore iterates in name order
    ck.params.push_back({name, t.shape(), t.values()});
  return ck;
}

void Checkpoint::apply_to(ParamStore& store) const {
  if (params.size() != store.size())
    throw StateError("checkpoint: parameter count mismatch (" +
                     std::to_string(params.size()) + " vs " +
                     std::to_string(store.size()) + ")");
  for (const Entry& e : params) {
    if (!store.contains(e.name))
      throw StateError("checkpoint: store has no parameter '" + e.name + "'");
    Tensor& t = store.get(e.name);
    if (t.shape() != e.shape)
      throw DimensionError("checkpoint: shape mismatch for '" + e.name + "': " +
                           shape_str(e.shape) + " vs " + shape_str(t.shape()));
    t.mutable_values() = e.values;
  }
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint file: " + path);
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<uint32_t>(config_json.size()));
  out.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
  put_u32(out, static_cast<uint32_t>(params.size()));
  for (const Entry& e : params) {
    put_u32(out, static_cast<uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put_u32(out, static_cast<uint32_t>(e.shape.size()));
    for (int d : e.shape) put_u32(out, static_cast<uint32_t>(d));
    for (double v : e.values) put_f64(out, v);
  }
  if (!out) throw std::runtime_error("error writing checkpoint file: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint file: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic (not a CSQN checkpoint): " + path);
  const uint32_t version = get_u32(in);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported format version " +
                             std::to_string(version));
  Checkpoint ck;
  ck.config_json = get_bytes(in, get_u32(in));
  const uint32_t count = get_u32(in);
  ck.params.reserve(count);
  for (uint32_t p = 0; p < count; ++p) {
    Entry e;
    e.name = get_bytes(in, get_u32(in));
    const uint32_t rank = get_u32(in);
    e.shape.resize(rank);
    int64_t n = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      e.shape[d] = static_cast<int>(get_u32(in));
      if (e.shape[d] <= 0) throw std::runtime_error("checkpoint: bad dimension");
      n *= e.shape[d];
    }
    e.values.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) e.values[static_cast<size_t>(i)] = get_f64(in);
    ck.params.push_back(std::move(e));
  }
  return ck;
}

}  // namespace csqn
