#include "csqn/embeddings.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "csqn/errors.hpp"

namespace csqn {

EmbeddingTable::EmbeddingTable(int dim, uint64_t oov_seed)
    : dim_(dim), oov_seed_(oov_seed) {
  if (dim <= 0) throw std::domain_error("EmbeddingTable: dimension must be positive");
}

void EmbeddingTable::insert(const std::string& key, std::vector<double> vec) {
  if (static_cast<int>(vec.size()) != dim_)
    throw std::domain_error("EmbeddingTable: vector length " +
                            std::to_string(vec.size()) + " does not match dim " +
                            std::to_string(dim_));
  vectors_.emplace(key, std::move(vec));  // no-op if present: first wins
}

static uint64_t fnv1a64(uint64_t seed, const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<double> EmbeddingTable::lookup(const std::string& key) const {
  auto it = vectors_.find(key);
  if (it != vectors_.end()) return it->second;
  std::mt19937_64 rng(fnv1a64(oov_seed_, key));
  std::vector<double> v(static_cast<size_t>(dim_));
  for (double& x : v) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    x = -0.1 + 0.2 * u;
  }
  return v;
}

EmbeddingTable EmbeddingTable::parse(std::istream& in, int expected_dim,
                                     uint64_t oov_seed) {
  EmbeddingTable table(expected_dim, oov_seed);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;  // whitespace-only line
    std::vector<double> vec;
    vec.reserve(static_cast<size_t>(expected_dim));
    std::string field;
    while (ls >> field) {
      size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(field, &used);
      } catch (const std::exception&) {
        throw ParseError("embeddings: non-numeric field '" + field + "'", lineno);
      }
      if (used != field.size())
        throw ParseError("embeddings: non-numeric field '" + field + "'", lineno);
      vec.push_back(v);
    }
    if (static_cast<int>(vec.size()) != expected_dim)
      throw ParseError("embeddings: expected " + std::to_string(expected_dim) +
                           " values, got " + std::to_string(vec.size()),
                       lineno);
    table.insert(key, std::move(vec));
  }
  return table;
}

EmbeddingTable EmbeddingTable::load(const std::string& path, int expected_dim,
                                    uint64_t oov_seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  return parse(in, expected_dim, oov_seed);
}

void EmbeddingTable::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write embedding file: " + path);
  // Sort keys so output is reproducible.
  std::vector<const std::string*> keys;
  keys.reserve(vectors_.size());
  for (const auto& [k, v] : vectors_) keys.push_back(&k);
  std::sort(keys.begin(), keys.end(),
            [](const std::string* a, const std::string* b) { return *a < *b; });
  char buf[64];
  for (const std::string* k : keys) {
    out << *k;
    for (double v : vectors_.at(*k)) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << ' ' << buf;
    }
    out << '\n';
  }
}

}  // namespace csqn
