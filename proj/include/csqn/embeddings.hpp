#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace csqn {

/// Frozen embedding table.  Lookups never train; out-of-vocabulary keys get a
/// deterministic pseudo-random vector in (-0.1, 0.1) derived from
/// (oov_seed, key), identical within a run and across runs.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(int dim, uint64_t oov_seed = 0);

  /// Whitespace text format, one `key v1 ... vd` per line.  Duplicate keys
  /// keep the first occurrence.  Wrong field counts and non-numeric fields
  /// raise ParseError naming the line.
  static EmbeddingTable load(const std::string& path, int expected_dim,
                             uint64_t oov_seed = 0);
  static EmbeddingTable parse(std::istream& in, int expected_dim,
                              uint64_t oov_seed = 0);

  int dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  bool contains(const std::string& key) const { return vectors_.count(key) != 0; }

  /// Inserts unless the key already exists (first occurrence wins).
  void insert(const std::string& key, std::vector<double> vec);

  std::vector<double> lookup(const std::string& key) const;

  void save(const std::string& path) const;

 private:
  int dim_;
  uint64_t oov_seed_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

}  // namespace csqn
