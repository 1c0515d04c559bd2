#pragma once

#include <string>
#include <vector>

#include "csqn/param_store.hpp"
#include "csqn/tensor.hpp"

namespace csqn {

/// Serialized named parameter set plus the configuration that produced it.
/// Binary container: magic "CSQN", format version, config echo, then one
/// (name, shape, little-endian f64 values) record per parameter in name
/// order.  Save/load round-trips bitwise.
struct Checkpoint {
  struct Entry {
    std::string name;
    Shape shape;
    std::vector<double> values;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  std::string config_json;
  std::vector<Entry> params;  // sorted by name

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;

  static Checkpoint from_store(const ParamStore& store, std::string config_json);

  /// Copies values into an identically-structured store; name or shape
  /// mismatches throw.
  void apply_to(ParamStore& store) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace csqn
