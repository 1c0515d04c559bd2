#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "csqn/tensor.hpp"

namespace csqn {

/// Named collection of trainable tensors.  Names are unique and iteration is
/// always in lexicographic order, so optimizer sweeps are deterministic.
class ParamStore {
 public:
  Tensor& create(const std::string& name, Shape shape, std::vector<double> values);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  int64_t scalar_count() const;

  void zero_grad();
  void clear_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Tensor> params_;
};

}  // namespace csqn
