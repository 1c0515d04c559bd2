#include "csqn/param_store.hpp"

#include "csqn/errors.hpp"

namespace csqn {

Tensor& ParamStore::create(const std::string& name, Shape shape,
                           std::vector<double> values) {
  if (params_.count(name))
    throw StateError("ParamStore: duplicate parameter name '" + name + "'");
  auto [it, ok] = params_.emplace(
      name, Tensor(std::move(shape), std::move(values), /*requires_grad=*/true));
  (void)ok;
  return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end())
    throw StateError("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end())
    throw StateError("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

bool ParamStore::contains(const std::string& name) const {
  return params_.count(name) != 0;
}

int64_t ParamStore::scalar_count() const {
  int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [name, t] : params_) t.zero_grad();
}

void ParamStore::clear_grad() {
  for (auto& [name, t] : params_) t.clear_grad();
}

}  // namespace csqn
