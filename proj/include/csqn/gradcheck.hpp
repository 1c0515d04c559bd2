#pragma once

#include <functional>
#include <map>
#include <string>

#include "csqn/param_store.hpp"
#include "csqn/tensor.hpp"

namespace csqn {

struct GradCheckReport {
  std::map<std::string, double> per_param;  // max relative error per parameter
  double max_rel_error = 0.0;
  std::string worst_param;
};

/// Central-difference verification of reverse-mode gradients.  `f` must be a
/// deterministic scalar function of the parameters; it is re-evaluated twice
/// up front and a bitwise mismatch raises VerificationError.  Relative error
/// is |analytic - numeric| / max(1, |analytic|, |numeric|).
GradCheckReport finite_diff_check(const std::function<Tensor(ParamStore&)>& f,
                                  ParamStore& params, double h = 1e-5);

}  // namespace csqn
