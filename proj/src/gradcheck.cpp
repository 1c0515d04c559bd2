#include "csqn/gradcheck.hpp"

#include <cmath>

#include "csqn/errors.hpp"

namespace csqn {

GradCheckReport finite_diff_check(const std::function<Tensor(ParamStore&)>& f,
                                  ParamStore& params, double h) {
  if (!(h > 0.0)) throw std::domain_error("finite_diff_check: h must be positive");

  const double v1 = f(params).scalar_value();
  const double v2 = f(params).scalar_value();
  if (v1 != v2)
    throw VerificationError(
        "finite_diff_check: objective is not deterministic (" +
        std::to_string(v1) + " vs " + std::to_string(v2) + ")");

  // Analytic gradients from one reverse pass.
  params.zero_grad();
  backward(f(params));
  std::map<std::string, std::vector<double>> analytic;
  for (const auto& [name, t] : params) analytic[name] = t.grad();

  GradCheckReport report;
  for (auto& [name, t] : params) {
    std::vector<double>& theta = t.mutable_values();
    double worst = 0.0;
    for (size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + h;
      const double fp = f(params).scalar_value();
      theta[i] = saved - h;
      const double fm = f(params).scalar_value();
      theta[i] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[name][i];
      const double rel =
          std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      worst = std::max(worst, rel);
    }
    report.per_param[name] = worst;
    if (worst >= report.max_rel_error) {
      report.max_rel_error = worst;
      report.worst_param = name;
    }
  }
  return report;
}

}  // namespace csqn
