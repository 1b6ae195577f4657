#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "saw/error.hpp"
#include "saw/tensor.hpp"

namespace saw {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

// Below this magnitude a central difference in double carries more rounding
// noise (about 1e-11 at eps = 1e-5) than 1e-4 of the gradient itself.
inline constexpr double kGradFloor = 1e-6;

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kGradFloor});
}

/// Compares analytic gradients against central differences
/// (f(theta + eps) - f(theta - eps)) / (2 eps), coordinate by coordinate.
///
/// `loss` evaluates f at the current parameter values. `backprop` evaluates f
/// and writes dL/dtheta into the (already zeroed) gradient slots. When
/// `max_per_param` is nonzero, only that many evenly spaced coordinates of
/// each tensor are perturbed.
template <class T>
GradCheckReport grad_check(ParamStore<T>& params, const std::function<T()>& loss,
                           const std::function<void()>& backprop, double eps = 1e-5,
                           std::size_t max_per_param = 0) {
  params.zero_grad();
  backprop();
  std::vector<Tensor<T>> analytic;
  analytic.reserve(params.size());
  for (const auto& e : params.entries()) analytic.push_back(e.param->grad);

  GradCheckReport report;
  report.worst_param = params.size() ? params.entries().front().name : std::string();
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto& entry = params.entries()[p];
    auto& values = entry.param->value.values();
    const std::size_t n = values.size();
    const std::size_t stride = (max_per_param == 0 || n <= max_per_param) ? 1 : n / max_per_param;
    for (std::size_t i = 0; i < n; i += stride) {
      const T saved = values[i];
      values[i] = saved + static_cast<T>(eps);
      const double up = static_cast<double>(loss());
      values[i] = saved - static_cast<T>(eps);
      const double down = static_cast<double>(loss());
      values[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw Error(ErrorKind::numeric, "grad_check: non-finite loss while perturbing " + entry.name);
      }
      const double numeric = (up - down) / (2.0 * eps);
      const double a = static_cast<double>(analytic[p][i]);
      const double err = relative_error(a, numeric);
      ++report.checked;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_param = entry.name;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace saw
