#pragma once

#include <functional>

namespace csbp {

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  int intervals = 0;
};

struct QuadratureOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-300;
  int max_intervals = 2000;
};

/// Globally adaptive 15-point Gauss-Kronrod quadrature on [lo, hi].
/// Throws QuadratureError if the error estimate does not meet the tolerance
/// within `max_intervals` subdivisions.
QuadratureResult integrate(const std::function<double(double)>& f, double lo, double hi,
                           const QuadratureOptions& opts = {});

}  // namespace csbp
