#pragma once

#include <functional>

#include "cascade/matrix.hpp"

namespace cascade {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_parameter_index = 0;
  double analytic = 0.0;  // analytic gradient at the worst index
  double numeric = 0.0;   // central difference at the worst index
  bool nonfinite = false; // f evaluated to a non-finite value
};

// Central-difference check of an analytic gradient. Relative error per
// parameter is |analytic - numeric| / max(1, |analytic|, |numeric|).
GradCheckReport grad_check(const std::function<double(const Vec&)>& f, const Vec& theta,
                           const Vec& analytic_grad, double step = 1e-5);

}  // namespace cascade
