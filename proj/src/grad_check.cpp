#include "cascade/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cascade {

GradCheckReport grad_check(const std::function<double(const Vec&)>& f, const Vec& theta,
                           const Vec& analytic_grad, double step) {
  if (theta.size() != analytic_grad.size()) {
    throw std::invalid_argument("grad_check: theta has length " + std::to_string(theta.size()) +
                                ", analytic gradient has length " +
                                std::to_string(analytic_grad.size()));
  }
  GradCheckReport report;
  Vec probe = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + step;
    double fp = f(probe);
    probe[i] = theta[i] - step;
    double fm = f(probe);
    probe[i] = theta[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      report.nonfinite = true;
      report.worst_parameter_index = i;
      report.max_relative_error = std::numeric_limits<double>::infinity();
      return report;
    }
    double numeric = (fp - fm) / (2.0 * step);
    double analytic = analytic_grad[i];
    double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
    double rel = std::fabs(analytic - numeric) / denom;
    if (rel >= report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_parameter_index = i;
      report.analytic = analytic;
      report.numeric = numeric;
    }
  }
  return report;
}

}  // namespace cascade
