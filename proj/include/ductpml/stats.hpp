#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ductpml/errors.hpp"

namespace ductpml {

enum class RateTransform { loglog, loglinear };

struct RateFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
  std::size_t points_used = 0;
};

/// Weighted least squares of log(value) against log(x) (loglog) or x
/// (loglinear). Weights are 1/Var(log value) ~ (value/stderr)^2 by the delta
/// method; if any standard error is zero the fit is unweighted and the slope
/// error comes from the residuals. Points with non-positive values are
/// skipped.
inline RateFit fit_rate(const std::vector<double>& x, const std::vector<double>& values,
                        const std::vector<double>& std_errors,
                        RateTransform transform = RateTransform::loglog) {
  if (x.size() != values.size() || (!std_errors.empty() && std_errors.size() != x.size())) {
    throw ContractError("fit_rate: input sizes differ");
  }
  std::vector<double> u, v, s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) continue;
    if (transform == RateTransform::loglog && !(x[i] > 0.0)) continue;
    u.push_back(transform == RateTransform::loglog ? std::log(x[i]) : x[i]);
    v.push_back(std::log(values[i]));
    s.push_back(std_errors.empty() ? 0.0 : std_errors[i] / values[i]);
  }
  if (u.size() < 3) {
    throw InsufficientDataError("fit_rate needs at least 3 usable points, got " +
                                std::to_string(u.size()));
  }
  bool weighted = true;
  for (double e : s) {
    if (!(e > 0.0)) weighted = false;
  }
  const std::size_t n = u.size();
  double sw = 0, su = 0, sv = 0;
  std::vector<double> w(n, 1.0);
  if (weighted) {
    for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / (s[i] * s[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    sw += w[i];
    su += w[i] * u[i];
    sv += w[i] * v[i];
  }
  const double ub = su / sw, vb = sv / sw;
  double suu = 0, suv = 0;
  for (std::size_t i = 0; i < n; ++i) {
    suu += w[i] * (u[i] - ub) * (u[i] - ub);
    suv += w[i] * (u[i] - ub) * (v[i] - vb);
  }
  if (!(suu > 0.0)) throw InsufficientDataError("fit_rate: abscissae are all equal");
  RateFit f;
  f.slope = suv / suu;
  f.intercept = vb - f.slope * ub;
  f.points_used = n;
  if (weighted) {
    f.slope_stderr = std::sqrt(1.0 / suu);
  } else {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = v[i] - f.intercept - f.slope * u[i];
      rss += r * r;
    }
    f.slope_stderr = n > 2 ? std::sqrt(rss / double(n - 2) / suu) : 0.0;
  }
  return f;
}

}  // namespace ductpml
