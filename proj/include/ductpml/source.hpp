#pragma once

// Axial source functions f_n(x1) for the per-mode problems.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <vector>

#include "ductpml/errors.hpp"

namespace ductpml {

/// Piecewise-constant function on [breaks.front(), breaks.back()), zero
/// elsewhere. values[i] lives on [breaks[i], breaks[i+1]).
struct PiecewiseConstant {
  std::vector<double> breaks;
  std::vector<std::complex<double>> values;

  [[nodiscard]] std::complex<double> operator()(double x) const {
    if (breaks.size() < 2 || x < breaks.front() || x >= breaks.back()) return {};
    const auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
    return values[static_cast<std::size_t>(it - breaks.begin()) - 1];
  }

  PiecewiseConstant& operator*=(std::complex<double> s) {
    for (auto& v : values) v *= s;
    return *this;
  }
};

/// Sum of an optional smooth part supported on [smooth_lo, smooth_hi] and
/// any number of piecewise-constant parts.
struct AxialSource {
  std::function<std::complex<double>(double)> smooth;
  double smooth_lo = 0.0;
  double smooth_hi = 0.0;
  std::vector<PiecewiseConstant> pieces;

  [[nodiscard]] bool empty() const { return !smooth && pieces.empty(); }

  [[nodiscard]] std::complex<double> operator()(double x) const {
    std::complex<double> v{};
    if (smooth && x >= smooth_lo && x <= smooth_hi) v += smooth(x);
    for (const auto& p : pieces) v += p(x);
    return v;
  }

  /// Smallest interval containing the support.
  [[nodiscard]] std::pair<double, double> support() const {
    double lo = 1e300, hi = -1e300;
    if (smooth) {
      lo = std::min(lo, smooth_lo);
      hi = std::max(hi, smooth_hi);
    }
    for (const auto& p : pieces) {
      if (p.breaks.size() < 2) continue;
      lo = std::min(lo, p.breaks.front());
      hi = std::max(hi, p.breaks.back());
    }
    return {lo, hi};
  }
};

inline AxialSource box_source(double a, double b, std::complex<double> value) {
  if (!(a < b)) throw DomainError("box source needs a < b");
  AxialSource s;
  s.pieces.push_back(PiecewiseConstant{{a, b}, {value}});
  return s;
}

/// amplitude * (1 - t^2)^4 with t = (x - center)/half_width; C^3 and
/// compactly supported.
inline AxialSource bump_source(double center, double half_width,
                               std::complex<double> amplitude) {
  if (!(half_width > 0.0)) throw DomainError("bump half-width must be positive");
  AxialSource s;
  s.smooth_lo = center - half_width;
  s.smooth_hi = center + half_width;
  s.smooth = [=](double x) {
    const double t = (x - center) / half_width;
    if (std::abs(t) >= 1.0) return std::complex<double>{};
    const double u = 1.0 - t * t;
    return amplitude * (u * u * u * u);
  };
  return s;
}

/// Deterministic source given as a finite expansion sum_n f_n(x1) phi_n(x2).
struct ModalSource {
  std::map<int, AxialSource> modes;

  [[nodiscard]] const AxialSource* mode(int n) const {
    const auto it = modes.find(n);
    return it == modes.end() ? nullptr : &it->second;
  }
  [[nodiscard]] bool empty() const { return modes.empty(); }
};

}  // namespace ductpml
