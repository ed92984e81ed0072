#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace ductpml {

/// e^z - 1 without cancellation for small |z|.
inline std::complex<double> expm1(std::complex<double> z) {
  const double a = z.real(), b = z.imag();
  const double s = std::sin(0.5 * b);
  return {std::expm1(a) * std::cos(b) - 2.0 * s * s, std::exp(a) * std::sin(b)};
}

/// (e^z - 1) / z, equal to 1 at z = 0.
inline std::complex<double> phi1(std::complex<double> z) {
  if (std::abs(z) < 1e-4) {
    return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0));
  }
  return expm1(z) / z;
}

/// Integral of exp(c x + e0) over [l, r], anchored at whichever endpoint has
/// the larger modulus of the integrand so nothing overflows when the
/// integrand is bounded on the interval.
inline std::complex<double> exp_integral(std::complex<double> c,
                                         std::complex<double> e0, double l,
                                         double r) {
  const double len = r - l;
  if (len == 0.0) return {0.0, 0.0};
  if (c.real() >= 0.0) {
    return std::exp(c * r + e0) * len * phi1(-c * len);
  }
  return std::exp(c * l + e0) * len * phi1(c * len);
}

/// Pairwise (cascade) summation; the result depends only on the order of the
/// input, never on scheduling.
template <typename T>
T pairwise_sum(std::span<const T> v) {
  if (v.empty()) return T{};
  if (v.size() <= 8) {
    T s = v[0];
    for (std::size_t i = 1; i < v.size(); ++i) s += v[i];
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

template <typename T>
T pairwise_sum(const std::vector<T>& v) {
  return pairwise_sum(std::span<const T>(v.data(), v.size()));
}

}  // namespace ductpml
