#pragma once

// Bessel functions J0, Y0 (and J1, Y1) of positive real argument and the
// Hankel function H0^(1) = J0 + i Y0.
//
// z <= 12: ascending power series summed in extended precision.
// z >  12: Hankel's large-argument expansion, truncated at its smallest term.

#include <cmath>
#include <complex>
#include <numbers>

#include "ductpml/errors.hpp"

namespace ductpml {

/// Argument at which evaluation switches from the power series to the
/// asymptotic expansion.
inline constexpr double bessel_crossover = 12.0;

struct BesselPair {
  double j;
  double y;
};

struct HankelValue {
  double j0;
  double y0;
  std::complex<double> h0;
};

namespace detail {

using ld = long double;

inline constexpr ld euler_gamma_ld = 0.57721566490153286060651209008240243L;

inline BesselPair bessel01_series(int order, double x) {
  const ld z = x;
  const ld q = z * z / 4;
  const ld two_over_pi = 2 / std::numbers::pi_v<ld>;
  const ld log_term = std::log(z / 2) + euler_gamma_ld;
  if (order == 0) {
    // J0 = sum (-q)^m / (m!)^2
    // Y0 = (2/pi) (ln(z/2) + gamma) J0 + (2/pi) sum (-1)^(m+1) H_m q^m/(m!)^2
    ld term = 1, j = 1, ysum = 0, harmonic = 0;
    for (int m = 1; m < 200; ++m) {
      term *= -q / (ld(m) * m);
      harmonic += ld(1) / m;
      j += term;
      ysum -= harmonic * term;
      if (std::abs(term) * (1 + harmonic) < 1e-22L * std::abs(j) + 1e-30L) break;
    }
    return {double(j), double(two_over_pi * (log_term * j + ysum))};
  }
  // J1 = (z/2) sum (-q)^m / (m! (m+1)!)
  // Y1 = (2/pi) (ln(z/2) + gamma) J1 - 2/(pi z)
  //      - (1/pi) (z/2) sum (-q)^m (H_m + H_{m+1}) / (m! (m+1)!)
  ld term = z / 2, j = term, hm = 0, hm1 = 1;
  ld ysum = term * (hm + hm1);
  for (int m = 1; m < 200; ++m) {
    term *= -q / (ld(m) * (m + 1));
    hm += ld(1) / m;
    hm1 += ld(1) / (m + 1);
    j += term;
    ysum += term * (hm + hm1);
    if (std::abs(term) * (1 + hm1) < 1e-22L * std::abs(j) + 1e-30L) break;
  }
  const ld y = two_over_pi * log_term * j - two_over_pi / z -
               ysum / std::numbers::pi_v<ld>;
  return {double(j), double(y)};
}

inline BesselPair bessel01_asymptotic(int order, double x) {
  // H_nu(z) ~ sqrt(2/(pi z)) e^{i chi} (P + i Q), chi = z - (2 nu + 1) pi/4,
  // with a_k = prod_{j=1..k} (4 nu^2 - (2j-1)^2) / (k! 8^k).
  const ld z = x;
  const ld mu = 4.0L * order * order;
  ld p = 1, q = 0, term = 1, prev = 1e300L;
  for (int kk = 1; kk < 120; ++kk) {
    term *= (mu - ld(2 * kk - 1) * (2 * kk - 1)) / (ld(kk) * 8 * z);
    const ld mag = std::abs(term);
    if (mag >= prev) break;
    prev = mag;
    // a_k / z^k with i^k phase: k = 1 -> +iQ, 2 -> -P, 3 -> -iQ, 4 -> +P ...
    switch (kk % 4) {
      case 1: q += term; break;
      case 2: p -= term; break;
      case 3: q -= term; break;
      default: p += term; break;
    }
    if (mag < 1e-21L) break;
  }
  const ld chi = z - (2 * order + 1) * std::numbers::pi_v<ld> / 4;
  const ld amp = std::sqrt(2 / (std::numbers::pi_v<ld> * z));
  const ld c = std::cos(chi), s = std::sin(chi);
  return {double(amp * (p * c - q * s)), double(amp * (p * s + q * c))};
}

inline void require_positive(double z) {
  if (!(z > 0.0) || !std::isfinite(z)) {
    throw DomainError("Bessel argument must be positive and finite");
  }
}

}  // namespace detail

/// (J0(z), Y0(z)) for z > 0.
inline BesselPair bessel0(double z) {
  detail::require_positive(z);
  return z <= bessel_crossover ? detail::bessel01_series(0, z)
                               : detail::bessel01_asymptotic(0, z);
}

/// (J1(z), Y1(z)) for z > 0.
inline BesselPair bessel1(double z) {
  detail::require_positive(z);
  return z <= bessel_crossover ? detail::bessel01_series(1, z)
                               : detail::bessel01_asymptotic(1, z);
}

inline HankelValue hankel0_value(double z) {
  const auto b = bessel0(z);
  return {b.j, b.y, {b.j, b.y}};
}

/// H0^(1)(z) = J0(z) + i Y0(z), absolute error below 1e-10 on (0, 1e4].
inline std::complex<double> hankel0(double z) { return hankel0_value(z).h0; }

/// Leading term sqrt(2/(pi z)) e^{i(z - pi/4)} of the large-argument
/// behaviour; relative error about 1/(8z).
inline std::complex<double> hankel0_asymptotic(double z) {
  const double amp = std::sqrt(2.0 / (std::numbers::pi * z));
  return std::polar(amp, z - 0.25 * std::numbers::pi);
}

}  // namespace ductpml
