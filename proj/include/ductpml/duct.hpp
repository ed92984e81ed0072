#pragma once

// Geometry and flow of the infinite 2D duct {x1 in R, 0 < x2 < d} with a
// uniform subsonic mean flow, its cosine transverse basis and the axial
// dispersion relation
//
//   -(1-M^2) beta^2 - 2 k M beta + k^2 = (n pi / d)^2.

#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ductpml/errors.hpp"

namespace ductpml {

using cplx = std::complex<double>;

/// Input record for DuctConfig. `omega` may be left unset, in which case it
/// is derived as k * c0.
struct DuctParams {
  double d = 1.0;
  double M = 0.0;
  double k = 1.0;
  std::optional<double> omega;
  double c0 = 1.0;
  double x_minus = -1.0;
  double x_plus = 1.0;
  double L = 1.0;

  bool operator==(const DuctParams&) const = default;
};

/// Validated, immutable duct setup.
class DuctConfig {
 public:
  /// Relative distance to a transverse cutoff below which construction fails.
  static constexpr double cutoff_tolerance = 1e-8;

  explicit DuctConfig(const DuctParams& p)
      : d_(p.d), M_(p.M), k_(p.k), c0_(p.c0), x_minus_(p.x_minus),
        x_plus_(p.x_plus), L_(p.L) {
    if (!(d_ > 0.0) || !std::isfinite(d_)) {
      throw ConfigError("duct height d must be positive");
    }
    if (!(M_ >= 0.0 && M_ < 1.0)) {
      throw ConfigError("Mach number must satisfy 0 <= M < 1");
    }
    if (!(k_ > 0.0) || !std::isfinite(k_)) {
      throw ConfigError("wavenumber k must be positive");
    }
    if (!(c0_ > 0.0) || !std::isfinite(c0_)) {
      throw ConfigError("sound speed c0 must be positive");
    }
    if (!(x_minus_ < x_plus_)) {
      throw ConfigError("computational domain requires x_minus < x_plus");
    }
    if (!(L_ > 0.0) || !std::isfinite(L_)) {
      throw ConfigError("layer length L must be positive");
    }
    if (p.omega) {
      omega_ = *p.omega;
      if (!(omega_ > 0.0) ||
          std::abs(k_ - omega_ / c0_) > 1e-12 * k_) {
        throw ConfigError("inconsistent omega: k = omega / c0 is required");
      }
    } else {
      omega_ = k_ * c0_;
    }
    check_cutoff();
  }

  [[nodiscard]] double d() const noexcept { return d_; }
  [[nodiscard]] double M() const noexcept { return M_; }
  [[nodiscard]] double k() const noexcept { return k_; }
  [[nodiscard]] double omega() const noexcept { return omega_; }
  [[nodiscard]] double c0() const noexcept { return c0_; }
  [[nodiscard]] double x_minus() const noexcept { return x_minus_; }
  [[nodiscard]] double x_plus() const noexcept { return x_plus_; }
  [[nodiscard]] double L() const noexcept { return L_; }

  /// 1 - M^2.
  [[nodiscard]] double beta_sq() const noexcept { return 1.0 - M_ * M_; }
  /// Convective shift M k / (1 - M^2) appearing in the stretched derivative.
  [[nodiscard]] double convective_shift() const noexcept {
    return M_ * k_ / beta_sq();
  }
  /// Squared transverse wavenumber (n pi / d)^2.
  [[nodiscard]] double transverse_eigenvalue(int n) const noexcept {
    const double t = n * std::numbers::pi / d_;
    return t * t;
  }

  [[nodiscard]] DuctParams params() const {
    return DuctParams{d_, M_, k_, omega_, c0_, x_minus_, x_plus_, L_};
  }

  /// Same duct with a different layer length.
  [[nodiscard]] DuctConfig with_layer_length(double L) const {
    DuctParams p = params();
    p.L = L;
    return DuctConfig(p);
  }

 private:
  void check_cutoff() const {
    const double step = std::sqrt(beta_sq()) * std::numbers::pi / d_;
    const double nearest = std::round(k_ / step);
    for (double n = std::max(1.0, nearest - 1.0); n <= nearest + 1.0; n += 1.0) {
      if (std::abs(k_ - n * step) <= cutoff_tolerance * k_) {
        std::ostringstream msg;
        msg << "k = " << k_ << " is at the cutoff of mode " << n
            << "; k != sqrt(1-M^2) n pi / d is required";
        throw ResonanceError(msg.str());
      }
    }
  }

  double d_, M_, k_, omega_ = 0.0, c0_, x_minus_, x_plus_, L_;
};

/// Transverse mode phi_n(x2): 1/sqrt(d) for n = 0, sqrt(2/d) cos(n pi x2 / d)
/// otherwise. Orthonormal in L^2(0, d).
inline double mode_shape(int n, double x2, double d) {
  if (n < 0) throw DomainError("mode index must be non-negative");
  if (!(x2 >= 0.0 && x2 <= d)) {
    throw DomainError("transverse coordinate outside [0, d]");
  }
  if (n == 0) return 1.0 / std::sqrt(d);
  return std::sqrt(2.0 / d) * std::cos(n * std::numbers::pi * x2 / d);
}

/// Integral of phi_n over [a, b] in closed form; [a, b] must lie in [0, d].
inline double mode_shape_integral(int n, double a, double b, double d) {
  if (n < 0) throw DomainError("mode index must be non-negative");
  if (!(a >= 0.0 && b <= d && a <= b)) {
    throw DomainError("transverse interval outside [0, d]");
  }
  if (n == 0) return (b - a) / std::sqrt(d);
  const double w = n * std::numbers::pi / d;
  // sin(w b) - sin(w a) = 2 cos(w (a+b)/2) sin(w (b-a)/2)
  return std::sqrt(2.0 / d) * 2.0 * std::cos(0.5 * w * (a + b)) *
         std::sin(0.5 * w * (b - a)) / w;
}

enum class ModeKind { propagating, evanescent };

inline const char* to_string(ModeKind kind) {
  return kind == ModeKind::propagating ? "propagating" : "evanescent";
}

template <std::floating_point Real = double>
struct AxialWavenumbers {
  std::complex<Real> plus;
  std::complex<Real> minus;
  ModeKind kind;
};

/// Roots beta^+_n, beta^-_n of the dispersion relation. Propagating modes
/// (positive discriminant) have real roots with beta^+ > beta^-; evanescent
/// modes have Im beta^+ > 0 and Im beta^- < 0.
///
/// `Real = long double` evaluates the roots in extended precision, which is
/// what the dispersion-residual contract at large n needs.
template <std::floating_point Real = double>
AxialWavenumbers<Real> axial_wavenumbers(int n, const DuctConfig& cfg) {
  if (n < 0) throw DomainError("mode index must be non-negative");
  const Real k = cfg.k();
  const Real M = cfg.M();
  const Real b2 = Real(1) - M * M;
  const Real t = Real(n) * std::numbers::pi_v<Real> / Real(cfg.d());
  const Real disc = k * k - t * t * b2;
  if (std::abs(disc) <= Real(DuctConfig::cutoff_tolerance) * k * k) {
    throw ResonanceError("mode " + std::to_string(n) +
                         " is at cutoff; axial wavenumbers coincide");
  }
  AxialWavenumbers<Real> w;
  if (disc > 0) {
    const Real s = std::sqrt(disc);
    // Larger-magnitude root first, the other one from the product of roots
    // -(k^2 - t^2)/(1-M^2), to avoid cancellation in -kM + s.
    const Real big = (-k * M - s) / b2;
    const Real prod = -(k - t) * (k + t) / b2;
    w.minus = {big, 0};
    w.plus = {M == 0 ? -big : prod / big, 0};
    w.kind = ModeKind::propagating;
  } else {
    const Real s = std::sqrt(-disc);
    w.plus = {-k * M / b2, s / b2};
    w.minus = {-k * M / b2, -s / b2};
    w.kind = ModeKind::evanescent;
  }
  return w;
}

/// |-(1-M^2) beta^2 - 2 k M beta + k^2 - (n pi / d)^2|, evaluated in the
/// precision of `beta`.
template <std::floating_point Real>
Real dispersion_residual(std::complex<Real> beta, int n, const DuctConfig& cfg) {
  const Real k = cfg.k();
  const Real M = cfg.M();
  const Real t = Real(n) * std::numbers::pi_v<Real> / Real(cfg.d());
  const std::complex<Real> r = -(Real(1) - M * M) * beta * beta -
                               Real(2) * k * M * beta + (k - t) * (k + t);
  return std::abs(r);
}

inline double dispersion_residual(cplx beta, int n, const DuctConfig& cfg) {
  return dispersion_residual<double>(beta, n, cfg);
}

struct CutoffNumbers {
  double K0;
  int N0;
};

/// K0 = k d / (pi sqrt(1-M^2)) and N0 = floor(K0), the number of
/// propagating modes minus one.
inline CutoffNumbers cutoff_numbers(const DuctConfig& cfg) {
  const double K0 =
      cfg.k() * cfg.d() / (std::numbers::pi * std::sqrt(cfg.beta_sq()));
  return {K0, static_cast<int>(std::floor(K0))};
}

struct DispersionTable {
  int n_max = 0;
  std::vector<cplx> beta_plus;
  std::vector<cplx> beta_minus;
  std::vector<ModeKind> kind;
  double K0 = 0.0;
  int N0 = 0;
};

/// Wavenumbers for modes 0 .. n_max - 1.
inline DispersionTable dispersion_table(const DuctConfig& cfg, int n_max) {
  if (n_max < 1) throw DomainError("dispersion table needs at least one mode");
  DispersionTable t;
  t.n_max = n_max;
  const auto cut = cutoff_numbers(cfg);
  t.K0 = cut.K0;
  t.N0 = cut.N0;
  t.beta_plus.reserve(n_max);
  t.beta_minus.reserve(n_max);
  t.kind.reserve(n_max);
  for (int n = 0; n < n_max; ++n) {
    const auto w = axial_wavenumbers(n, cfg);
    t.beta_plus.push_back(w.plus);
    t.beta_minus.push_back(w.minus);
    t.kind.push_back(w.kind);
  }
  return t;
}

}  // namespace ductpml
