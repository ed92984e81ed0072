#pragma once

// Absorbing layer on both ends of the computational domain and its modal
// consequences: stretched solutions psi, layer amplitudes, the exact Robin
// coefficients nu seen from the interface, reflection coefficients and the
// gap |beta - nu|.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "ductpml/duct.hpp"
#include "ductpml/errors.hpp"
#include "ductpml/numeric.hpp"

namespace ductpml {

enum class Side { plus, minus };

inline const char* to_string(Side s) { return s == Side::plus ? "plus" : "minus"; }

enum class ProfileShape { quadratic, tabulated };

/// Absorption sigma(x1): zero on (x_minus, x_plus), growing into each layer.
///
/// Quadratic shape: sigma = sigma_plus (x1 - x_plus)^2 beyond x_plus and
/// sigma_minus (x_minus - x1)^2 below x_minus. Tabulated shape: piecewise
/// linear through samples at equally spaced depths s in [0, L] on each side.
class PmlProfile {
 public:
  static PmlProfile quadratic(double sigma_plus, double sigma_minus, const DuctConfig& cfg) {
    return quadratic(sigma_plus, sigma_minus, cfg.x_minus(), cfg.x_plus(), cfg.L());
  }

  static PmlProfile quadratic(double sigma_plus, double sigma_minus, double x_minus,
                              double x_plus, double L) {
    if (!(sigma_plus >= 0.0) || !(sigma_minus >= 0.0)) {
      throw ConfigError("absorption strengths must be non-negative");
    }
    if (!(L > 0.0)) throw ConfigError("layer length L must be positive");
    if (!(x_minus < x_plus)) throw ConfigError("x_minus < x_plus is required");
    PmlProfile p;
    p.shape_ = ProfileShape::quadratic;
    p.sigma_plus_ = sigma_plus;
    p.sigma_minus_ = sigma_minus;
    p.x_minus_ = x_minus;
    p.x_plus_ = x_plus;
    p.L_ = L;
    return p;
  }

  /// samples_*[i] = sigma at depth s = i L / (size - 1); the first sample must
  /// be zero.
  static PmlProfile tabulated(std::vector<double> samples_plus,
                              std::vector<double> samples_minus, const DuctConfig& cfg) {
    PmlProfile p;
    p.shape_ = ProfileShape::tabulated;
    p.x_minus_ = cfg.x_minus();
    p.x_plus_ = cfg.x_plus();
    p.L_ = cfg.L();
    for (auto* t : {&samples_plus, &samples_minus}) {
      if (t->size() < 2) throw ConfigError("tabulated profile needs at least two samples");
      if ((*t)[0] != 0.0) throw ConfigError("tabulated profile must vanish at the interface");
      for (double v : *t) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
          throw ConfigError("tabulated absorption must be finite and non-negative");
        }
      }
    }
    p.table_plus_ = std::move(samples_plus);
    p.table_minus_ = std::move(samples_minus);
    return p;
  }

  [[nodiscard]] ProfileShape shape() const noexcept { return shape_; }
  [[nodiscard]] double sigma_plus() const noexcept { return sigma_plus_; }
  [[nodiscard]] double sigma_minus() const noexcept { return sigma_minus_; }
  [[nodiscard]] double x_minus() const noexcept { return x_minus_; }
  [[nodiscard]] double x_plus() const noexcept { return x_plus_; }
  [[nodiscard]] double L() const noexcept { return L_; }
  [[nodiscard]] const std::vector<double>& table(Side s) const {
    return s == Side::plus ? table_plus_ : table_minus_;
  }

  /// Same profile with another layer length (tabulated samples are
  /// stretched over the new length).
  [[nodiscard]] PmlProfile with_layer_length(double L) const {
    if (!(L > 0.0)) throw ConfigError("layer length L must be positive");
    PmlProfile p = *this;
    p.L_ = L;
    return p;
  }

  /// sigma as a function of depth s >= 0 into the layer on one side.
  [[nodiscard]] double sigma_depth(Side side, double s) const {
    if (s <= 0.0) return 0.0;
    if (shape_ == ProfileShape::quadratic) {
      return (side == Side::plus ? sigma_plus_ : sigma_minus_) * s * s;
    }
    const auto& t = table(side);
    const double step = L_ / double(t.size() - 1);
    const double pos = s / step;
    if (pos >= double(t.size() - 1)) return t.back();
    const auto i = static_cast<std::size_t>(pos);
    const double w = pos - double(i);
    return (1.0 - w) * t[i] + w * t[i + 1];
  }

  /// Integral of sigma over depths [0, s].
  [[nodiscard]] double sigma_integral(Side side, double s) const {
    if (s <= 0.0) return 0.0;
    if (shape_ == ProfileShape::quadratic) {
      return (side == Side::plus ? sigma_plus_ : sigma_minus_) * s * s * s / 3.0;
    }
    const auto& t = table(side);
    const double step = L_ / double(t.size() - 1);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      const double lo = double(i) * step;
      if (lo >= s) break;
      const double hi = std::min(s, lo + step);
      const double vhi = sigma_depth(side, hi);
      acc += 0.5 * (t[i] + vhi) * (hi - lo);
    }
    if (s > L_) acc += t.back() * (s - L_);
    return acc;
  }

  /// Integral over depths [0, s] of min(1, sigma/omega).
  [[nodiscard]] double sigma_tilde_integral(Side side, double s, double omega) const {
    if (s <= 0.0) return 0.0;
    if (shape_ == ProfileShape::quadratic) {
      const double a = side == Side::plus ? sigma_plus_ : sigma_minus_;
      if (a <= 0.0) return 0.0;
      const double s_star = std::sqrt(omega / a);
      if (s <= s_star) return a * s * s * s / (3.0 * omega);
      return s_star / 3.0 + (s - s_star);
    }
    const auto& t = table(side);
    const double step = L_ / double(t.size() - 1);
    double acc = 0.0;
    auto piece = [&](double lo, double hi, double vlo, double vhi) {
      // exact integral of min(1, v/omega) for v linear on [lo, hi]
      const double ulo = vlo / omega, uhi = vhi / omega;
      const double len = hi - lo;
      if (ulo <= 1.0 && uhi <= 1.0) return 0.5 * (ulo + uhi) * len;
      if (ulo >= 1.0 && uhi >= 1.0) return len;
      const double frac = (1.0 - ulo) / (uhi - ulo);
      const double xc = frac * len;
      if (ulo < 1.0) return 0.5 * (ulo + 1.0) * xc + (len - xc);
      return xc + 0.5 * (1.0 + uhi) * (len - xc);
    };
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      const double lo = double(i) * step;
      if (lo >= s) break;
      const double hi = std::min(s, lo + step);
      acc += piece(lo, hi, t[i], sigma_depth(side, hi));
    }
    if (s > L_) acc += std::min(1.0, t.back() / omega) * (s - L_);
    return acc;
  }

  /// Largest sigma reached inside the layers.
  [[nodiscard]] double sigma_max() const {
    if (shape_ == ProfileShape::quadratic) return std::max(sigma_plus_, sigma_minus_) * L_ * L_;
    double m = 0.0;
    for (double v : table_plus_) m = std::max(m, v);
    for (double v : table_minus_) m = std::max(m, v);
    return m;
  }

 private:
  PmlProfile() = default;

  ProfileShape shape_ = ProfileShape::quadratic;
  double sigma_plus_ = 0.0, sigma_minus_ = 0.0;
  double x_minus_ = -1.0, x_plus_ = 1.0, L_ = 1.0;
  std::vector<double> table_plus_, table_minus_;
};

/// sigma(x1).
inline double sigma(const PmlProfile& p, double x1) {
  if (x1 > p.x_plus()) return p.sigma_depth(Side::plus, x1 - p.x_plus());
  if (x1 < p.x_minus()) return p.sigma_depth(Side::minus, p.x_minus() - x1);
  return 0.0;
}

/// alpha = -i omega / (-i omega + sigma).
inline cplx alpha(const PmlProfile& p, double x1, double omega) {
  if (!(omega > 0.0)) throw DomainError("omega must be positive");
  const double s = sigma(p, x1);
  if (s == 0.0) return {1.0, 0.0};
  const cplx mi_w{0.0, -omega};
  return mi_w / (mi_w + s);
}

/// 1/alpha = 1 + i sigma/omega.
inline cplx inverse_alpha(const PmlProfile& p, double x1, double omega) {
  return {1.0, sigma(p, x1) / omega};
}

/// Integral of 1/alpha over depths [0, s] on one side: s + i int sigma / omega.
inline cplx stretch_integral(const PmlProfile& p, Side side, double s, double omega) {
  if (!(s >= 0.0)) throw DomainError("stretch depth must be non-negative");
  return {s, p.sigma_integral(side, s) / omega};
}

inline cplx stretch_integral(const PmlProfile& p, Side side, double omega) {
  return stretch_integral(p, side, p.L(), omega);
}

struct PsiValue {
  cplx plus;        // psi^+(x1)
  cplx minus;       // psi^-(x1)
  cplx d_plus;      // d/dx1 psi^+
  cplx d_minus;     // d/dx1 psi^-
};

/// Stretched modal solutions in the layer on `side`, normalized to 1 at the
/// interface:
///
///   psi^+-(x1) = exp(-i mu (x1 - x_s) + i (beta^+- + mu) int_{x_s}^{x1} 1/alpha)
///
/// with mu = M k / (1 - M^2) and x_s the interface on that side. They solve
/// alpha (d/dx1 + i mu) psi = i (beta + mu) psi.
inline PsiValue psi_mode(int n, double x1, Side side, const PmlProfile& p,
                         const DuctConfig& cfg) {
  const double eps = 1e-12 * (1.0 + std::abs(x1));
  if (side == Side::plus && !(x1 >= p.x_plus() - eps && x1 <= p.x_plus() + p.L() + eps)) {
    throw DomainError("x1 outside the plus-side layer");
  }
  if (side == Side::minus && !(x1 <= p.x_minus() + eps && x1 >= p.x_minus() - p.L() - eps)) {
    throw DomainError("x1 outside the minus-side layer");
  }
  const auto w = axial_wavenumbers(n, cfg);
  const double mu = cfg.convective_shift();
  const double omega = cfg.omega();
  const double xs = side == Side::plus ? p.x_plus() : p.x_minus();
  const double depth = std::abs(x1 - xs);
  cplx I = stretch_integral(p, side, depth, omega);
  if (side == Side::minus) I = -I;  // oriented integral from x_s to x1
  const cplx i{0.0, 1.0};
  const cplx shift = -i * mu * (x1 - xs);
  PsiValue v;
  v.plus = std::exp(shift + i * (w.plus + mu) * I);
  v.minus = std::exp(shift + i * (w.minus + mu) * I);
  const cplx ia = inverse_alpha(p, x1, omega);
  v.d_plus = (-i * mu + i * (w.plus + mu) * ia) * v.plus;
  v.d_minus = (-i * mu + i * (w.minus + mu) * ia) * v.minus;
  return v;
}

/// Residual |alpha (d/dx1 + i mu) psi - i (beta + mu) psi| of both branches.
inline double psi_eigen_residual(int n, double x1, Side side, const PmlProfile& p,
                                 const DuctConfig& cfg) {
  const auto v = psi_mode(n, x1, side, p, cfg);
  const auto w = axial_wavenumbers(n, cfg);
  const double mu = cfg.convective_shift();
  const cplx a = alpha(p, x1, cfg.omega());
  const cplx i{0.0, 1.0};
  const double rp = std::abs(a * (v.d_plus + i * mu * v.plus) - i * (w.plus + mu) * v.plus);
  const double rm = std::abs(a * (v.d_minus + i * mu * v.minus) - i * (w.minus + mu) * v.minus);
  return std::max(rp, rm);
}

/// Layer amplitudes. On the plus side the layer field is
/// A^+ psi^+ + A^- psi^-; on the minus side it is B^- psi^+ + B^+ psi^-, so
/// that the first-named coefficient multiplies the outgoing branch. Both
/// pairs sum to 1 and give zero at the outer end of the layer.
struct ModalAmplitudes {
  cplx plus;   // A^+ or B^+
  cplx minus;  // A^- or B^-
};

namespace detail {

/// z = -i (beta^+ - beta^-) S, with S the stretch integral over the whole
/// layer; Re z > 0 under the non-resonance condition.
inline cplx layer_exponent(int n, Side side, const PmlProfile& p, const DuctConfig& cfg) {
  const auto w = axial_wavenumbers(n, cfg);
  const cplx S = stretch_integral(p, side, cfg.omega());
  return cplx{0.0, -1.0} * (w.plus - w.minus) * S;
}

}  // namespace detail

/// A^+- = -+ e^{i beta^-+ S} / (e^{i beta^+ S} - e^{i beta^- S}), written as
/// A^+ = 1 / (1 - e^{-z}), A^- = 1 / (1 - e^{z}). Same expressions with the
/// minus-side stretch integral give B^+-.
inline ModalAmplitudes modal_amplitudes(int n, Side side, const PmlProfile& p,
                                        const DuctConfig& cfg) {
  const cplx z = detail::layer_exponent(n, side, p, cfg);
  const cplx em = expm1(-z);  // e^{-z} - 1
  if (std::abs(em) < 1e-14) {
    throw DegenerateLayerError("layer amplitude denominator vanishes for mode " +
                               std::to_string(n));
  }
  ModalAmplitudes a;
  a.plus = -1.0 / em;
  // 1 - A^+ computed without cancellation
  if (z.real() > 700.0) {
    a.minus = -std::exp(-z) / (1.0 - std::exp(-z));
  } else {
    a.minus = -1.0 / expm1(z);
  }
  return a;
}

/// Outer-end value A^+ psi^+(end) + A^- psi^-(end) (or the minus-side analog).
inline cplx layer_end_value(int n, Side side, const PmlProfile& p, const DuctConfig& cfg) {
  const auto a = modal_amplitudes(n, side, p, cfg);
  const double xe = side == Side::plus ? p.x_plus() + p.L() : p.x_minus() - p.L();
  const auto v = psi_mode(n, xe, side, p, cfg);
  return side == Side::plus ? a.plus * v.plus + a.minus * v.minus
                            : a.minus * v.plus + a.plus * v.minus;
}

/// Robin coefficient nu on one side: p_n' = i nu p_n at the interface.
/// Plus side nu^+ = A^+ beta^+ + A^- beta^-; minus side
/// nu^- = B^- beta^+ + B^+ beta^-.
inline cplx nu_coefficient(int n, Side side, const PmlProfile& p, const DuctConfig& cfg) {
  const auto w = axial_wavenumbers(n, cfg);
  const auto a = modal_amplitudes(n, side, p, cfg);
  return side == Side::plus ? a.plus * w.plus + a.minus * w.minus
                            : a.minus * w.plus + a.plus * w.minus;
}

/// Closed forms
///   nu^+ = beta^+ - (beta^+ - beta^-) / (1 - e^{-i (beta^+ - beta^-) S+})
///   nu^- = beta^- + (beta^+ - beta^-) / (1 - e^{-i (beta^+ - beta^-) S-})
inline cplx nu_closed_form(int n, Side side, const PmlProfile& p, const DuctConfig& cfg) {
  const auto w = axial_wavenumbers(n, cfg);
  const cplx delta = w.plus - w.minus;
  const cplx S = stretch_integral(p, side, cfg.omega());
  const cplx den = 1.0 - std::exp(cplx{0.0, -1.0} * delta * S);
  if (std::abs(den) < 1e-14) {
    throw DegenerateLayerError("nu denominator vanishes for mode " + std::to_string(n));
  }
  return side == Side::plus ? w.plus - delta / den : w.minus + delta / den;
}

struct NuPair {
  cplx plus;
  cplx minus;
};

inline NuPair nu_coefficients(int n, const PmlProfile& p, const DuctConfig& cfg) {
  return {nu_coefficient(n, Side::plus, p, cfg), nu_coefficient(n, Side::minus, p, cfg)};
}

/// |reflected / outgoing| amplitude ratio produced by the terminated layer.
inline double reflection_coefficient(int n, Side side, const PmlProfile& p,
                                     const DuctConfig& cfg) {
  const cplx z = detail::layer_exponent(n, side, p, cfg);
  if (z.real() > 700.0) return std::exp(-z.real());
  const auto a = modal_amplitudes(n, side, p, cfg);
  return std::abs(a.minus / a.plus);
}

/// Closed forms of the reflection coefficient: for propagating modes
/// exp(-(2k/(1-M^2)) sqrt(1 - n^2/K0^2) int sigma/omega), for evanescent modes
/// exp(-(2kL/(1-M^2)) sqrt(n^2/K0^2 - 1)).
inline double reflection_closed_form(int n, Side side, const PmlProfile& p,
                                     const DuctConfig& cfg) {
  const auto w = axial_wavenumbers(n, cfg);
  const auto cut = cutoff_numbers(cfg);
  const double r = double(n) / cut.K0;
  const double pre = 2.0 * cfg.k() / cfg.beta_sq();
  if (w.kind == ModeKind::propagating) {
    return std::exp(-pre * std::sqrt(1.0 - r * r) * p.sigma_integral(side, p.L()) / cfg.omega());
  }
  return std::exp(-pre * p.L() * std::sqrt(r * r - 1.0));
}

struct GapBound {
  double measured = 0.0;        // |beta - nu| on the chosen side
  double bound = 0.0;           // right-hand side of the gap estimate
  double log_measured = 0.0;    // natural log of measured (finite even when it underflows)
  double log_bound = 0.0;
  bool applicable = false;      // Re z >= ln 2
  bool underflow = false;       // measured below e^{-700}, reported as 0
};

/// Gap between the exact and layer Robin coefficients and its bound
///   |Delta| / |1 - e^{-z}|  <=  2 |Delta| e^{-Re z}
/// where Delta = beta^+ - beta^-, valid once Re z >= ln 2. |Delta| equals
/// (2k/(1-M^2)) sqrt(|1 - n^2/K0^2|). Everything is evaluated in log space.
inline GapBound dtn_gap_bound(int n, Side side, const PmlProfile& p, const DuctConfig& cfg) {
  const auto w = axial_wavenumbers(n, cfg);
  const cplx delta = w.plus - w.minus;
  const cplx z = detail::layer_exponent(n, side, p, cfg);
  GapBound g;
  const double log_delta = std::log(std::abs(delta));
  // |Delta A^-| = |Delta| / |e^{z} - 1|, and log|e^z - 1| = Re z + log|1 - e^{-z}|
  const double log_den = z.real() > 30.0 ? z.real() + std::log(std::abs(1.0 - std::exp(-z)))
                                         : std::log(std::abs(expm1(z)));
  g.log_measured = log_delta - log_den;
  g.log_bound = std::log(2.0) + log_delta - z.real();
  g.applicable = z.real() >= std::log(2.0);
  g.underflow = g.log_measured < -700.0;
  g.measured = g.underflow ? 0.0 : std::exp(g.log_measured);
  g.bound = g.log_bound < -700.0 ? 0.0 : std::exp(g.log_bound);
  return g;
}

/// C2 = (2k/(1-M^2)) min(1, sqrt((N0+1)^2/K0^2 - 1)).
inline double decay_constant_c2(const DuctConfig& cfg) {
  const auto cut = cutoff_numbers(cfg);
  const double r = (cut.N0 + 1.0) / cut.K0;
  return 2.0 * cfg.k() / cfg.beta_sq() * std::min(1.0, std::sqrt(r * r - 1.0));
}

/// (1-M^2) omega^2 / (sigma_max^2 + omega^2); a lower bound for the real
/// part of the layer coefficient, reported as a diagnostic.
inline double coercivity_constant(const PmlProfile& p, const DuctConfig& cfg) {
  const double w = cfg.omega();
  const double s = p.sigma_max();
  return cfg.beta_sq() * w * w / (s * s + w * w);
}

}  // namespace ductpml
