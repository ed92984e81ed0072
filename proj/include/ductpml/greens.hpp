#pragma once

// Green's function of the duct problem
//
//   (1-M^2) d11 G + d22 G + 2ikM d1 G + k^2 G = delta_y,  d2 G = 0 on the walls,
//
// outgoing at x1 -> +-inf. Two representations:
//
//  * images: sum over m of Phi(x, (y1, y2 + 2dm)) + Phi(x, (y1, -y2 + 2dm)),
//    with the free-space kernel
//      Phi(x, y) = -i / (4 sqrt(1-M^2)) H0(k rho(x - y)) exp(-i k M (x1-y1) / (1-M^2)),
//      rho(x) = sqrt(x1^2 + (1-M^2) x2^2) / (1-M^2).
//    The series converges conditionally; partial sums over the last quarter
//    are averaged with a smooth window.
//  * modes: sum_n phi_n(x2) phi_n(y2) g_n(x1, y1), geometric off the axial
//    diagonal.
//
// Near the singularity Phi splits into
//   -(1 / (2 pi sqrt(1-M^2))) ln(1/(k rho)) exp(-i k M (x1-y1)/(1-M^2)) + V(x, y)
// with V Lipschitz.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "ductpml/duct.hpp"
#include "ductpml/errors.hpp"
#include "ductpml/noise.hpp"
#include "ductpml/numeric.hpp"
#include "ductpml/quadrature.hpp"
#include "ductpml/source.hpp"
#include "ductpml/specfun.hpp"
#include "ductpml/stats.hpp"

namespace ductpml {

using Point = std::array<double, 2>;

struct GreensEvalParams {
  int n_images = 512;
  int n_modes = -1;             // -1: N0 + 30
  double min_axial_gap = -1.0;  // -1: 0.25 d
};

/// Fill defaults and check the truncation parameters against the duct.
inline GreensEvalParams resolve(GreensEvalParams p, const DuctConfig& cfg) {
  const int N0 = cutoff_numbers(cfg).N0;
  if (p.n_modes < 0) p.n_modes = N0 + 30;
  if (p.min_axial_gap < 0.0) p.min_axial_gap = 0.25 * cfg.d();
  if (p.n_images < 0) throw ConfigError("n_images must be non-negative");
  if (p.n_modes < N0 + 5) throw ConfigError("n_modes must be at least N0 + 5");
  if (!(p.min_axial_gap > 0.0)) throw ConfigError("min_axial_gap must be positive");
  return p;
}

/// sqrt(x1^2 + (1-M^2) x2^2) / (1-M^2).
inline double rho(const Point& x, const DuctConfig& cfg) {
  const double b2 = cfg.beta_sq();
  return std::sqrt(x[0] * x[0] + b2 * x[1] * x[1]) / b2;
}

namespace detail {

inline cplx convective_phase(double dx1, const DuctConfig& cfg) {
  return std::polar(1.0, -cfg.k() * cfg.M() * dx1 / cfg.beta_sq());
}

inline cplx phi_free_offset(double dx1, double dx2, const DuctConfig& cfg) {
  const double r = rho({dx1, dx2}, cfg);
  if (!(r > 0.0)) throw SingularityError("free-space kernel evaluated at coincident points");
  const double pref = 0.25 / std::sqrt(cfg.beta_sq());
  return cplx{0.0, -pref} * hankel0(cfg.k() * r) * convective_phase(dx1, cfg);
}

/// Logarithmic part of the kernel at offset x - y.
inline cplx phi_log_part(double dx1, double dx2, const DuctConfig& cfg) {
  const double r = rho({dx1, dx2}, cfg);
  const double pref = 1.0 / (2.0 * std::numbers::pi * std::sqrt(cfg.beta_sq()));
  return -pref * std::log(1.0 / (cfg.k() * r)) * convective_phase(dx1, cfg);
}

/// Lipschitz remainder Phi - log part; continuous at zero offset.
inline cplx phi_smooth_part(double dx1, double dx2, const DuctConfig& cfg) {
  const double r = rho({dx1, dx2}, cfg);
  if (cfg.k() * r < 1e-7) {
    const double s = std::sqrt(cfg.beta_sq());
    const double re = (std::numbers::egamma - std::numbers::ln2) / (2.0 * std::numbers::pi);
    // next terms are O((k r)^2 log(k r))
    return cplx{re, -0.25} / s * convective_phase(dx1, cfg);
  }
  return phi_free_offset(dx1, dx2, cfg) - phi_log_part(dx1, dx2, cfg);
}

}  // namespace detail

/// Free-space convected kernel Phi(x, y).
inline cplx phi_free(const Point& x, const Point& y, const DuctConfig& cfg) {
  return detail::phi_free_offset(x[0] - y[0], x[1] - y[1], cfg);
}

inline cplx phi_log_part(const Point& x, const Point& y, const DuctConfig& cfg) {
  return detail::phi_log_part(x[0] - y[0], x[1] - y[1], cfg);
}

inline cplx phi_smooth_part(const Point& x, const Point& y, const DuctConfig& cfg) {
  return detail::phi_smooth_part(x[0] - y[0], x[1] - y[1], cfg);
}

struct ImageSeriesValue {
  cplx value;
  double last_term = 0.0;  // modulus of the last image group added
  int terms = 0;
};

enum class ImageSet {
  all,
  /// drop the images y, (y1, -y2) and (y1, 2d - y2)
  far_only
};

namespace detail {

inline ImageSeriesValue image_series(const Point& x, const Point& y, int n_images,
                                     const DuctConfig& cfg, ImageSet set) {
  const double d = cfg.d();
  const double dx1 = x[0] - y[0];
  auto phi = [&](double y2) { return phi_free_offset(dx1, x[1] - y2, cfg); };
  cplx partial{};
  if (set == ImageSet::all) partial = phi(y[1]) + phi(-y[1]);
  const int N = n_images;
  // partial sums over the last quarter are averaged with the weight
  // (1-t^2)^8; their error oscillates like e^{i m 2dk/sqrt(1-M^2)} so the
  // weighted mean converges much faster than the plain one
  const int first_avg = N >= 4 ? N - N / 4 : N;
  const double span = double(N - first_avg) + 1.0;
  auto weight = [&](int m) {
    if (N - first_avg < 2) return 1.0;
    const double t = 2.0 * (double(m - first_avg) + 0.5) / span - 1.0;
    const double u = 1.0 - t * t;
    const double u2 = u * u, u4 = u2 * u2;
    return u4 * u4;
  };
  cplx avg{};
  double wsum = 0.0;
  double last = 0.0;
  if (first_avg == 0) {
    const double w = weight(0);
    avg += w * partial;
    wsum += w;
  }
  for (int m = 1; m <= N; ++m) {
    const double s = 2.0 * d * m;
    cplx t = phi(y[1] + s) + phi(y[1] - s) + phi(-y[1] - s);
    if (!(set == ImageSet::far_only && m == 1)) t += phi(-y[1] + s);
    partial += t;
    last = std::abs(t);
    if (m >= first_avg) {
      const double w = weight(m);
      avg += w * partial;
      wsum += w;
    }
  }
  return {avg / wsum, last, N};
}

}  // namespace detail

/// Image-series value of G(x, y) with n_images image groups beyond the head
/// Phi(x, y) + Phi(x, (y1, -y2)).
inline ImageSeriesValue greens_images(const Point& x, const Point& y,
                                      const GreensEvalParams& params, const DuctConfig& cfg) {
  if (params.n_images < 0) throw ConfigError("n_images must be non-negative");
  return detail::image_series(x, y, params.n_images, cfg, ImageSet::all);
}

struct ModeGreen {
  cplx value;
  cplx derivative;  // d/dx1; mean of the one-sided limits at x1 = y1
};

/// 1D Green's function of mode n:
///   g_n = C e^{i beta^+ (x1-y1)} (x1 > y1),  C e^{i beta^- (x1-y1)} (x1 < y1),
///   C = 1 / (i (1-M^2)(beta^+ - beta^-)).
inline ModeGreen mode_green_1d(int n, double x1, double y1, const DuctConfig& cfg) {
  const auto w = axial_wavenumbers(n, cfg);
  const cplx i{0.0, 1.0};
  const cplx C = 1.0 / (i * cfg.beta_sq() * (w.plus - w.minus));
  const double s = x1 - y1;
  if (s > 0.0) {
    const cplx v = C * std::exp(i * w.plus * s);
    return {v, i * w.plus * v};
  }
  if (s < 0.0) {
    const cplx v = C * std::exp(i * w.minus * s);
    return {v, i * w.minus * v};
  }
  return {C, 0.5 * i * (w.plus + w.minus) * C};
}

/// (1-M^2) [g_n'] at x1 = y1 from the analytic one-sided derivatives.
inline cplx mode_green_jump(int n, const DuctConfig& cfg) {
  const auto w = axial_wavenumbers(n, cfg);
  const cplx i{0.0, 1.0};
  const cplx C = 1.0 / (i * cfg.beta_sq() * (w.plus - w.minus));
  return cfg.beta_sq() * (i * w.plus * C - i * w.minus * C);
}

/// Integral of g_n(x1, y1) over y1 in [a, b].
inline cplx mode_green_axial_integral(int n, double x1, double a, double b,
                                      const DuctConfig& cfg) {
  if (!(b >= a)) throw DomainError("axial interval must satisfy a <= b");
  const auto w = axial_wavenumbers(n, cfg);
  const cplx i{0.0, 1.0};
  const cplx C = 1.0 / (i * cfg.beta_sq() * (w.plus - w.minus));
  cplx acc{};
  // y1 < x1: integrand C e^{i beta^+ u}, u = x1 - y1
  if (a < x1) {
    const double hi = std::min(b, x1);
    acc += exp_integral(i * w.plus, 0.0, x1 - hi, x1 - a);
  }
  // y1 > x1: integrand C e^{-i beta^- v}, v = y1 - x1
  if (b > x1) {
    const double lo = std::max(a, x1);
    acc += exp_integral(-i * w.minus, 0.0, lo - x1, b - x1);
  }
  return C * acc;
}

struct ModalSeriesValue {
  cplx value;
  double tail_bound = 0.0;
  int n_modes = 0;
};

/// Modal-series value of G(x, y); requires |x1 - y1| >= min_axial_gap.
inline ModalSeriesValue greens_modal(const Point& x, const Point& y,
                                     const GreensEvalParams& params_in,
                                     const DuctConfig& cfg) {
  const auto params = resolve(params_in, cfg);
  const double gap = std::abs(x[0] - y[0]);
  if (gap < params.min_axial_gap) {
    throw RepresentationError("axial gap below min_axial_gap; use greens_images");
  }
  const double d = cfg.d();
  ModalSeriesValue r;
  r.n_modes = params.n_modes;
  std::vector<cplx> terms(params.n_modes);
  for (int n = 0; n < params.n_modes; ++n) {
    terms[n] = mode_shape(n, x[1], d) * mode_shape(n, y[1], d) *
               mode_green_1d(n, x[0], y[0], cfg).value;
  }
  r.value = pairwise_sum(terms);
  // geometric tail: |g_n| <= |C_n| e^{-kappa_n gap}, kappa_{n+1} - kappa_n >= pi/(d sqrt(1-M^2))
  const int N = params.n_modes;
  const auto w = axial_wavenumbers(N, cfg);
  if (w.kind == ModeKind::evanescent) {
    const double C = 1.0 / (cfg.beta_sq() * std::abs(w.plus - w.minus));
    const double q = std::exp(-std::numbers::pi * gap / (d * std::sqrt(cfg.beta_sq())));
    r.tail_bound = (2.0 / d) * C * std::exp(-w.plus.imag() * gap) / (1.0 - q);
  } else {
    r.tail_bound = std::numeric_limits<double>::infinity();
  }
  return r;
}

/// Integral of G(x, .) over a cell through the modal series with n_modes
/// terms. Converges for any position of x (like n^-3 when x1 lies over the
/// cell), so with many modes it serves as a reference.
inline cplx cell_integral_modal(const Point& x, const Cell& c, int n_modes,
                                const DuctConfig& cfg) {
  std::vector<cplx> terms(n_modes);
  for (int n = 0; n < n_modes; ++n) {
    const double t = mode_shape_integral(n, c.x2_lo, c.x2_hi, cfg.d());
    terms[n] = mode_shape(n, x[1], cfg.d()) * t *
               mode_green_axial_integral(n, x[0], c.x1_lo, c.x1_hi, cfg);
  }
  return pairwise_sum(terms);
}

namespace detail {

inline double axial_gap(double x1, const Cell& c) {
  if (x1 < c.x1_lo) return c.x1_lo - x1;
  if (x1 > c.x1_hi) return x1 - c.x1_hi;
  return 0.0;
}

/// Cell integral close to the singularity: the direct term and the two wall
/// images that can approach x are split into log part (fan of collapsed
/// triangles from the singular point) and Lipschitz part (4x4 Gauss); all
/// other images are smooth over the cell.
inline cplx cell_integral_near(const Point& x, const Cell& c, const GreensEvalParams& params,
                               const DuctConfig& cfg) {
  const double d = cfg.d();
  cplx acc{};
  // reflections y2 -> s * y2 + t, singular where s * y2 + t = x2
  const std::array<std::array<double, 2>, 3> maps{{{1.0, 0.0}, {-1.0, 0.0}, {-1.0, 2.0 * d}}};
  for (const auto& [s, t] : maps) {
    const Point p{x[0], s * (x[1] - t)};  // y with s y2 + t = x2
    auto logf = [&](double y1, double y2) {
      const double z2 = s * y2 + t;
      const double r = rho({x[0] - y1, x[1] - z2}, cfg);
      if (!(r > 0.0)) return cplx{};
      return phi_log_part(x[0] - y1, x[1] - z2, cfg);
    };
    auto smoothf = [&](double y1, double y2) {
      return phi_smooth_part(x[0] - y1, x[1] - (s * y2 + t), cfg);
    };
    acc += integrate_rect_singular<16>(logf, c.x1_lo, c.x1_hi, c.x2_lo, c.x2_hi, p);
    // the remainder is only Lipschitz at p: cut the cell there and grade
    // each piece toward p
    std::array<double, 3> e1{c.x1_lo, std::clamp(p[0], c.x1_lo, c.x1_hi), c.x1_hi};
    std::array<double, 3> e2{c.x2_lo, std::clamp(p[1], c.x2_lo, c.x2_hi), c.x2_hi};
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        if (!(e1[a + 1] > e1[a]) || !(e2[b + 1] > e2[b])) continue;
        // corner of this piece nearest to p
        double u0 = a == 0 ? e1[1] : e1[1], u1 = a == 0 ? e1[0] : e1[2];
        double v0 = b == 0 ? e2[1] : e2[1], v1 = b == 0 ? e2[0] : e2[2];
        for (int level = 0; level < 3; ++level) {
          const double um = 0.5 * (u0 + u1), vm = 0.5 * (v0 + v1);
          acc += gauss_integrate_rect<4>(smoothf, std::min(um, u1), std::max(um, u1),
                                         std::min(v0, v1), std::max(v0, v1));
          acc += gauss_integrate_rect<4>(smoothf, std::min(u0, um), std::max(u0, um),
                                         std::min(vm, v1), std::max(vm, v1));
          u1 = um;
          v1 = vm;
        }
        acc += gauss_integrate_rect<4>(smoothf, std::min(u0, u1), std::max(u0, u1),
                                       std::min(v0, v1), std::max(v0, v1));
      }
    }
  }
  auto farf = [&](double y1, double y2) {
    return image_series(x, {y1, y2}, params.n_images, cfg, ImageSet::far_only).value;
  };
  acc += gauss_integrate_rect<4>(farf, c.x1_lo, c.x1_hi, c.x2_lo, c.x2_hi);
  return acc;
}

}  // namespace detail

/// Integral of G(x, y) over y in the cell.
inline cplx cell_integral(const Point& x, const Cell& c, const GreensEvalParams& params_in,
                          const DuctConfig& cfg) {
  const auto params = resolve(params_in, cfg);
  if (detail::axial_gap(x[0], c) >= params.min_axial_gap) {
    return cell_integral_modal(x, c, params.n_modes, cfg);
  }
  return detail::cell_integral_near(x, c, params, cfg);
}

/// Weights w_i = (integral of G(x, .) over K_i) / sqrt|K_i| for every cell of
/// one mesh level, so that the stochastic solution at x is sum_i xi_i w_i.
struct StochasticKernel {
  Point x;
  int level = 0;
  std::vector<cplx> weights;
};

inline StochasticKernel stochastic_kernel(const NoiseMesh& mesh, int level, const Point& x,
                                          const GreensEvalParams& params_in,
                                          const DuctConfig& cfg) {
  const auto params = resolve(params_in, cfg);
  const int nx = mesh.nx(level), ny = mesh.ny(level);
  const auto cols = mesh.column_edges(level);
  const auto rows = mesh.row_edges(level);
  const double inv_sqrt_area = 1.0 / std::sqrt(mesh.cell_area(level));
  StochasticKernel K{x, level, std::vector<cplx>(static_cast<std::size_t>(nx) * ny)};
  // far columns: factor the modal sum into axial and transverse parts
  std::vector<std::vector<double>> T(ny, std::vector<double>(params.n_modes));
  std::vector<double> phx(params.n_modes);
  for (int n = 0; n < params.n_modes; ++n) {
    phx[n] = mode_shape(n, x[1], cfg.d());
    for (int j = 0; j < ny; ++j) T[j][n] = mode_shape_integral(n, rows[j], rows[j + 1], cfg.d());
  }
  std::vector<cplx> A(params.n_modes);
  for (int i = 0; i < nx; ++i) {
    const Cell col{cols[i], cols[i + 1], rows.front(), rows.back()};
    const bool far = detail::axial_gap(x[0], col) >= params.min_axial_gap;
    if (far) {
      for (int n = 0; n < params.n_modes; ++n) {
        A[n] = mode_green_axial_integral(n, x[0], cols[i], cols[i + 1], cfg) * phx[n];
      }
    }
    for (int j = 0; j < ny; ++j) {
      cplx v;
      if (far) {
        std::vector<cplx> terms(params.n_modes);
        for (int n = 0; n < params.n_modes; ++n) terms[n] = A[n] * T[j][n];
        v = pairwise_sum(terms);
      } else {
        v = detail::cell_integral_near(x, {cols[i], cols[i + 1], rows[j], rows[j + 1]}, params,
                                       cfg);
      }
      K.weights[static_cast<std::size_t>(j) * nx + i] = v * inv_sqrt_area;
    }
  }
  return K;
}

inline cplx apply_kernel(const StochasticKernel& K, const NoiseRealization& r) {
  if (r.level != K.level || r.xi.size() != K.weights.size()) {
    throw ContractError("kernel and realization are on different levels");
  }
  std::vector<cplx> terms(r.xi.size());
  for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = r.xi[i] * K.weights[i];
  return pairwise_sum(terms);
}

/// sum_i xi_i / sqrt|K_i| * integral of G(x, .) over K_i.
inline cplx stochastic_solution(const NoiseRealization& r, const Point& x,
                                const GreensEvalParams& params, const DuctConfig& cfg) {
  return apply_kernel(stochastic_kernel(*r.mesh, r.level, x, params, cfg), r);
}

struct DeterministicValue {
  cplx value;
  bool accuracy_warning = false;  // adaptive quadrature hit its depth limit
};

/// sum_n phi_n(x2) * integral of g_n(x1, y1) f_n(y1) dy1.
inline DeterministicValue deterministic_solution(const ModalSource& f, const Point& x,
                                                 const GreensEvalParams& params,
                                                 const DuctConfig& cfg) {
  (void)params;
  DeterministicValue out{{0.0, 0.0}, false};
  for (const auto& [n, fn] : f.modes) {
    const double ph = mode_shape(n, x[1], cfg.d());
    cplx acc{};
    for (const auto& pc : fn.pieces) {
      for (std::size_t s = 0; s + 1 < pc.breaks.size(); ++s) {
        if (pc.values[s] == cplx{}) continue;
        acc += pc.values[s] * mode_green_axial_integral(n, x[0], pc.breaks[s], pc.breaks[s + 1], cfg);
      }
    }
    if (fn.smooth && fn.smooth_hi > fn.smooth_lo) {
      auto integrand = [&](double y1) { return mode_green_1d(n, x[0], y1, cfg).value * fn.smooth(y1); };
      std::vector<double> cuts{fn.smooth_lo};
      if (x[0] > fn.smooth_lo && x[0] < fn.smooth_hi) cuts.push_back(x[0]);
      cuts.push_back(fn.smooth_hi);
      for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        const auto r = integrate_adaptive(integrand, cuts[s], cuts[s + 1]);
        acc += r.value;
        if (!r.converged) out.accuracy_warning = true;
      }
    }
    out.value += ph * acc;
  }
  return out;
}

/// Q(y, z) = integral over [x_minus, x_plus] x [0, d] of |G(x,y) - G(x,z)|^2,
/// by Parseval over n_modes modes and closed-form axial integrals of the
/// piecewise exponentials.
inline double lemma2_q(const Point& y, const Point& z, int n_modes, const DuctConfig& cfg) {
  const double xm = cfg.x_minus(), xp = cfg.x_plus();
  const double d = cfg.d();
  const cplx i{0.0, 1.0};
  std::vector<double> per_mode(n_modes);
  std::array<double, 4> cuts{xm, std::clamp(std::min(y[0], z[0]), xm, xp),
                             std::clamp(std::max(y[0], z[0]), xm, xp), xp};
  for (int n = 0; n < n_modes; ++n) {
    const auto w = axial_wavenumbers(n, cfg);
    const cplx C = 1.0 / (i * cfg.beta_sq() * (w.plus - w.minus));
    const double C2 = std::norm(C);
    const double a = mode_shape(n, y[1], d), b = mode_shape(n, z[1], d);
    double acc = 0.0;
    for (int s = 0; s < 3; ++s) {
      const double l = cuts[s], r = cuts[s + 1];
      if (!(r > l)) continue;
      const double mid = 0.5 * (l + r);
      const cplx bA = mid > y[0] ? w.plus : w.minus;
      const cplx bB = mid > z[0] ? w.plus : w.minus;
      // A = a C e^{i bA (x - y1)}, B = b C e^{i bB (x - z1)}
      const cplx cA = i * bA, eA = -i * bA * y[0];
      const cplx cB = i * bB, eB = -i * bB * z[0];
      const double AA = exp_integral(cA + std::conj(cA), eA + std::conj(eA), l, r).real();
      const double BB = exp_integral(cB + std::conj(cB), eB + std::conj(eB), l, r).real();
      const double AB = exp_integral(cA + std::conj(cB), eA + std::conj(eB), l, r).real();
      acc += a * a * AA + b * b * BB - 2.0 * a * b * AB;
    }
    per_mode[n] = C2 * acc;
  }
  return pairwise_sum(per_mode);
}

struct ExponentProbe {
  std::vector<double> distances;
  std::vector<double> q;
  RateFit fit;
};

/// Log-log slope of Q(y, z) against |y - z| over the given pairs. Mode count
/// per pair is max(200, 100 / |y - z|).
inline ExponentProbe lemma2_exponent_probe(const std::vector<std::pair<Point, Point>>& pairs,
                                           const GreensEvalParams& params,
                                           const DuctConfig& cfg) {
  (void)params;
  ExponentProbe out;
  for (const auto& [y, z] : pairs) {
    const double dist = std::hypot(y[0] - z[0], y[1] - z[1]);
    const int nm = dist > 0.0 ? std::max(200, static_cast<int>(std::ceil(100.0 / dist))) : 200;
    out.distances.push_back(dist);
    out.q.push_back(dist > 0.0 ? lemma2_q(y, z, nm, cfg) : 0.0);
  }
  out.fit = fit_rate(out.distances, out.q, {}, RateTransform::loglog);
  return out;
}

/// Pairs y, z = c +- (delta/2) u for `count` log-spaced delta in [lo, hi].
inline std::vector<std::pair<Point, Point>> probe_pairs(const Point& center, double lo,
                                                        double hi, int count,
                                                        double angle = 0.7) {
  std::vector<std::pair<Point, Point>> out;
  const double u1 = std::cos(angle), u2 = std::sin(angle);
  for (int j = 0; j < count; ++j) {
    const double t = count > 1 ? double(j) / double(count - 1) : 0.0;
    const double delta = lo * std::pow(hi / lo, t);
    out.push_back({{center[0] + 0.5 * delta * u1, center[1] + 0.5 * delta * u2},
                   {center[0] - 0.5 * delta * u1, center[1] - 0.5 * delta * u2}});
  }
  return out;
}

}  // namespace ductpml
