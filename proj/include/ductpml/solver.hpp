#pragma once

// Per-mode finite element solves of
//
//   (1-M^2) p'' + 2ikM p' + (k^2 - (n pi/d)^2) p = f      on (x_minus, x_plus)
//
// closed either by the exact Robin conditions p' = i beta^+- p (dtn), by the
// layer Robin conditions p' = i nu^+- p (pml_reduced), or by extending into
// the absorbing layers with Dirichlet ends (pml_full). Linear elements,
// tridiagonal elimination with partial pivoting.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ductpml/duct.hpp"
#include "ductpml/errors.hpp"
#include "ductpml/noise.hpp"
#include "ductpml/parallel.hpp"
#include "ductpml/pml.hpp"
#include "ductpml/quadrature.hpp"
#include "ductpml/source.hpp"
#include "ductpml/tridiagonal.hpp"

namespace ductpml {

enum class Formulation { dtn, pml_full, pml_reduced };

inline const char* to_string(Formulation f) {
  switch (f) {
    case Formulation::dtn: return "dtn";
    case Formulation::pml_full: return "pml_full";
    default: return "pml_reduced";
  }
}

/// 1D grid. Uniform grids come from the constructor; `layered` builds a grid
/// that is uniform on the computational domain and on each layer.
class Grid1D {
 public:
  Grid1D(double x_start, double x_end, int n_cells) {
    if (n_cells < 8) throw ConfigError("a grid needs at least 8 cells");
    if (!(x_end > x_start)) throw ConfigError("grid end must exceed its start");
    nodes_.resize(n_cells + 1);
    for (int j = 0; j <= n_cells; ++j) {
      nodes_[j] = x_start + (x_end - x_start) * double(j) / double(n_cells);
    }
    nodes_.back() = x_end;
    uniform_ = true;
  }

  /// Grid over [x_minus - L, x_plus + L] with `inner_cells` cells on
  /// [x_minus, x_plus] and ceil(L / spacing) cells (at least 8) per layer.
  static Grid1D layered(double x_minus, double x_plus, double L, int inner_cells) {
    Grid1D inner(x_minus, x_plus, inner_cells);
    const double h = inner.spacing();
    const int m = std::max(8, static_cast<int>(std::ceil(L / h - 1e-9)));
    Grid1D g = inner;
    g.nodes_.clear();
    for (int j = 0; j < m; ++j) g.nodes_.push_back(x_minus - L + L * double(j) / m);
    for (double x : inner.nodes_) g.nodes_.push_back(x);
    for (int j = 1; j <= m; ++j) g.nodes_.push_back(x_plus + L * double(j) / m);
    g.nodes_.back() = x_plus + L;
    g.uniform_ = std::abs(L / m - h) < 1e-12 * h;
    g.inner_first_ = m;
    g.inner_last_ = m + inner_cells;
    return g;
  }

  [[nodiscard]] double x_start() const noexcept { return nodes_.front(); }
  [[nodiscard]] double x_end() const noexcept { return nodes_.back(); }
  [[nodiscard]] int n_cells() const noexcept { return static_cast<int>(nodes_.size()) - 1; }
  [[nodiscard]] std::size_t n_nodes() const noexcept { return nodes_.size(); }
  /// Spacing of the computational-domain part.
  [[nodiscard]] double spacing() const noexcept {
    return nodes_[inner_first_ + 1] - nodes_[inner_first_];
  }
  [[nodiscard]] bool uniform() const noexcept { return uniform_; }
  [[nodiscard]] double node(std::size_t j) const { return nodes_[j]; }
  [[nodiscard]] const std::vector<double>& nodes() const noexcept { return nodes_; }
  /// Node range [first, last] of the computational domain (whole grid
  /// unless built by `layered`).
  [[nodiscard]] std::size_t inner_first() const noexcept { return inner_first_; }
  [[nodiscard]] std::size_t inner_last() const noexcept {
    return inner_last_ == 0 ? nodes_.size() - 1 : inner_last_;
  }

  /// Index of the element containing x (clamped to the grid).
  [[nodiscard]] std::size_t element_of(double x) const {
    const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    std::size_t e = it == nodes_.begin() ? 0 : static_cast<std::size_t>(it - nodes_.begin()) - 1;
    return std::min<std::size_t>(e, nodes_.size() - 2);
  }

  bool operator==(const Grid1D& o) const { return nodes_ == o.nodes_; }

 private:
  std::vector<double> nodes_;
  bool uniform_ = true;
  std::size_t inner_first_ = 0;
  std::size_t inner_last_ = 0;
};

/// Default grid over [x_minus, x_plus]: spacing at most 1/(16 k).
inline Grid1D default_grid(const DuctConfig& cfg) {
  const double len = cfg.x_plus() - cfg.x_minus();
  const double h = std::min(1.0 / (16.0 * cfg.k()), cfg.L() / 64.0);
  return Grid1D(cfg.x_minus(), cfg.x_plus(), std::max(8, static_cast<int>(std::ceil(len / h))));
}

/// Load vector b_i = integral of f N_i over the grid.
inline std::vector<cplx> assemble_load(const AxialSource& f, const Grid1D& g) {
  std::vector<cplx> b(g.n_nodes());
  const auto& x = g.nodes();
  if (f.smooth && f.smooth_hi > f.smooth_lo) {
    const std::size_t e0 = g.element_of(f.smooth_lo);
    const std::size_t e1 = g.element_of(f.smooth_hi);
    const auto& r = gauss_rule<5>();
    for (std::size_t e = e0; e <= e1; ++e) {
      const double lo = std::max(x[e], f.smooth_lo), hi = std::min(x[e + 1], f.smooth_hi);
      if (!(hi > lo)) continue;
      const double h = x[e + 1] - x[e];
      const double c = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
      cplx bl{}, br{};
      for (int q = 0; q < 5; ++q) {
        const double xq = c + hw * r.nodes[q];
        const cplx fq = f.smooth(xq) * (r.weights[q] * hw);
        const double nr = (xq - x[e]) / h;
        bl += fq * (1.0 - nr);
        br += fq * nr;
      }
      b[e] += bl;
      b[e + 1] += br;
    }
  }
  for (const auto& pc : f.pieces) {
    for (std::size_t s = 0; s + 1 < pc.breaks.size(); ++s) {
      const double a = pc.breaks[s], bb = pc.breaks[s + 1];
      const cplx v = pc.values[s];
      if (v == cplx{} || !(bb > a)) continue;
      const std::size_t e0 = g.element_of(a);
      const std::size_t e1 = g.element_of(bb);
      for (std::size_t e = e0; e <= e1; ++e) {
        const double lo = std::max(x[e], a), hi = std::min(x[e + 1], bb);
        if (!(hi > lo)) continue;
        const double h = x[e + 1] - x[e];
        const double ul = lo - x[e], uh = hi - x[e];
        const double ir = (uh * uh - ul * ul) / (2.0 * h);  // integral of N_right
        b[e] += v * ((hi - lo) - ir);
        b[e + 1] += v * ir;
      }
    }
  }
  return b;
}

namespace detail {

inline void check_source_support(const AxialSource& f, const DuctConfig& cfg) {
  if (f.empty()) return;
  const auto [lo, hi] = f.support();
  const double tol = 1e-12 * (cfg.x_plus() - cfg.x_minus());
  if (lo < cfg.x_minus() - tol || hi > cfg.x_plus() + tol) {
    throw DomainError("source support must lie inside [x_minus, x_plus]");
  }
}

/// Interior operator on a grid over [x_minus, x_plus] plus Robin terms
/// (1-M^2)(i nu_plus p q |x+  -  i nu_minus p q |x-).
inline TridiagonalMatrix<cplx> robin_matrix(int n, const DuctConfig& cfg, const Grid1D& g,
                                            cplx nu_plus, cplx nu_minus) {
  const std::size_t N = g.n_nodes();
  TridiagonalMatrix<cplx> A(N);
  const double b2 = cfg.beta_sq();
  const double k = cfg.k(), M = cfg.M();
  const double c = k * k - cfg.transverse_eigenvalue(n);
  const cplx conv{0.0, 2.0 * k * M};
  for (std::size_t e = 0; e + 1 < N; ++e) {
    const double h = g.node(e + 1) - g.node(e);
    // -(1-M^2) stiffness + 2ikM convection + c mass
    const double k_d = -b2 / h, k_o = b2 / h;
    const cplx m_d = c * h / 3.0, m_o = c * h / 6.0;
    // convection C_ij = int N_j' N_i = [[-1/2, 1/2], [-1/2, 1/2]]
    A.diag[e] += k_d + conv * -0.5 + m_d;
    A.upper[e] += k_o + conv * 0.5 + m_o;
    A.lower[e] += k_o + conv * -0.5 + m_o;
    A.diag[e + 1] += k_d + conv * 0.5 + m_d;
  }
  const cplx i{0.0, 1.0};
  A.diag[N - 1] += b2 * i * nu_plus;
  A.diag[0] -= b2 * i * nu_minus;
  return A;
}

/// Layer-form operator on the layered grid with Dirichlet ends:
/// -(1-M^2) int alpha (p' + i mu p)(q' - i mu q) + int (c/alpha) p q.
inline TridiagonalMatrix<cplx> pml_full_matrix(int n, const DuctConfig& cfg,
                                               const PmlProfile& prof, const Grid1D& g) {
  const std::size_t N = g.n_nodes();
  TridiagonalMatrix<cplx> A(N);
  const double b2 = cfg.beta_sq();
  const double mu = cfg.convective_shift();
  const double omega = cfg.omega();
  const double c = cfg.k() * cfg.k() / b2 - cfg.transverse_eigenvalue(n);
  const cplx i{0.0, 1.0};
  const auto& r = gauss_rule<2>();
  for (std::size_t e = 0; e + 1 < N; ++e) {
    const double xl = g.node(e), xr = g.node(e + 1);
    const double h = xr - xl;
    cplx m[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (int q = 0; q < 2; ++q) {
      const double xq = 0.5 * (xl + xr) + 0.5 * h * r.nodes[q];
      const double wq = 0.5 * h * r.weights[q];
      const cplx a = alpha(prof, xq, omega);
      const double Nv[2] = {(xr - xq) / h, (xq - xl) / h};
      const double dN[2] = {-1.0 / h, 1.0 / h};
      for (int ii = 0; ii < 2; ++ii) {
        for (int jj = 0; jj < 2; ++jj) {
          const cplx Dp = dN[jj] + i * mu * Nv[jj];
          const cplx Dq = dN[ii] - i * mu * Nv[ii];
          m[ii][jj] += wq * (-b2 * a * Dp * Dq + (c / a) * Nv[jj] * Nv[ii]);
        }
      }
    }
    A.diag[e] += m[0][0];
    A.upper[e] += m[0][1];
    A.lower[e] += m[1][0];
    A.diag[e + 1] += m[1][1];
  }
  // Dirichlet ends
  A.diag[0] = 1.0;
  A.upper[0] = 0.0;
  A.diag[N - 1] = 1.0;
  A.lower[N - 2] = 0.0;
  return A;
}

}  // namespace detail

/// Factored per-mode operator; reusable for any number of right-hand sides.
class ModeOperator {
 public:
  ModeOperator(int n, Formulation form, const DuctConfig& cfg, const Grid1D& grid,
               const PmlProfile* profile = nullptr)
      : n_(n), form_(form), grid_(grid), lu_(build(n, form, cfg, grid, profile)) {}

  [[nodiscard]] int mode() const noexcept { return n_; }
  [[nodiscard]] Formulation formulation() const noexcept { return form_; }
  [[nodiscard]] const Grid1D& grid() const noexcept { return grid_; }

  [[nodiscard]] std::vector<cplx> solve_load(std::vector<cplx> load) const {
    if (form_ != Formulation::pml_full) return lu_.solve(std::move(load));
    load.front() = 0.0;
    load.back() = 0.0;
    auto u = lu_.solve(std::move(load));
    // pivoting can leave rounding noise in the constrained end values
    u.front() = 0.0;
    u.back() = 0.0;
    return u;
  }

  [[nodiscard]] std::vector<cplx> solve(const AxialSource& f) const {
    return solve_load(assemble_load(f, grid_));
  }

  [[nodiscard]] double condition_estimate() const { return lu_.condition_estimate(); }

 private:
  static TridiagonalLU<cplx> build(int n, Formulation form, const DuctConfig& cfg,
                                   const Grid1D& grid, const PmlProfile* profile) {
    if (form == Formulation::dtn) {
      if (std::abs(grid.x_start() - cfg.x_minus()) > 1e-12 ||
          std::abs(grid.x_end() - cfg.x_plus()) > 1e-12) {
        throw ContractError("dtn grid must span [x_minus, x_plus]");
      }
      const auto w = axial_wavenumbers(n, cfg);
      return TridiagonalLU<cplx>(detail::robin_matrix(n, cfg, grid, w.plus, w.minus));
    }
    if (!profile) throw ContractError("layer formulations need a profile");
    if (form == Formulation::pml_reduced) {
      if (std::abs(grid.x_start() - cfg.x_minus()) > 1e-12 ||
          std::abs(grid.x_end() - cfg.x_plus()) > 1e-12) {
        throw ContractError("reduced grid must span [x_minus, x_plus]");
      }
      const auto nu = nu_coefficients(n, *profile, cfg);
      return TridiagonalLU<cplx>(detail::robin_matrix(n, cfg, grid, nu.plus, nu.minus));
    }
    if (std::abs(grid.x_start() - (profile->x_minus() - profile->L())) > 1e-12 ||
        std::abs(grid.x_end() - (profile->x_plus() + profile->L())) > 1e-12) {
      throw ContractError("full layer grid must span [x_minus - L, x_plus + L]");
    }
    return TridiagonalLU<cplx>(detail::pml_full_matrix(n, cfg, *profile, grid));
  }

  int n_;
  Formulation form_;
  Grid1D grid_;
  TridiagonalLU<cplx> lu_;
};

inline std::vector<cplx> solve_mode_dtn(int n, const AxialSource& f, const DuctConfig& cfg,
                                        const Grid1D& grid) {
  detail::check_source_support(f, cfg);
  return ModeOperator(n, Formulation::dtn, cfg, grid).solve(f);
}

inline std::vector<cplx> solve_mode_pml_reduced(int n, const AxialSource& f,
                                                const DuctConfig& cfg, const PmlProfile& prof,
                                                const Grid1D& grid) {
  detail::check_source_support(f, cfg);
  return ModeOperator(n, Formulation::pml_reduced, cfg, grid, &prof).solve(f);
}

inline std::vector<cplx> solve_mode_pml_full(int n, const AxialSource& f, const DuctConfig& cfg,
                                             const PmlProfile& prof, const Grid1D& grid) {
  detail::check_source_support(f, cfg);
  return ModeOperator(n, Formulation::pml_full, cfg, grid, &prof).solve(f);
}

struct ModalSolution {
  explicit ModalSolution(Grid1D g) : grid(std::move(g)) {}

  Grid1D grid;
  int n_modes = 0;
  std::vector<std::vector<cplx>> values;  // values[n][j]
  Formulation formulation = Formulation::dtn;
  double x_minus = 0.0, x_plus = 0.0, d = 1.0;
  double tail_bound = 0.0;                // estimate of the squared norm of dropped modes
  std::vector<double> condition;          // per-mode condition estimates, if requested
};

struct SolveOptions {
  int n_modes = -1;          // -1: N0 + 30
  unsigned threads = 1;
  bool condition_estimates = false;
};

inline int default_mode_count(const DuctConfig& cfg) { return cutoff_numbers(cfg).N0 + 30; }

namespace detail {

/// Rough squared-norm estimate of the modes n >= n_modes of a noise-driven
/// solution: |p_n| <= ||f_n||_1 |C_n| with C_n the 1D Green's constant and
/// ||f_n||_1 bounded through |integral of phi_n over a row| <= 2 sqrt(2d)/(n pi).
inline double noise_tail_bound(const NoiseRealization& r, int n_modes, const DuctConfig& cfg) {
  const auto& mesh = *r.mesh;
  double mass = 0.0;
  for (double v : r.xi) mass += std::abs(v);
  mass *= std::sqrt(r.cell_area()) / mesh.cell_height(r.level);  // sum |xi| |K| / sqrt|K| / h_y
  const double len = cfg.x_plus() - cfg.x_minus();
  double tail = 0.0;
  for (int n = std::max(n_modes, cutoff_numbers(cfg).N0 + 1); n < n_modes + 20000; ++n) {
    const auto w = axial_wavenumbers(n, cfg);
    const double C = 1.0 / (cfg.beta_sq() * std::abs(w.plus - w.minus));
    const double f1 = mass * 2.0 * std::sqrt(2.0 * cfg.d()) / (n * std::numbers::pi / cfg.d()) /
                      cfg.d();
    tail += len * f1 * f1 * C * C;
  }
  return tail;
}

}  // namespace detail

/// Solve every mode 0 .. n_modes-1 driven by a deterministic modal source
/// and/or a noise realization. `grid` spans [x_minus, x_plus]; for pml_full
/// it is extended into both layers.
inline ModalSolution solve_full(const ModalSource* source, const NoiseRealization* noise,
                                const DuctConfig& cfg, const PmlProfile* profile,
                                Formulation form, const Grid1D& grid,
                                const SolveOptions& opt = {}) {
  const int n_modes = opt.n_modes < 0 ? default_mode_count(cfg) : opt.n_modes;
  if (n_modes < 1) throw ConfigError("at least one mode is required");
  if (form != Formulation::dtn && !profile) throw ContractError("layer formulations need a profile");
  ModalSolution sol{form == Formulation::pml_full
                        ? Grid1D::layered(cfg.x_minus(), cfg.x_plus(), profile->L(), grid.n_cells())
                        : grid};
  sol.n_modes = n_modes;
  sol.formulation = form;
  sol.x_minus = cfg.x_minus();
  sol.x_plus = cfg.x_plus();
  sol.d = cfg.d();
  sol.values.assign(n_modes, {});
  if (opt.condition_estimates) sol.condition.assign(n_modes, 0.0);

  std::vector<PiecewiseConstant> noise_coeffs;
  if (noise) {
    const auto& rect = noise->mesh->rect();
    if (rect.a1 < cfg.x_minus() || rect.b1 > cfg.x_plus()) {
      throw DomainError("noise rectangle must lie inside [x_minus, x_plus]");
    }
    noise_coeffs = noise_modal_coefficients(*noise, n_modes, cfg.d());
  }
  if (source) {
    for (const auto& [n, f] : source->modes) detail::check_source_support(f, cfg);
  }
  parallel_for(static_cast<std::size_t>(n_modes), opt.threads, [&](std::size_t idx) {
    const int n = static_cast<int>(idx);
    AxialSource f;
    if (source) {
      if (const auto* s = source->mode(n)) f = *s;
    }
    if (noise) f.pieces.push_back(noise_coeffs[idx]);
    if (f.empty()) {
      sol.values[idx].assign(sol.grid.n_nodes(), cplx{});
      return;
    }
    ModeOperator op(n, form, cfg, sol.grid, profile);
    sol.values[idx] = op.solve(f);
    if (opt.condition_estimates) sol.condition[idx] = op.condition_estimate();
  });
  if (noise) sol.tail_bound = detail::noise_tail_bound(*noise, n_modes, cfg);
  return sol;
}

/// Part of a solution on [x_minus, x_plus].
inline ModalSolution restrict_to_omega_b(const ModalSolution& sol) {
  const std::size_t j0 = sol.grid.inner_first(), j1 = sol.grid.inner_last();
  if (j0 == 0 && j1 == sol.grid.n_nodes() - 1) return sol;
  ModalSolution out{Grid1D(sol.x_minus, sol.x_plus, static_cast<int>(j1 - j0))};
  out.n_modes = sol.n_modes;
  out.formulation = sol.formulation;
  out.x_minus = sol.x_minus;
  out.x_plus = sol.x_plus;
  out.d = sol.d;
  out.tail_bound = sol.tail_bound;
  out.values.resize(sol.values.size());
  for (std::size_t n = 0; n < sol.values.size(); ++n) {
    out.values[n].assign(sol.values[n].begin() + static_cast<std::ptrdiff_t>(j0),
                         sol.values[n].begin() + static_cast<std::ptrdiff_t>(j1) + 1);
  }
  return out;
}

/// Linear interpolation of a nodal vector.
inline cplx interpolate(const Grid1D& g, const std::vector<cplx>& v, double x1) {
  const std::size_t e = g.element_of(x1);
  const double xl = g.node(e), xr = g.node(e + 1);
  const double t = (x1 - xl) / (xr - xl);
  return (1.0 - t) * v[e] + t * v[e + 1];
}

/// p(x) = sum_n p_n(x1) phi_n(x2).
inline std::vector<cplx> assemble_field(const ModalSolution& sol,
                                        const std::vector<std::array<double, 2>>& points) {
  std::vector<cplx> out;
  out.reserve(points.size());
  const double tol = 1e-12 * (1.0 + std::abs(sol.grid.x_end()));
  for (const auto& p : points) {
    if (p[0] < sol.grid.x_start() - tol || p[0] > sol.grid.x_end() + tol || p[1] < 0.0 ||
        p[1] > sol.d) {
      throw DomainError("field point outside the solution domain");
    }
    const double x1 = std::clamp(p[0], sol.grid.x_start(), sol.grid.x_end());
    cplx s{};
    for (int n = 0; n < sol.n_modes; ++n) {
      if (sol.values[n].empty()) continue;
      s += interpolate(sol.grid, sol.values[n], x1) * mode_shape(n, p[1], sol.d);
    }
    out.push_back(s);
  }
  return out;
}

/// Squared L2 norm over [x_minus, x_plus] x [0, d] via Parseval, trapezoid
/// rule on the nodal values.
inline double l2_norm_sq_omega_b(const ModalSolution& sol) {
  const auto r = restrict_to_omega_b(sol);
  std::vector<double> per_mode(r.values.size());
  for (std::size_t n = 0; n < r.values.size(); ++n) {
    const auto& v = r.values[n];
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < v.size(); ++j) {
      const double h = r.grid.node(j + 1) - r.grid.node(j);
      acc += 0.5 * h * (std::norm(v[j]) + std::norm(v[j + 1]));
    }
    per_mode[n] = acc;
  }
  return pairwise_sum(per_mode);
}

inline double l2_norm_omega_b(const ModalSolution& sol) {
  return std::sqrt(l2_norm_sq_omega_b(sol));
}

/// ||a - b||^2 over the computational domain; both solutions must share the
/// grid on that domain and the mode count.
inline double l2_error_sq(const ModalSolution& a, const ModalSolution& b) {
  const auto ra = restrict_to_omega_b(a);
  const auto rb = restrict_to_omega_b(b);
  if (!(ra.grid == rb.grid) || ra.n_modes != rb.n_modes) {
    throw ContractError("solutions live on different grids or mode counts");
  }
  std::vector<double> per_mode(ra.values.size());
  for (std::size_t n = 0; n < ra.values.size(); ++n) {
    const auto& u = ra.values[n];
    const auto& v = rb.values[n];
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < u.size(); ++j) {
      const double h = ra.grid.node(j + 1) - ra.grid.node(j);
      acc += 0.5 * h * (std::norm(u[j] - v[j]) + std::norm(u[j + 1] - v[j + 1]));
    }
    per_mode[n] = acc;
  }
  return pairwise_sum(per_mode);
}

inline double l2_error(const ModalSolution& a, const ModalSolution& b) {
  return std::sqrt(l2_error_sq(a, b));
}

}  // namespace ductpml
