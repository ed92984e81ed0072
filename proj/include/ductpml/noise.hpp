#pragma once

// Discretized white noise on a nested dyadic rectangular mesh.
//
// Level 0 is a uniform grid of base cells; every level splits each cell into
// four congruent children. Draws live on the finest level and coarser levels
// are exact aggregates, so all levels share one underlying noise path.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "ductpml/duct.hpp"
#include "ductpml/errors.hpp"
#include "ductpml/source.hpp"

namespace ductpml {

/// Axis-aligned rectangle [a1, b1] x [a2, b2].
struct Rect {
  double a1 = 0.0, b1 = 0.0, a2 = 0.0, b2 = 0.0;

  [[nodiscard]] double width() const noexcept { return b1 - a1; }
  [[nodiscard]] double height() const noexcept { return b2 - a2; }
  [[nodiscard]] double area() const noexcept { return width() * height(); }
  /// Half-open containment [a1, b1) x [a2, b2).
  [[nodiscard]] bool contains(double x1, double x2) const noexcept {
    return x1 >= a1 && x1 < b1 && x2 >= a2 && x2 < b2;
  }
  bool operator==(const Rect&) const = default;
};

struct Cell {
  double x1_lo, x1_hi, x2_lo, x2_hi;
  [[nodiscard]] double area() const noexcept {
    return (x1_hi - x1_lo) * (x2_hi - x2_lo);
  }
};

/// Centered rectangle covering the middle half of [x_minus, x_plus] x [0, d].
inline Rect default_forcing_rect(const DuctConfig& cfg) {
  const double c = 0.5 * (cfg.x_minus() + cfg.x_plus());
  const double w = cfg.x_plus() - cfg.x_minus();
  return {c - 0.25 * w, c + 0.25 * w, 0.25 * cfg.d(), 0.75 * cfg.d()};
}

class NoiseMesh {
 public:
  NoiseMesh(Rect rect, int base_nx, int base_ny, int levels)
      : rect_(rect), n0x_(base_nx), n0y_(base_ny), levels_(levels) {
    if (!(rect.width() > 0.0 && rect.height() > 0.0)) {
      throw DomainError("noise rectangle has no area");
    }
    if (base_nx < 1 || base_ny < 1) throw DomainError("empty base grid");
    if (levels < 1 || levels > 20) throw DomainError("levels must be in [1, 20]");
  }

  [[nodiscard]] const Rect& rect() const noexcept { return rect_; }
  [[nodiscard]] int levels() const noexcept { return levels_; }
  [[nodiscard]] int finest_level() const noexcept { return levels_ - 1; }
  [[nodiscard]] int base_nx() const noexcept { return n0x_; }
  [[nodiscard]] int base_ny() const noexcept { return n0y_; }

  [[nodiscard]] int nx(int level) const { check(level); return n0x_ << level; }
  [[nodiscard]] int ny(int level) const { check(level); return n0y_ << level; }
  [[nodiscard]] std::size_t cell_count(int level) const {
    return static_cast<std::size_t>(nx(level)) * static_cast<std::size_t>(ny(level));
  }
  [[nodiscard]] double cell_width(int level) const { return rect_.width() / nx(level); }
  [[nodiscard]] double cell_height(int level) const { return rect_.height() / ny(level); }
  [[nodiscard]] double cell_area(int level) const {
    return cell_width(level) * cell_height(level);
  }
  /// Cell diameter h at a level.
  [[nodiscard]] double h(int level) const {
    return std::hypot(cell_width(level), cell_height(level));
  }

  /// Cell index = j * nx + i for column i and row j.
  [[nodiscard]] Cell cell(int level, std::size_t index) const {
    const int n = nx(level);
    const int i = static_cast<int>(index % n);
    const int j = static_cast<int>(index / n);
    const double w = cell_width(level), hh = cell_height(level);
    return {rect_.a1 + i * w, rect_.a1 + (i + 1) * w, rect_.a2 + j * hh,
            rect_.a2 + (j + 1) * hh};
  }

  /// Column edges in x1 at a level (nx + 1 values).
  [[nodiscard]] std::vector<double> column_edges(int level) const {
    const int n = nx(level);
    std::vector<double> e(n + 1);
    for (int i = 0; i <= n; ++i) e[i] = rect_.a1 + rect_.width() * i / n;
    e[n] = rect_.b1;
    return e;
  }
  [[nodiscard]] std::vector<double> row_edges(int level) const {
    const int n = ny(level);
    std::vector<double> e(n + 1);
    for (int j = 0; j <= n; ++j) e[j] = rect_.a2 + rect_.height() * j / n;
    e[n] = rect_.b2;
    return e;
  }

  /// Index of the half-open cell containing x, or -1 outside the rectangle.
  [[nodiscard]] long locate(int level, double x1, double x2) const {
    if (!rect_.contains(x1, x2)) return -1;
    const int n = nx(level), m = ny(level);
    int i = static_cast<int>(std::floor((x1 - rect_.a1) / cell_width(level)));
    int j = static_cast<int>(std::floor((x2 - rect_.a2) / cell_height(level)));
    i = std::min(std::max(i, 0), n - 1);
    j = std::min(std::max(j, 0), m - 1);
    // floor of a rounded quotient may land one cell off near an edge
    const auto c = cell(level, static_cast<std::size_t>(j) * n + i);
    if (x1 < c.x1_lo && i > 0) --i;
    if (x1 >= c.x1_hi && i < n - 1) ++i;
    if (x2 < c.x2_lo && j > 0) --j;
    if (x2 >= c.x2_hi && j < m - 1) ++j;
    return static_cast<long>(j) * n + i;
  }

  bool operator==(const NoiseMesh&) const = default;

 private:
  void check(int level) const {
    if (level < 0 || level >= levels_) {
      throw DomainError("noise level " + std::to_string(level) + " out of range");
    }
  }

  Rect rect_;
  int n0x_, n0y_, levels_;
};

/// Mesh whose finest cells have diameter at most finest_h, with `levels`
/// nested levels (level 0 coarsest).
inline NoiseMesh build_mesh(const Rect& rect, double finest_h, int levels) {
  if (!(rect.width() > 0.0 && rect.height() > 0.0)) {
    throw DomainError("noise rectangle has no area");
  }
  if (!(finest_h > 0.0)) throw DomainError("finest_h must be positive");
  if (levels < 1) throw DomainError("at least one level is required");
  const double base_side = finest_h * std::ldexp(1.0, levels - 1) / std::numbers::sqrt2;
  const int n0x = std::max(1, static_cast<int>(std::ceil(rect.width() / base_side - 1e-9)));
  const int n0y = std::max(1, static_cast<int>(std::ceil(rect.height() / base_side - 1e-9)));
  return NoiseMesh(rect, n0x, n0y, levels);
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Interleave the bits of i (even positions) and j (odd positions).
inline std::uint64_t morton2(std::uint32_t i, std::uint32_t j) {
  auto spread = [](std::uint64_t v) {
    v &= 0xFFFFFFFFULL;
    v = (v | (v << 16)) & 0x0000FFFF0000FFFFULL;
    v = (v | (v << 8)) & 0x00FF00FF00FF00FFULL;
    v = (v | (v << 4)) & 0x0F0F0F0F0F0F0F0FULL;
    v = (v | (v << 2)) & 0x3333333333333333ULL;
    v = (v | (v << 1)) & 0x5555555555555555ULL;
    return v;
  };
  return spread(i) | (spread(j) << 1);
}

inline double unit_open(std::uint64_t h) {
  // (0, 1), never 0
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

/// Standard normal draw keyed by (seed, base cell, path below the base cell).
inline double keyed_normal(std::uint64_t seed, std::uint64_t base_cell,
                           std::uint64_t path) {
  std::uint64_t h = detail::splitmix64(seed);
  h = detail::splitmix64(h ^ base_cell);
  h = detail::splitmix64(h ^ (path * 0xD6E8FEB86659FD93ULL));
  const double u1 = detail::unit_open(detail::splitmix64(h ^ 0x1ULL));
  const double u2 = detail::unit_open(detail::splitmix64(h ^ 0x2ULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

struct NoiseRealization {
  std::shared_ptr<const NoiseMesh> mesh;
  int level = 0;
  std::vector<double> xi;
  std::uint64_t seed = 0;

  [[nodiscard]] double cell_area() const { return mesh->cell_area(level); }
};

/// Draw at the finest level. Each value depends only on (seed, cell), so the
/// result is independent of evaluation order.
inline NoiseRealization sample(std::shared_ptr<const NoiseMesh> mesh, std::uint64_t seed) {
  NoiseRealization r;
  r.level = mesh->finest_level();
  r.seed = seed;
  const int L = r.level;
  const int nx = mesh->nx(L), ny = mesh->ny(L);
  const std::uint32_t mask = (1u << L) - 1u;
  r.xi.resize(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::uint64_t base =
          static_cast<std::uint64_t>(j >> L) * mesh->base_nx() + static_cast<std::uint64_t>(i >> L);
      const std::uint64_t path = detail::morton2(static_cast<std::uint32_t>(i) & mask,
                                                 static_cast<std::uint32_t>(j) & mask);
      r.xi[static_cast<std::size_t>(j) * nx + i] = keyed_normal(seed, base, path);
    }
  }
  r.mesh = std::move(mesh);
  return r;
}

inline NoiseRealization sample(const NoiseMesh& mesh, std::uint64_t seed) {
  return sample(std::make_shared<const NoiseMesh>(mesh), seed);
}

/// Aggregate one level up: parent = (sum of the four children) / 2.
inline NoiseRealization coarsen(const NoiseRealization& r) {
  if (r.level < 1) throw DomainError("realization is already at the coarsest level");
  NoiseRealization c;
  c.mesh = r.mesh;
  c.level = r.level - 1;
  c.seed = r.seed;
  const int fnx = r.mesh->nx(r.level);
  const int nx = r.mesh->nx(c.level), ny = r.mesh->ny(c.level);
  c.xi.resize(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t f0 = static_cast<std::size_t>(2 * j) * fnx + 2 * i;
      const std::size_t f1 = f0 + fnx;
      c.xi[static_cast<std::size_t>(j) * nx + i] =
          0.5 * ((r.xi[f0] + r.xi[f0 + 1]) + (r.xi[f1] + r.xi[f1 + 1]));
    }
  }
  return c;
}

inline NoiseRealization coarsen_to(NoiseRealization r, int level) {
  if (level < 0 || level > r.level) throw DomainError("cannot coarsen to a finer level");
  while (r.level > level) r = coarsen(r);
  return r;
}

/// Piecewise-constant white-noise field: xi_i / sqrt|K_i| on cell K_i, zero
/// outside the rectangle.
inline double evaluate_wh(const NoiseRealization& r, double x1, double x2) {
  const long idx = r.mesh->locate(r.level, x1, x2);
  if (idx < 0) return 0.0;
  return r.xi[static_cast<std::size_t>(idx)] / std::sqrt(r.cell_area());
}

/// Transverse projections T[j][n] = integral of phi_n over row j of a level.
inline std::vector<std::vector<double>> row_mode_integrals(const NoiseMesh& mesh, int level,
                                                           int n_modes, double d) {
  const auto rows = mesh.row_edges(level);
  std::vector<std::vector<double>> t(rows.size() - 1, std::vector<double>(n_modes));
  for (std::size_t j = 0; j + 1 < rows.size(); ++j) {
    for (int n = 0; n < n_modes; ++n) {
      t[j][n] = mode_shape_integral(n, rows[j], rows[j + 1], d);
    }
  }
  return t;
}

/// Axial coefficients f_n(x1) = integral of Wh(x1, x2) phi_n(x2) dx2 for
/// n = 0 .. n_modes-1. Each is piecewise constant on the columns of the mesh.
inline std::vector<PiecewiseConstant> noise_modal_coefficients(
    const NoiseRealization& r, int n_modes, double d,
    const std::vector<std::vector<double>>* row_integrals = nullptr) {
  const NoiseMesh& mesh = *r.mesh;
  if (mesh.rect().a2 < 0.0 || mesh.rect().b2 > d) {
    throw DomainError("noise rectangle leaves the duct cross-section");
  }
  std::vector<std::vector<double>> local;
  if (!row_integrals) {
    local = row_mode_integrals(mesh, r.level, n_modes, d);
    row_integrals = &local;
  }
  const int nx = mesh.nx(r.level), ny = mesh.ny(r.level);
  const double scale = 1.0 / std::sqrt(r.cell_area());
  const auto edges = mesh.column_edges(r.level);
  std::vector<PiecewiseConstant> out(n_modes);
  for (int n = 0; n < n_modes; ++n) {
    out[n].breaks = edges;
    out[n].values.assign(nx, {});
  }
  std::vector<double> acc(n_modes);
  for (int i = 0; i < nx; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int j = 0; j < ny; ++j) {
      const double v = r.xi[static_cast<std::size_t>(j) * nx + i] * scale;
      const auto& tj = (*row_integrals)[j];
      for (int n = 0; n < n_modes; ++n) acc[n] += v * tj[n];
    }
    for (int n = 0; n < n_modes; ++n) out[n].values[i] = acc[n];
  }
  return out;
}

/// Single-mode projection of a noise realization.
inline PiecewiseConstant modal_source_coefficients(const NoiseRealization& r, int n,
                                                   const DuctConfig& cfg) {
  if (n < 0) throw DomainError("mode index must be non-negative");
  const auto& mesh = *r.mesh;
  const auto rows = mesh.row_edges(r.level);
  std::vector<std::vector<double>> t(rows.size() - 1, std::vector<double>(1));
  for (std::size_t j = 0; j + 1 < rows.size(); ++j) {
    t[j][0] = mode_shape_integral(n, rows[j], rows[j + 1], cfg.d());
  }
  const int nx = mesh.nx(r.level), ny = mesh.ny(r.level);
  const double scale = 1.0 / std::sqrt(r.cell_area());
  PiecewiseConstant out;
  out.breaks = mesh.column_edges(r.level);
  out.values.assign(nx, {});
  for (int i = 0; i < nx; ++i) {
    double acc = 0.0;
    for (int j = 0; j < ny; ++j) acc += r.xi[static_cast<std::size_t>(j) * nx + i] * scale * t[j][0];
    out.values[i] = acc;
  }
  return out;
}

}  // namespace ductpml
