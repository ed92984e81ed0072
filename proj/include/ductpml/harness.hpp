#pragma once

// Convergence studies: Monte Carlo estimation, the noise-resolution (h)
// study, the layer-length (L) study, the full-layer versus reduced-layer
// equivalence check and the combined (h, L) study.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ductpml/duct.hpp"
#include "ductpml/errors.hpp"
#include "ductpml/noise.hpp"
#include "ductpml/numeric.hpp"
#include "ductpml/parallel.hpp"
#include "ductpml/pml.hpp"
#include "ductpml/quadrature.hpp"
#include "ductpml/solver.hpp"
#include "ductpml/source.hpp"
#include "ductpml/stats.hpp"

namespace ductpml {

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<double> values;  // per-seed values in seed order
};

/// Mean and standard error of estimator(base_seed + i), i < n_samples.
inline McEstimate mc_estimate(const std::function<double(std::uint64_t)>& estimator,
                              std::size_t n_samples, std::uint64_t base_seed,
                              unsigned threads = 1) {
  if (n_samples < 2) throw ContractError("mc_estimate needs at least 2 samples");
  McEstimate e;
  e.values.assign(n_samples, 0.0);
  try {
    parallel_for(n_samples, threads, [&](std::size_t i) {
      const std::uint64_t seed = base_seed + i;
      try {
        e.values[i] = estimator(seed);
      } catch (const std::exception& ex) {
        throw StudyError(seed, ex.what());
      }
    });
  } catch (const StudyError&) {
    throw;
  }
  e.mean = pairwise_sum(e.values) / double(n_samples);
  std::vector<double> dev(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) dev[i] = (e.values[i] - e.mean) * (e.values[i] - e.mean);
  const double var = pairwise_sum(dev) / double(n_samples - 1);
  e.std_error = std::sqrt(var / double(n_samples));
  return e;
}

struct StudyResult {
  std::string name;
  std::string abscissa_name;
  std::vector<double> abscissa;
  std::vector<double> error_mean;
  std::vector<double> error_stderr;
  std::vector<bool> excluded;
  RateFit fit;
  bool fit_ok = false;
  double theory_rate = 0.0;
  bool pass = false;
  std::size_t n_samples = 0;
  std::uint64_t base_seed = 0;
  /// extra key=value lines for the summary file, in insertion order
  std::vector<std::pair<std::string, std::string>> notes;
};

// ---------------------------------------------------------------------------
// h study

struct HStudyOptions {
  Rect forcing;                      // zero area: middle half of the domain
  std::vector<int> levels{2, 3, 4};  // mesh levels compared with the reference
  int reference_level = 6;
  int base_nx = 2, base_ny = 1;      // level-0 grid of the forcing rectangle
  int grid_cells = 512;              // cells on [x_minus, x_plus]
  int n_modes = 256;
  std::size_t n_samples = 200;
  std::uint64_t base_seed = 1;
  unsigned threads = 1;
  double min_rate = 1.8;
  double max_rate_stderr = 0.15;
};

/// Mean-square difference between the reference-level solution and the
/// solution driven by the coarsened noise at each level. Both are exact-DtN
/// solves on the same grid, driven by the same noise path.
inline StudyResult run_h_study(const DuctConfig& cfg, const HStudyOptions& opt) {
  Rect rect = opt.forcing.area() > 0.0 ? opt.forcing : default_forcing_rect(cfg);
  for (int l : opt.levels) {
    if (l < 0 || l > opt.reference_level) throw ContractError("h levels must be nested below the reference level");
  }
  if (opt.levels.empty()) throw ContractError("no h levels given");
  auto mesh = std::make_shared<const NoiseMesh>(rect, opt.base_nx, opt.base_ny,
                                                opt.reference_level + 1);
  const Grid1D grid(cfg.x_minus(), cfg.x_plus(), opt.grid_cells);
  const int nm = opt.n_modes;
  std::vector<std::unique_ptr<ModeOperator>> ops(nm);
  parallel_for(static_cast<std::size_t>(nm), opt.threads, [&](std::size_t n) {
    ops[n] = std::make_unique<ModeOperator>(static_cast<int>(n), Formulation::dtn, cfg, grid);
  });
  const auto row_int = row_mode_integrals(*mesh, opt.reference_level, nm, cfg.d());
  const std::size_t nl = opt.levels.size();
  std::vector<std::vector<double>> per_seed(opt.n_samples, std::vector<double>(nl));
  const auto fine_cols = mesh->column_edges(opt.reference_level);

  parallel_for(opt.n_samples, opt.threads, [&](std::size_t s) {
    const std::uint64_t seed = opt.base_seed + s;
    try {
      const auto fine = sample(mesh, seed);
      const auto f_ref = noise_modal_coefficients(fine, nm, cfg.d(), &row_int);
      for (std::size_t li = 0; li < nl; ++li) {
        const int lev = opt.levels[li];
        if (lev == opt.reference_level) {
          per_seed[s][li] = 0.0;
          continue;
        }
        const auto coarse = coarsen_to(fine, lev);
        const auto f_c = noise_modal_coefficients(coarse, nm, cfg.d());
        const int ratio = 1 << (opt.reference_level - lev);
        std::vector<double> mode_err(nm);
        for (int n = 0; n < nm; ++n) {
          // f_ref - f_coarse on the fine columns
          PiecewiseConstant diff{fine_cols, f_ref[n].values};
          for (std::size_t c = 0; c < diff.values.size(); ++c) {
            diff.values[c] -= f_c[n].values[c / ratio];
          }
          AxialSource src;
          src.pieces.push_back(std::move(diff));
          const auto u = ops[n]->solve(src);
          double acc = 0.0;
          for (std::size_t j = 0; j + 1 < u.size(); ++j) {
            const double h = grid.node(j + 1) - grid.node(j);
            acc += 0.5 * h * (std::norm(u[j]) + std::norm(u[j + 1]));
          }
          mode_err[n] = acc;
        }
        per_seed[s][li] = pairwise_sum(mode_err);
      }
    } catch (const std::exception& ex) {
      throw StudyError(seed, ex.what());
    }
  });

  StudyResult r;
  r.name = "h";
  r.abscissa_name = "h";
  r.n_samples = opt.n_samples;
  r.base_seed = opt.base_seed;
  r.theory_rate = 2.0;
  for (std::size_t li = 0; li < nl; ++li) {
    std::vector<double> v(opt.n_samples);
    for (std::size_t s = 0; s < opt.n_samples; ++s) v[s] = per_seed[s][li];
    const double mean = pairwise_sum(v) / double(v.size());
    std::vector<double> dev(v.size());
    for (std::size_t s = 0; s < v.size(); ++s) dev[s] = (v[s] - mean) * (v[s] - mean);
    const double se = v.size() > 1 ? std::sqrt(pairwise_sum(dev) / double(v.size() - 1) / double(v.size())) : 0.0;
    r.abscissa.push_back(mesh->h(opt.levels[li]));
    r.error_mean.push_back(mean);
    r.error_stderr.push_back(se);
    r.excluded.push_back(!(mean > 3.0 * se));
  }
  std::vector<double> x, y, e;
  for (std::size_t i = 0; i < nl; ++i) {
    if (r.excluded[i]) continue;
    x.push_back(r.abscissa[i]);
    y.push_back(r.error_mean[i]);
    e.push_back(r.error_stderr[i]);
  }
  try {
    r.fit = fit_rate(x, y, e, RateTransform::loglog);
    r.fit_ok = true;
  } catch (const InsufficientDataError&) {
    r.fit_ok = false;
  }
  r.pass = r.fit_ok && r.fit.slope >= opt.min_rate && r.fit.slope_stderr < opt.max_rate_stderr;
  r.notes.push_back({"reference_h", std::to_string(mesh->h(opt.reference_level))});
  r.notes.push_back({"n_modes", std::to_string(nm)});
  return r;
}

// ---------------------------------------------------------------------------
// L study

/// Source used by the layer studies when none is given: a 2D bump centred
/// in the forcing rectangle, projected onto modes 0 .. n_modes-1. Its
/// energy sits mostly in the propagating modes.
inline ModalSource default_study_source(const DuctConfig& cfg, int n_modes) {
  const Rect rect = default_forcing_rect(cfg);
  const double c1 = 0.5 * (rect.a1 + rect.b1), w1 = 0.5 * rect.width();
  const double c2 = 0.5 * (rect.a2 + rect.b2), w2 = 0.5 * rect.height();
  ModalSource src;
  for (int n = 0; n < n_modes; ++n) {
    // transverse projection of (1 - s^2)^4 on [c2 - w2, c2 + w2]
    auto prof = [&](double x2) {
      const double s = (x2 - c2) / w2;
      if (std::abs(s) >= 1.0) return 0.0;
      const double u = 1.0 - s * s;
      return u * u * u * u * mode_shape(n, x2, cfg.d());
    };
    double t = 0.0;
    const int pieces = 32;
    for (int q = 0; q < pieces; ++q) {
      const double lo = c2 - w2 + 2.0 * w2 * q / pieces, hi = lo + 2.0 * w2 / pieces;
      t += gauss_integrate<8>(prof, lo, hi);
    }
    if (std::abs(t) < 1e-14) continue;
    src.modes[n] = bump_source(c1, w1, t);
  }
  return src;
}

struct LStudyOptions {
  double sigma_plus = 5.0;
  double sigma_minus = 5.0;
  std::vector<double> L_values{0.5, 1.0, 1.5, 2.0};
  int grid_cells = 512;
  int n_modes = -1;               // -1: N0 + 30
  ModalSource source;             // empty: default_study_source
  unsigned threads = 1;
  double tolerance = 0.25;        // relative window around C2
  double floor_relative = 1e-11;  // errors below floor * ||p|| are excluded
};

/// ||p_dtn - p_reduced(L)|| on the computational domain for each L, fitted
/// log-linearly against the integral of min(1, sigma/omega) over the plus
/// layer.
inline StudyResult run_L_study(const DuctConfig& cfg, const LStudyOptions& opt) {
  const int nm = opt.n_modes < 0 ? default_mode_count(cfg) : opt.n_modes;
  const ModalSource src = opt.source.empty() ? default_study_source(cfg, nm) : opt.source;
  const Grid1D grid(cfg.x_minus(), cfg.x_plus(), opt.grid_cells);
  SolveOptions so;
  so.n_modes = nm;
  so.threads = opt.threads;
  const auto ref = solve_full(&src, nullptr, cfg, nullptr, Formulation::dtn, grid, so);
  const double ref_norm = l2_norm_omega_b(ref);
  StudyResult r;
  r.name = "L";
  r.abscissa_name = "int_sigma_tilde";
  r.theory_rate = -decay_constant_c2(cfg);
  bool monotone = true;
  double prev = std::numeric_limits<double>::infinity();
  for (double L : opt.L_values) {
    const auto prof = PmlProfile::quadratic(opt.sigma_plus, opt.sigma_minus, cfg.x_minus(),
                                            cfg.x_plus(), L);
    const auto sol = solve_full(&src, nullptr, cfg, &prof, Formulation::pml_reduced, grid, so);
    const double err = l2_error(ref, sol);
    r.abscissa.push_back(prof.sigma_tilde_integral(Side::plus, L, cfg.omega()));
    r.error_mean.push_back(err);
    r.error_stderr.push_back(0.0);
    const bool floor = err < opt.floor_relative * ref_norm;
    r.excluded.push_back(floor);
    if (!floor) {
      if (err >= prev) monotone = false;
      prev = err;
    }
  }
  std::vector<double> x, y;
  for (std::size_t i = 0; i < r.abscissa.size(); ++i) {
    if (r.excluded[i]) continue;
    x.push_back(r.abscissa[i]);
    y.push_back(r.error_mean[i]);
  }
  try {
    r.fit = fit_rate(x, y, {}, RateTransform::loglinear);
    r.fit_ok = true;
  } catch (const InsufficientDataError&) {
    r.fit_ok = false;
  }
  const double c2 = decay_constant_c2(cfg);
  const bool within = r.fit_ok && std::abs(-r.fit.slope - c2) <= opt.tolerance * c2;
  r.pass = within && monotone;
  r.notes.push_back({"C2", std::to_string(c2)});
  r.notes.push_back({"monotone", monotone ? "true" : "false"});
  r.notes.push_back({"decay_at_least_C2", r.fit_ok && -r.fit.slope >= (1.0 - opt.tolerance) * c2 ? "true" : "false"});
  r.notes.push_back({"reference_norm", std::to_string(ref_norm)});
  return r;
}

// ---------------------------------------------------------------------------
// equivalence of the full-layer and reduced-layer formulations

struct EquivalenceOptions {
  std::vector<int> grid_cells{256, 512, 1024};
  int n_modes = -1;
  ModalSource source;  // empty: default_study_source
  unsigned threads = 1;
  double min_rate = 1.9;
};

struct EquivalenceResult {
  std::vector<double> spacing;
  std::vector<double> max_difference;
  RateFit fit;
  bool fit_ok = false;
  bool pass = false;
};

/// Largest nodal difference on [x_minus, x_plus], over all modes, between
/// the full-layer and the reduced solutions.
inline double equivalence_difference(const DuctConfig& cfg, const PmlProfile& prof,
                                     const ModalSource& src, int grid_cells, int n_modes,
                                     unsigned threads) {
  const Grid1D grid(cfg.x_minus(), cfg.x_plus(), grid_cells);
  SolveOptions so;
  so.n_modes = n_modes;
  so.threads = threads;
  const auto full = restrict_to_omega_b(
      solve_full(&src, nullptr, cfg, &prof, Formulation::pml_full, grid, so));
  const auto red = solve_full(&src, nullptr, cfg, &prof, Formulation::pml_reduced, grid, so);
  double m = 0.0;
  for (int n = 0; n < n_modes; ++n) {
    for (std::size_t j = 0; j < red.values[n].size(); ++j) {
      m = std::max(m, std::abs(full.values[n][j] - red.values[n][j]));
    }
  }
  return m;
}

inline EquivalenceResult run_equivalence_check(const DuctConfig& cfg, const PmlProfile& prof,
                                               const EquivalenceOptions& opt) {
  const int nm = opt.n_modes < 0 ? default_mode_count(cfg) : opt.n_modes;
  const ModalSource src = opt.source.empty() ? default_study_source(cfg, nm) : opt.source;
  EquivalenceResult r;
  for (int cells : opt.grid_cells) {
    r.spacing.push_back((cfg.x_plus() - cfg.x_minus()) / cells);
    r.max_difference.push_back(equivalence_difference(cfg, prof, src, cells, nm, opt.threads));
  }
  try {
    r.fit = fit_rate(r.spacing, r.max_difference, {}, RateTransform::loglog);
    r.fit_ok = true;
  } catch (const InsufficientDataError&) {
    r.fit_ok = false;
  }
  r.pass = r.fit_ok && r.fit.slope >= opt.min_rate;
  return r;
}

// ---------------------------------------------------------------------------
// combined (h, L) study

struct TotalStudyOptions {
  Rect forcing;
  std::vector<int> levels{2, 3, 4};
  int reference_level = 6;
  int base_nx = 2, base_ny = 1;
  std::vector<double> L_values{0.5, 1.0, 1.5, 2.0};
  double sigma_plus = 5.0, sigma_minus = 5.0;
  int grid_cells = 512;
  int n_modes = 128;
  std::size_t n_samples = 50;
  std::uint64_t base_seed = 1;
  unsigned threads = 1;
};

struct TotalStudyResult {
  std::vector<double> h;
  std::vector<double> L;
  std::vector<double> int_sigma_tilde;
  std::vector<std::vector<double>> mean;    // [ih][iL]
  std::vector<std::vector<double>> stderr_; // [ih][iL]
  bool monotone_h = false;                  // non-increasing as h shrinks, up to 3 sigma
  bool monotone_L = false;                  // non-increasing as L grows, up to 3 sigma
  std::size_t n_samples = 0;
  std::uint64_t base_seed = 0;
};

/// E ||p_ref - p^{h, L}||^2, with p_ref the exact-DtN solve driven by the
/// reference-level noise and p^{h, L} the reduced-layer solve driven by the
/// level-h noise.
inline TotalStudyResult run_total_error_study(const DuctConfig& cfg, const TotalStudyOptions& opt) {
  Rect rect = opt.forcing.area() > 0.0 ? opt.forcing : default_forcing_rect(cfg);
  auto mesh = std::make_shared<const NoiseMesh>(rect, opt.base_nx, opt.base_ny,
                                                opt.reference_level + 1);
  const Grid1D grid(cfg.x_minus(), cfg.x_plus(), opt.grid_cells);
  const int nm = opt.n_modes;
  const std::size_t nh = opt.levels.size(), nL = opt.L_values.size();
  for (int l : opt.levels) {
    if (l < 0 || l > opt.reference_level) throw ContractError("h levels must be nested below the reference level");
  }
  std::vector<std::unique_ptr<ModeOperator>> ref_ops(nm);
  std::vector<std::vector<std::unique_ptr<ModeOperator>>> red_ops(nL);
  std::vector<PmlProfile> profiles;
  for (double L : opt.L_values) {
    profiles.push_back(PmlProfile::quadratic(opt.sigma_plus, opt.sigma_minus, cfg.x_minus(), cfg.x_plus(), L));
  }
  for (auto& v : red_ops) v.resize(nm);
  parallel_for(static_cast<std::size_t>(nm), opt.threads, [&](std::size_t n) {
    ref_ops[n] = std::make_unique<ModeOperator>(static_cast<int>(n), Formulation::dtn, cfg, grid);
    for (std::size_t il = 0; il < nL; ++il) {
      red_ops[il][n] = std::make_unique<ModeOperator>(static_cast<int>(n), Formulation::pml_reduced,
                                                      cfg, grid, &profiles[il]);
    }
  });
  const auto row_int = row_mode_integrals(*mesh, opt.reference_level, nm, cfg.d());
  std::vector<std::vector<double>> per_seed(opt.n_samples, std::vector<double>(nh * nL));
  parallel_for(opt.n_samples, opt.threads, [&](std::size_t s) {
    const std::uint64_t seed = opt.base_seed + s;
    try {
      const auto fine = sample(mesh, seed);
      const auto f_ref = noise_modal_coefficients(fine, nm, cfg.d(), &row_int);
      std::vector<std::vector<cplx>> p_ref(nm);
      for (int n = 0; n < nm; ++n) {
        AxialSource src;
        src.pieces.push_back(f_ref[n]);
        p_ref[n] = ref_ops[n]->solve(src);
      }
      for (std::size_t ih = 0; ih < nh; ++ih) {
        const auto coarse = coarsen_to(fine, opt.levels[ih]);
        const auto f_c = noise_modal_coefficients(coarse, nm, cfg.d());
        for (std::size_t il = 0; il < nL; ++il) {
          std::vector<double> mode_err(nm);
          for (int n = 0; n < nm; ++n) {
            AxialSource src;
            src.pieces.push_back(f_c[n]);
            const auto u = red_ops[il][n]->solve(src);
            double acc = 0.0;
            for (std::size_t j = 0; j + 1 < u.size(); ++j) {
              const double h = grid.node(j + 1) - grid.node(j);
              acc += 0.5 * h * (std::norm(u[j] - p_ref[n][j]) + std::norm(u[j + 1] - p_ref[n][j + 1]));
            }
            mode_err[n] = acc;
          }
          per_seed[s][ih * nL + il] = pairwise_sum(mode_err);
        }
      }
    } catch (const std::exception& ex) {
      throw StudyError(seed, ex.what());
    }
  });
  TotalStudyResult r;
  r.n_samples = opt.n_samples;
  r.base_seed = opt.base_seed;
  for (int l : opt.levels) r.h.push_back(mesh->h(l));
  r.L = opt.L_values;
  for (const auto& p : profiles) r.int_sigma_tilde.push_back(p.sigma_tilde_integral(Side::plus, p.L(), cfg.omega()));
  r.mean.assign(nh, std::vector<double>(nL));
  r.stderr_.assign(nh, std::vector<double>(nL));
  for (std::size_t c = 0; c < nh * nL; ++c) {
    std::vector<double> v(opt.n_samples);
    for (std::size_t s = 0; s < opt.n_samples; ++s) v[s] = per_seed[s][c];
    const double mean = pairwise_sum(v) / double(v.size());
    std::vector<double> dev(v.size());
    for (std::size_t s = 0; s < v.size(); ++s) dev[s] = (v[s] - mean) * (v[s] - mean);
    r.mean[c / nL][c % nL] = mean;
    r.stderr_[c / nL][c % nL] =
        v.size() > 1 ? std::sqrt(pairwise_sum(dev) / double(v.size() - 1) / double(v.size())) : 0.0;
  }
  auto ok = [&](std::size_t a1, std::size_t b1, std::size_t a2, std::size_t b2) {
    // value at (a2, b2) must not exceed value at (a1, b1) by more than 3 sigma
    const double tol = 3.0 * std::hypot(r.stderr_[a1][b1], r.stderr_[a2][b2]);
    return r.mean[a2][b2] <= r.mean[a1][b1] + tol;
  };
  r.monotone_h = true;
  r.monotone_L = true;
  // levels are listed coarse to fine
  for (std::size_t ih = 0; ih + 1 < nh; ++ih) {
    for (std::size_t il = 0; il < nL; ++il) r.monotone_h = r.monotone_h && ok(ih, il, ih + 1, il);
  }
  for (std::size_t ih = 0; ih < nh; ++ih) {
    for (std::size_t il = 0; il + 1 < nL; ++il) r.monotone_L = r.monotone_L && ok(ih, il, ih, il + 1);
  }
  return r;
}

}  // namespace ductpml
