#pragma once

// Command-line front end: subcommands modes, greens, noise, pml, solve and
// study {h, L, total, equiv}. Exit codes: 0 success, 1 usage, 2 config,
// 3 numerical, 4 io.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ductpml/config.hpp"
#include "ductpml/csv.hpp"
#include "ductpml/duct.hpp"
#include "ductpml/errors.hpp"
#include "ductpml/greens.hpp"
#include "ductpml/harness.hpp"
#include "ductpml/noise.hpp"
#include "ductpml/pml.hpp"
#include "ductpml/solver.hpp"

namespace ductpml {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_config = 2, exit_numerical = 3, exit_io = 4 };

inline int exit_code_for(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::config: return exit_config;
    case ErrorCategory::numerical: return exit_numerical;
    case ErrorCategory::io: return exit_io;
    case ErrorCategory::contract: return exit_config;
  }
  return exit_numerical;
}

struct CliOptions {
  std::string config_path;
  std::string out_dir = "./out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<unsigned> threads;
  std::string formulation = "pml_reduced";
  std::string study;
};

namespace cli {

inline RunConfig load(const CliOptions& o) {
  RunConfig rc = load_config(o.config_path);
  if (o.seed) rc.run.base_seed = *o.seed;
  if (o.samples) {
    rc.run.samples = *o.samples;
    rc.run.total_samples = *o.samples;
  }
  if (o.threads) rc.run.threads = *o.threads;
  return rc;
}

inline std::filesystem::path out_path(const CliOptions& o, const std::string& name) {
  return std::filesystem::path(o.out_dir) / name;
}

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * double(i) / double(n - 1);
  v.back() = b;
  return v;
}

inline void run_modes(const CliOptions& o, std::ostream& log) {
  const RunConfig rc = load(o);
  const DuctConfig cfg = rc.duct_config();
  const auto t = dispersion_table(cfg, std::max(1, rc.run.n_max + 1));
  CsvTable csv({"n", "re_beta_plus", "im_beta_plus", "re_beta_minus", "im_beta_minus", "kind"});
  for (int n = 0; n < t.n_max; ++n) {
    csv.row().add(n).add(t.beta_plus[n]).add(t.beta_minus[n]).add(to_string(t.kind[n]));
  }
  write_text(out_path(o, "modes.csv"), csv.str());
  log << "K0=" << t.K0 << " N0=" << t.N0 << "\n";
}

inline void run_greens(const CliOptions& o, std::ostream&) {
  const RunConfig rc = load(o);
  const DuctConfig cfg = rc.duct_config();
  GreensEvalParams gp;
  gp.n_images = rc.grid.n_images;
  gp = resolve(gp, cfg);
  const Point y{rc.grid.y1, rc.grid.y2};
  CsvTable csv({"x1", "x2", "re_g", "im_g", "representation_used"});
  for (double x2 : linspace(0.0, cfg.d(), rc.grid.greens_ny)) {
    for (double x1 : linspace(cfg.x_minus(), cfg.x_plus(), rc.grid.greens_nx)) {
      const Point x{x1, x2};
      auto& row = csv.row().add(x1).add(x2);
      if (std::abs(x1 - y[0]) >= gp.min_axial_gap) {
        row.add(greens_modal(x, y, gp, cfg).value).add("modal");
      } else if (x1 == y[0] && x2 == y[1]) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        row.add(nan).add(nan).add("singular");
      } else {
        row.add(greens_images(x, y, gp, cfg).value).add("images");
      }
    }
  }
  write_text(out_path(o, "greens.csv"), csv.str());
}

inline std::shared_ptr<const NoiseMesh> noise_mesh(const RunConfig& rc) {
  return std::make_shared<const NoiseMesh>(rc.forcing_rect(), rc.source.noise_base_nx,
                                           rc.source.noise_base_ny, rc.source.noise_levels);
}

inline void run_noise(const CliOptions& o, std::ostream&) {
  const RunConfig rc = load(o);
  (void)rc.duct_config();
  const auto mesh = noise_mesh(rc);
  const auto r = sample(mesh, rc.run.base_seed);
  CsvTable csv({"cell", "x1_lo", "x1_hi", "x2_lo", "x2_hi", "xi"});
  for (std::size_t i = 0; i < r.xi.size(); ++i) {
    const Cell c = mesh->cell(r.level, i);
    csv.row().add(i).add(c.x1_lo).add(c.x1_hi).add(c.x2_lo).add(c.x2_hi).add(r.xi[i]);
  }
  write_text(out_path(o, "noise.csv"), csv.str());
}

inline void run_pml(const CliOptions& o, std::ostream&) {
  const RunConfig rc = load(o);
  const DuctConfig cfg = rc.duct_config();
  const PmlProfile prof = rc.profile();
  CsvTable csv({"n", "re_nu_plus", "im_nu_plus", "reflection", "measured_gap", "bound_gap",
                "bound_applicable"});
  for (int n = 0; n <= rc.run.n_max; ++n) {
    const auto nu = nu_coefficient(n, Side::plus, prof, cfg);
    const auto g = dtn_gap_bound(n, Side::plus, prof, cfg);
    csv.row().add(n).add(nu).add(reflection_coefficient(n, Side::plus, prof, cfg)).add(g.measured)
        .add(g.bound).add(g.applicable);
  }
  write_text(out_path(o, "pml.csv"), csv.str());
}

inline Formulation parse_formulation(const std::string& s) {
  if (s == "dtn") return Formulation::dtn;
  if (s == "pml_full") return Formulation::pml_full;
  if (s == "pml_reduced") return Formulation::pml_reduced;
  throw ConfigError("unknown formulation " + s);
}

inline void run_solve(const CliOptions& o, std::ostream& log) {
  const RunConfig rc = load(o);
  const DuctConfig cfg = rc.duct_config();
  const PmlProfile prof = rc.profile();
  const Formulation form = parse_formulation(o.formulation);
  const ModalSource src = rc.modal_source();
  std::optional<NoiseRealization> noise;
  if (rc.source.noise) noise = sample(noise_mesh(rc), rc.run.base_seed);
  const Grid1D grid(cfg.x_minus(), cfg.x_plus(), rc.grid.n_cells);
  SolveOptions so;
  so.n_modes = rc.grid.n_modes;
  so.threads = rc.run.threads;
  const auto sol = restrict_to_omega_b(solve_full(src.empty() ? nullptr : &src,
                                                  noise ? &*noise : nullptr, cfg, &prof, form,
                                                  grid, so));
  CsvTable modal({"n", "x1", "re_pn", "im_pn"});
  for (int n = 0; n < sol.n_modes; ++n) {
    for (std::size_t j = 0; j < sol.grid.n_nodes(); ++j) {
      modal.row().add(n).add(sol.grid.node(j)).add(sol.values[n][j]);
    }
  }
  std::vector<std::array<double, 2>> pts;
  for (double x2 : linspace(0.0, cfg.d(), rc.grid.field_ny)) {
    for (double x1 : linspace(cfg.x_minus(), cfg.x_plus(), rc.grid.field_nx)) pts.push_back({x1, x2});
  }
  const auto vals = assemble_field(sol, pts);
  CsvTable field({"x1", "x2", "re_p", "im_p"});
  for (std::size_t i = 0; i < pts.size(); ++i) field.row().add(pts[i][0]).add(pts[i][1]).add(vals[i]);
  write_text(out_path(o, "modal.csv"), modal.str());
  write_text(out_path(o, "field.csv"), field.str());
  log << "norm_omega_b=" << l2_norm_omega_b(sol) << " tail_bound=" << sol.tail_bound << "\n";
}

inline std::string study_csv(const StudyResult& r) {
  CsvTable csv({"abscissa", "error_mean", "error_stderr", "excluded_flag"});
  for (std::size_t i = 0; i < r.abscissa.size(); ++i) {
    csv.row().add(r.abscissa[i]).add(r.error_mean[i]).add(r.error_stderr[i]).add(bool(r.excluded[i]));
  }
  return csv.str();
}

inline Summary study_summary(const StudyResult& r) {
  Summary s;
  s.set("study", r.name);
  s.set("abscissa", r.abscissa_name);
  s.set("fitted_rate", r.fit_ok ? format_real(r.fit.slope) : std::string("nan"));
  s.set("rate_stderr", r.fit_ok ? format_real(r.fit.slope_stderr) : std::string("nan"));
  s.set("points_used", r.fit_ok ? r.fit.points_used : std::size_t{0});
  s.set("theory_rate", r.theory_rate);
  s.set("pass", r.pass);
  s.set("n_samples", r.n_samples);
  s.set("base_seed", std::to_string(r.base_seed));
  for (const auto& [k, v] : r.notes) s.set(k, v);
  return s;
}

inline void run_study(const CliOptions& o, std::ostream& log) {
  const RunConfig rc = load(o);
  const DuctConfig cfg = rc.duct_config();
  const auto& run = rc.run;
  if (o.study == "h") {
    HStudyOptions ho;
    ho.forcing = rc.forcing_rect();
    ho.levels = run.h_levels;
    ho.reference_level = run.reference_level;
    ho.base_nx = rc.source.noise_base_nx;
    ho.base_ny = rc.source.noise_base_ny;
    ho.grid_cells = rc.grid.n_cells;
    if (rc.grid.n_modes > 0) ho.n_modes = rc.grid.n_modes;
    ho.n_samples = run.samples;
    ho.base_seed = run.base_seed;
    ho.threads = run.threads;
    const auto r = run_h_study(cfg, ho);
    write_text(out_path(o, "study_h.csv"), study_csv(r));
    write_text(out_path(o, "study_h_summary.txt"), study_summary(r).str());
    log << study_summary(r).str();
  } else if (o.study == "L") {
    LStudyOptions lo;
    lo.sigma_plus = rc.pml.sigma_plus;
    lo.sigma_minus = rc.pml.sigma_minus;
    lo.L_values = run.L_values;
    lo.grid_cells = rc.grid.n_cells;
    lo.n_modes = rc.grid.n_modes;
    lo.threads = run.threads;
    if (rc.source.kind != "none") lo.source = rc.modal_source();
    const auto r = run_L_study(cfg, lo);
    Summary s = study_summary(r);
    // applicability of the gap estimate for the slowest-decaying mode at each L
    const int n_dom = cutoff_numbers(cfg).N0 + 1;
    bool all_applicable = true;
    for (double L : run.L_values) {
      const auto prof = PmlProfile::quadratic(lo.sigma_plus, lo.sigma_minus, cfg.x_minus(),
                                              cfg.x_plus(), L);
      const auto g = dtn_gap_bound(n_dom, Side::plus, prof, cfg);
      all_applicable = all_applicable && g.applicable;
      s.set("bound_applicable_L=" + format_real(L), g.applicable ? "true" : "not_applicable");
    }
    s.set("bound_applicable", all_applicable ? "true" : "not_applicable");
    write_text(out_path(o, "study_L.csv"), study_csv(r));
    write_text(out_path(o, "study_L_summary.txt"), s.str());
    log << s.str();
  } else if (o.study == "equiv") {
    EquivalenceOptions eo;
    eo.grid_cells = run.equiv_cells;
    eo.n_modes = rc.grid.n_modes;
    eo.threads = run.threads;
    if (rc.source.kind != "none") eo.source = rc.modal_source();
    const auto r = run_equivalence_check(cfg, rc.profile(), eo);
    CsvTable csv({"abscissa", "error_mean", "error_stderr", "excluded_flag"});
    for (std::size_t i = 0; i < r.spacing.size(); ++i) {
      csv.row().add(r.spacing[i]).add(r.max_difference[i]).add(0.0).add(false);
    }
    Summary s;
    s.set("study", "equiv");
    s.set("abscissa", "spacing");
    s.set("fitted_rate", r.fit_ok ? format_real(r.fit.slope) : std::string("nan"));
    s.set("rate_stderr", r.fit_ok ? format_real(r.fit.slope_stderr) : std::string("nan"));
    s.set("theory_rate", 2.0);
    s.set("pass", r.pass);
    write_text(out_path(o, "study_equiv.csv"), csv.str());
    write_text(out_path(o, "study_equiv_summary.txt"), s.str());
    log << s.str();
  } else if (o.study == "total") {
    TotalStudyOptions to;
    to.forcing = rc.forcing_rect();
    to.levels = run.h_levels;
    to.reference_level = run.reference_level;
    to.base_nx = rc.source.noise_base_nx;
    to.base_ny = rc.source.noise_base_ny;
    to.L_values = run.L_values;
    to.sigma_plus = rc.pml.sigma_plus;
    to.sigma_minus = rc.pml.sigma_minus;
    to.grid_cells = rc.grid.n_cells;
    if (rc.grid.n_modes > 0) to.n_modes = rc.grid.n_modes;
    to.n_samples = run.total_samples;
    to.base_seed = run.base_seed;
    to.threads = run.threads;
    const auto r = run_total_error_study(cfg, to);
    CsvTable csv({"h", "L", "int_sigma_tilde", "error_mean", "error_stderr"});
    for (std::size_t i = 0; i < r.h.size(); ++i) {
      for (std::size_t j = 0; j < r.L.size(); ++j) {
        csv.row().add(r.h[i]).add(r.L[j]).add(r.int_sigma_tilde[j]).add(r.mean[i][j]).add(r.stderr_[i][j]);
      }
    }
    Summary s;
    s.set("study", "total");
    s.set("monotone_h", r.monotone_h);
    s.set("monotone_L", r.monotone_L);
    s.set("pass", r.monotone_h && r.monotone_L);
    s.set("n_samples", r.n_samples);
    s.set("base_seed", std::to_string(r.base_seed));
    write_text(out_path(o, "study_total.csv"), csv.str());
    write_text(out_path(o, "study_total_summary.txt"), s.str());
    log << s.str();
  } else {
    throw ConfigError("unknown study " + o.study);
  }
}

}  // namespace cli

/// Parse argv, run the subcommand and map failures onto exit codes.
inline int run_cli(int argc, const char* const* argv, std::ostream& log = std::cout,
                   std::ostream& err = std::cerr) {
  CliOptions o;
  CLI::App app{"Stochastic convected Helmholtz duct solver with PML truncation", "ductpml"};
  app.require_subcommand(1);
  auto common = [&](CLI::App* sc) {
    sc->add_option("--config", o.config_path, "configuration file")->required();
    sc->add_option("--out", o.out_dir, "output directory");
    sc->add_option("--seed", o.seed, "base seed (overrides the config)");
    sc->add_option("--samples", o.samples, "Monte Carlo sample count");
    sc->add_option("--threads", o.threads, "worker threads, 0 = all cores");
  };
  auto* modes = app.add_subcommand("modes", "dispersion table");
  auto* greens = app.add_subcommand("greens", "Green's function on a grid");
  auto* noise = app.add_subcommand("noise", "one white-noise realization");
  auto* pml = app.add_subcommand("pml", "layer coefficients and reflection");
  auto* solve = app.add_subcommand("solve", "modal solve and field output");
  auto* study = app.add_subcommand("study", "convergence studies");
  for (auto* sc : {modes, greens, noise, pml, solve, study}) common(sc);
  solve->add_option("--formulation", o.formulation, "dtn | pml_full | pml_reduced")
      ->check(CLI::IsMember({"dtn", "pml_full", "pml_reduced"}));
  study->add_option("kind", o.study, "h | L | total | equiv")
      ->required()
      ->check(CLI::IsMember({"h", "L", "total", "equiv"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    log << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return exit_usage;
  }
  try {
    if (!std::filesystem::exists(o.config_path)) throw IoError("config file not found: " + o.config_path);
    if (*modes) cli::run_modes(o, log);
    else if (*greens) cli::run_greens(o, log);
    else if (*noise) cli::run_noise(o, log);
    else if (*pml) cli::run_pml(o, log);
    else if (*solve) cli::run_solve(o, log);
    else cli::run_study(o, log);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_numerical;
  }
  return exit_ok;
}

}  // namespace ductpml
