// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ductpml/cli.hpp"
#include "ductpml/greens.hpp"
#include "ductpml/harness.hpp"
#include "ductpml/noise.hpp"
#include "ductpml/pml.hpp"
#include "ductpml/solver.hpp"
#include "ductpml/stats.hpp"

using namespace ductpml;
using cd = std::complex<double>;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

DuctConfig make(double M, double k, double L = 2.0) {
  DuctParams p;
  p.M = M;
  p.k = k;
  p.L = L;
  return DuctConfig(p);
}

std::string f(double x) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", x);
  return b;
}

unsigned threads() { return resolve_threads(0); }

Outcome dispersion() {
  // long double roots and residuals; the double path is reported alongside,
  // its floor is about 2 (n pi / d)^2 eps
  long double worst = 0.0L;
  double worst_double = 0.0;
  int checked = 0;
  for (double M : {0.0, 0.3, 0.6, 0.9}) {
    for (double k : {1.0, 5.0, 20.0}) {
      const auto c = make(M, k);
      const double scale = std::max(1.0, k * k);
      for (int n = 0; n <= 50; ++n) {
        const auto w = axial_wavenumbers<long double>(n, c);
        worst = std::max({worst, dispersion_residual<long double>(w.plus, n, c) / scale,
                          dispersion_residual<long double>(w.minus, n, c) / scale});
        const auto wd = axial_wavenumbers(n, c);
        worst_double = std::max({worst_double, dispersion_residual(wd.plus, n, c) / scale,
                                 dispersion_residual(wd.minus, n, c) / scale});
        ++checked;
      }
    }
  }
  return {worst < 1e-12L, "max scaled residual " + f(double(worst)) + " (double precision " +
                              f(worst_double) + ") over " + std::to_string(checked) + " modes"};
}

Outcome greens_oracles() {
  const auto c = make(0.3, 5.0);
  GreensEvalParams pi;
  pi.n_images = 10000;
  GreensEvalParams pm;
  pm.n_modes = 80;
  double worst = 0.0;
  for (int a = 0; a < 5; ++a) {
    for (int b = 0; b < 5; ++b) {
      const Point y{-0.3, 0.1 + 0.2 * a};
      const Point x{y[0] + (a % 2 ? 1.0 : -1.0) * (0.5 + 0.1 * b), 0.15 + 0.18 * b};
      const cd gi = greens_images(x, y, pi, c).value;
      const cd gm = greens_modal(x, y, pm, c).value;
      worst = std::max(worst, std::abs(gi - gm) / std::abs(gm));
    }
  }
  const double b2 = c.beta_sq(), k = c.k(), M = c.M();
  GreensEvalParams p;
  p.n_images = 64;
  const Point y{0.0, 0.4};
  const std::vector<Point> xs{{0.5, 0.3}, {-0.45, 0.7}, {0.2, 0.85}};
  std::vector<double> deltas{1.0 / 64, 1.0 / 128, 1.0 / 256}, res;
  for (double D : deltas) {
    double r_max = 0.0;
    for (const auto& x : xs) {
      auto G = [&](double s, double t) { return greens_images({x[0] + s, x[1] + t}, y, p, c).value; };
      const cd g0 = G(0, 0), e = G(D, 0), w = G(-D, 0), n = G(0, D), s = G(0, -D);
      const cd r = b2 * (e - 2.0 * g0 + w) / (D * D) + (n - 2.0 * g0 + s) / (D * D) +
                   cd{0.0, 2.0 * k * M} * (e - w) / (2 * D) + k * k * g0;
      r_max = std::max(r_max, std::abs(r) / (k * k * std::abs(g0)));
    }
    res.push_back(r_max);
  }
  const auto fit = fit_rate(deltas, res, {}, RateTransform::loglog);
  return {worst < 1e-4 && fit.slope >= 1.8,
          "images vs modal max rel " + f(worst) + ", residual order " + f(fit.slope)};
}

Outcome noise_statistics() {
  const auto m = std::make_shared<const NoiseMesh>(Rect{0.0, 0.2, 0.0, 0.1}, 2, 1, 1);
  const double area = m->cell_area(0);
  const int n = 10000;
  std::vector<double> same(n), diff(n);
  for (int s = 0; s < n; ++s) {
    const auto r = sample(m, 1000 + s);
    same[s] = evaluate_wh(r, 0.02, 0.03) * evaluate_wh(r, 0.07, 0.08);
    diff[s] = evaluate_wh(r, 0.02, 0.03) * evaluate_wh(r, 0.15, 0.05);
  }
  auto stats = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double a : v) mean += a;
    mean /= double(v.size());
    double var = 0.0;
    for (double a : v) var += (a - mean) * (a - mean);
    return std::pair{mean, std::sqrt(var / double(v.size() - 1) / double(v.size()))};
  };
  const auto [ms, ses] = stats(same);
  const auto [md, sed] = stats(diff);
  const bool cov_ok = std::abs(ms - 1.0 / area) < 3 * ses && std::abs(md) < 3 * sed;
  // coarsening is linear in xi: its variance is the squared norm of the weights
  const auto fine = std::make_shared<const NoiseMesh>(Rect{0.0, 1.0, 0.0, 1.0}, 1, 1, 4);
  auto unit = sample(fine, 1);
  double worst = 0.0;
  for (std::size_t parent = 0; parent < fine->cell_count(2); ++parent) {
    double var = 0.0;
    for (std::size_t j = 0; j < unit.xi.size(); ++j) {
      std::fill(unit.xi.begin(), unit.xi.end(), 0.0);
      unit.xi[j] = 1.0;
      const double w = coarsen(unit).xi[parent];
      var += w * w;
    }
    worst = std::max(worst, std::abs(var - 1.0));
  }
  return {cov_ok && worst <= 4 * std::numeric_limits<double>::epsilon(),
          "same-cell mean " + f(ms * area) + "/|K| (se " + f(ses * area) + "), distinct " + f(md) +
              " (se " + f(sed) + "), coarsened variance error " + f(worst)};
}

Outcome layer_identities() {
  double worst = 0.0;
  int points = 0;
  for (double M : {0.0, 0.3, 0.6}) {
    for (double L : {0.5, 1.0, 2.0, 3.0}) {
      for (double sp : {0.5, 2.0, 5.0, 10.0}) {
        const auto c = make(M, 5.0, L);
        const auto p = PmlProfile::quadratic(sp, 0.5 * sp, c);
        for (int n = 0; n < 6; ++n) {
          for (Side side : {Side::plus, Side::minus}) {
            const double a = reflection_coefficient(n, side, p, c);
            const double b = reflection_closed_form(n, side, p, c);
            if (b != 0.0) worst = std::max(worst, std::abs(a / b - 1.0));
            const cd u = nu_coefficient(n, side, p, c), v = nu_closed_form(n, side, p, c);
            worst = std::max(worst, std::abs(u - v) / std::max(1.0, std::abs(v)));
            ++points;
          }
        }
      }
    }
  }
  return {worst < 1e-12 && points >= 200,
          "max relative mismatch " + f(worst) + " over " + std::to_string(points) + " points"};
}

Outcome gap_bounds() {
  int violations = 0, applicable = 0;
  for (double M : {0.0, 0.3, 0.6}) {
    for (double L : {1.0, 2.0, 4.0}) {
      const auto c = make(M, 5.0, L);
      const auto p = PmlProfile::quadratic(5.0, 5.0, c);
      for (int n = 0; n <= 40; ++n) {
        for (Side side : {Side::plus, Side::minus}) {
          const auto g = dtn_gap_bound(n, side, p, c);
          if (!g.applicable) continue;
          ++applicable;
          if (g.log_measured > g.log_bound + 1e-12) ++violations;
        }
      }
    }
  }
  const auto base = make(0.3, 5.0);
  const double c2 = decay_constant_c2(base);
  const int n = cutoff_numbers(base).N0 + 1;
  std::vector<double> x, y;
  for (double L : {2.0, 3.0, 4.0, 5.0, 6.0}) {
    const auto c = make(0.3, 5.0, L);
    const auto p = PmlProfile::quadratic(5.0, 5.0, c);
    x.push_back(p.sigma_tilde_integral(Side::plus, L, c.omega()));
    y.push_back(dtn_gap_bound(n, Side::plus, p, c).measured);
  }
  const auto fit = fit_rate(x, y, {}, RateTransform::loglinear);
  const bool rate_ok = std::abs(-fit.slope - c2) <= 0.25 * c2;
  return {violations == 0 && rate_ok,
          std::to_string(violations) + " violations in " + std::to_string(applicable) +
              " applicable cases; dominant-mode decay " + f(-fit.slope) + " vs C2 " + f(c2)};
}

Outcome equivalence() {
  const auto c = make(0.3, 5.0, 1.0);
  const auto p = PmlProfile::quadratic(5.0, 5.0, c);
  EquivalenceOptions o;
  o.grid_cells = {256, 512, 1024};
  o.threads = threads();
  const auto r = run_equivalence_check(c, p, o);
  return {r.pass, "observed order " + (r.fit_ok ? f(r.fit.slope) : std::string("n/a")) +
                      ", differences " + f(r.max_difference[0]) + " " + f(r.max_difference[1]) + " " +
                      f(r.max_difference[2])};
}

Outcome solver_oracle() {
  const auto c = make(0.3, 5.0);
  const int n = 0;
  const double a = -0.25, b = 0.25;
  const cd v{1.0, 0.0};
  std::vector<double> spacing, err;
  for (int cells : {256, 512, 1024}) {
    const Grid1D g(-1.0, 1.0, cells);
    const auto u = solve_mode_dtn(n, box_source(a, b, v), c, g);
    double e2 = 0.0, n2 = 0.0;
    std::vector<cd> exact(g.n_nodes());
    for (std::size_t j = 0; j < g.n_nodes(); ++j) exact[j] = v * mode_green_axial_integral(n, g.node(j), a, b, c);
    for (std::size_t j = 0; j + 1 < g.n_nodes(); ++j) {
      const double h = g.node(j + 1) - g.node(j);
      e2 += 0.5 * h * (std::norm(u[j] - exact[j]) + std::norm(u[j + 1] - exact[j + 1]));
      n2 += 0.5 * h * (std::norm(exact[j]) + std::norm(exact[j + 1]));
    }
    spacing.push_back(g.spacing());
    err.push_back(std::sqrt(e2 / n2));
  }
  const auto fit = fit_rate(spacing, err, {}, RateTransform::loglog);
  return {err.back() < 1e-3 && fit.slope >= 1.9,
          "relative L2 error " + f(err.back()) + " at spacing 1/512, order " + f(fit.slope)};
}

Outcome h_rate() {
  HStudyOptions o;
  o.levels = {2, 3, 4};
  o.n_samples = 200;
  o.threads = threads();
  const auto r = run_h_study(make(0.3, 5.0), o);
  return {r.pass, "fitted rate " + (r.fit_ok ? f(r.fit.slope) : std::string("n/a")) + " (se " +
                      (r.fit_ok ? f(r.fit.slope_stderr) : std::string("n/a")) + ")"};
}

Outcome L_rate() {
  LStudyOptions o;
  o.sigma_plus = 5.0;
  o.sigma_minus = 5.0;
  o.L_values = {0.5, 1.0, 1.5, 2.0};
  o.threads = threads();
  const auto c = make(0.3, 5.0);
  const auto r = run_L_study(c, o);
  std::string monotone;
  for (const auto& [k, v] : r.notes) {
    if (k == "monotone") monotone = v;
  }
  return {r.pass, "slope " + (r.fit_ok ? f(r.fit.slope) : std::string("n/a")) + " vs -C2 " +
                      f(-decay_constant_c2(c)) + ", monotone " + monotone};
}

Outcome kernel_difference() {
  const auto probe = lemma2_exponent_probe(probe_pairs({0.0, 0.5}, 1e-3, 1e-1, 7), {}, make(0.3, 5.0));
  return {probe.fit.slope >= 1.8, "fitted exponent " + f(probe.fit.slope)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "ductpml_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cfg = (dir / "study.cfg").string();
  write_text(cfg,
             "[duct]\nd = 1\nM = 0.3\nk = 5\nL = 1\n[pml]\nsigma_plus = 5\nsigma_minus = 5\n"
             "[source]\nkind = none\nnoise = true\n[grid]\nn_cells = 128\nn_modes = 32\n"
             "[run]\nbase_seed = 5\nsamples = 16\ntotal_samples = 8\nh_levels = 1, 2, 3\n"
             "reference_level = 4\nL_values = 0.5, 1, 1.5\nequiv_cells = 64, 128, 256\n");
  int mismatched = 0, compared = 0;
  for (const char* kind : {"h", "L", "total", "equiv"}) {
    std::vector<std::string> outs;
    for (const char* t : {"1", "2", "4"}) {
      const std::string out = (dir / (std::string(kind) + "_t" + t)).string();
      const char* argv[] = {"ductpml", "study", kind, "--config", cfg.c_str(), "--out", out.c_str(),
                            "--threads", t};
      std::ostringstream log, err;
      if (run_cli(9, argv, log, err) != 0) return {false, std::string("study ") + kind + " failed: " + err.str()};
      outs.push_back(out);
    }
    for (const auto& entry : fs::directory_iterator(outs[0])) {
      if (entry.path().extension() != ".csv") continue;
      const auto name = entry.path().filename();
      const auto ref = slurp(entry.path());
      for (std::size_t i = 1; i < outs.size(); ++i) {
        ++compared;
        if (slurp(fs::path(outs[i]) / name) != ref) ++mismatched;
      }
    }
  }
  fs::remove_all(dir);
  return {mismatched == 0 && compared == 8,
          std::to_string(compared) + " CSV comparisons across 1, 2 and 4 threads, " +
              std::to_string(mismatched) + " differ"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "dispersion residuals", 1.0, dispersion},
      {2, "Green's function oracles", 60.0, greens_oracles},
      {3, "noise statistics", 30.0, noise_statistics},
      {4, "reflection and nu identities", 5.0, layer_identities},
      {5, "layer gap bounds and decay constant", 5.0, gap_bounds},
      {6, "full and reduced layer equivalence", 60.0, equivalence},
      {7, "solver against modal Green's function", 30.0, solver_oracle},
      {8, "noise mesh rate", 600.0, h_rate},
      {9, "layer length rate", 300.0, L_rate},
      {10, "kernel difference exponent", 300.0, kernel_difference},
      {11, "thread-count determinism", 900.0, determinism},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    std::printf("criterion %d: %s - %s: %s (%.2f s of %.0f s)%s\n", c.id, pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), secs, c.budget_s, in_time ? "" : " over time budget");
    std::fflush(stdout);
  }
  return failed;
}
