#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ductpml/noise.hpp"
#include "ductpml/parallel.hpp"

using namespace ductpml;

namespace {

struct Moments {
  double mean, se;
};

Moments moments(const std::vector<double>& v) {
  double m = 0.0;
  for (double a : v) m += a;
  m /= double(v.size());
  double s = 0.0;
  for (double a : v) s += (a - m) * (a - m);
  return {m, std::sqrt(s / double(v.size() - 1) / double(v.size()))};
}

}  // namespace

TEST(NoiseMesh, DyadicCounts) {
  const auto m = build_mesh({0.0, 1.0, 0.0, 1.0}, std::numbers::sqrt2 / 8, 3);
  EXPECT_EQ(m.cell_count(0), 4u);
  EXPECT_EQ(m.cell_count(1), 16u);
  EXPECT_EQ(m.cell_count(2), 64u);
  EXPECT_LE(m.h(2), std::numbers::sqrt2 / 8 * (1 + 1e-12));
  for (int l = 0; l < 3; ++l) {
    EXPECT_NEAR(m.cell_area(l), 1.0 / double(m.cell_count(l)), 1e-15);
    if (l > 0) {
      EXPECT_NEAR(m.cell_area(l - 1) / m.cell_area(l), 4.0, 1e-14);
      EXPECT_NEAR(m.h(l - 1) / m.h(l), 2.0, 1e-14);
    }
  }
}

TEST(NoiseMesh, CellsPartitionTheRectangle) {
  const NoiseMesh m({-0.5, 0.5, 0.25, 0.75}, 2, 1, 4);
  for (int l = 0; l < 4; ++l) {
    double area = 0.0;
    for (std::size_t i = 0; i < m.cell_count(l); ++i) area += m.cell(l, i).area();
    EXPECT_NEAR(area, 0.5, 1e-14);
  }
  // children of a level-1 cell are exactly the four level-2 cells inside it
  const auto parent = m.cell(1, 5);
  int inside = 0;
  for (std::size_t i = 0; i < m.cell_count(2); ++i) {
    const auto c = m.cell(2, i);
    if (c.x1_lo >= parent.x1_lo - 1e-15 && c.x1_hi <= parent.x1_hi + 1e-15 &&
        c.x2_lo >= parent.x2_lo - 1e-15 && c.x2_hi <= parent.x2_hi + 1e-15) {
      ++inside;
      EXPECT_NEAR(c.area(), parent.area() / 4, 1e-15);
    }
  }
  EXPECT_EQ(inside, 4);
}

TEST(NoiseMesh, RejectsDegenerate) {
  EXPECT_THROW(build_mesh({0.0, 0.0, 0.0, 1.0}, 0.1, 2), DomainError);
  EXPECT_THROW(build_mesh({0.0, 1.0, 0.0, 1.0}, 0.1, 0), DomainError);
  EXPECT_THROW(NoiseMesh({0.0, 1.0, 1.0, 1.0}, 1, 1, 1), DomainError);
}

TEST(NoiseMesh, HalfOpenLocation) {
  const NoiseMesh m({0.0, 1.0, 0.0, 1.0}, 2, 2, 1);
  EXPECT_EQ(m.locate(0, 0.0, 0.0), 0);
  EXPECT_EQ(m.locate(0, 0.5, 0.0), 1);  // shared edge belongs to the right cell
  EXPECT_EQ(m.locate(0, 0.25, 0.5), 2);
  EXPECT_EQ(m.locate(0, 1.0, 0.5), -1);
  EXPECT_EQ(m.locate(0, 0.999999, 0.999999), 3);
}

TEST(Sample, Deterministic) {
  const auto m = std::make_shared<const NoiseMesh>(Rect{0.0, 1.0, 0.0, 1.0}, 2, 2, 5);
  const auto a = sample(m, 42);
  const auto b = sample(m, 42);
  EXPECT_EQ(a.xi, b.xi);
  EXPECT_NE(a.xi, sample(m, 43).xi);
  // draws from many threads reproduce the serial ones
  std::vector<std::vector<double>> par(8);
  parallel_for(8, 4, [&](std::size_t i) { par[i] = sample(m, 100 + i).xi; });
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(par[i], sample(m, 100 + i).xi);
}

TEST(Sample, StandardNormalMoments) {
  const auto m = std::make_shared<const NoiseMesh>(Rect{0.0, 1.0, 0.0, 1.0}, 1, 1, 7);
  const auto r = sample(m, 2024);
  ASSERT_EQ(r.xi.size(), 4096u);
  double mean = 0.0;
  for (double v : r.xi) mean += v;
  mean /= 4096.0;
  double var = 0.0;
  for (double v : r.xi) var += (v - mean) * (v - mean);
  var /= 4095.0;
  EXPECT_LT(std::abs(mean), 4.0 / 64.0);
  EXPECT_GE(var, 0.9);
  EXPECT_LE(var, 1.1);
}

TEST(Coarsen, Examples) {
  const auto m = std::make_shared<const NoiseMesh>(Rect{0.0, 1.0, 0.0, 1.0}, 1, 1, 3);
  auto r = sample(m, 1);
  for (auto& v : r.xi) v = 0.75;
  const auto c = coarsen(r);
  EXPECT_EQ(c.level, 1);
  for (double v : c.xi) EXPECT_DOUBLE_EQ(v, 1.5);
  // two steps weight every grandchild by 1/4
  const auto r2 = sample(m, 9);
  const auto cc = coarsen(coarsen(r2));
  double s = 0.0;
  for (double v : r2.xi) s += v;
  EXPECT_NEAR(cc.xi[0], s / 4.0, 1e-14);
  EXPECT_EQ(coarsen_to(r2, 0).xi, cc.xi);
  EXPECT_THROW(coarsen(cc), DomainError);
}

TEST(Coarsen, VariancePreserved) {
  const auto m = std::make_shared<const NoiseMesh>(Rect{0.0, 1.0, 0.0, 1.0}, 1, 1, 7);
  const auto c = coarsen(sample(m, 77));
  double var = 0.0;
  for (double v : c.xi) var += v * v;
  var /= double(c.xi.size());
  // 1024 draws, 4 sigma band for the second moment
  EXPECT_NEAR(var, 1.0, 4.0 * std::sqrt(2.0 / 1024.0));
}

TEST(EvaluateWh, Examples) {
  const auto m = std::make_shared<const NoiseMesh>(Rect{0.0, 0.1, 0.0, 0.1}, 1, 1, 1);
  auto r = sample(m, 3);
  r.xi[0] = 1.0;
  EXPECT_NEAR(evaluate_wh(r, 0.05, 0.05), 10.0, 1e-12);
  EXPECT_EQ(evaluate_wh(r, 0.2, 0.05), 0.0);
  EXPECT_EQ(evaluate_wh(r, 0.05, -0.01), 0.0);
}

TEST(EvaluateWh, Covariance) {
  const auto m = std::make_shared<const NoiseMesh>(Rect{0.0, 0.2, 0.0, 0.1}, 2, 1, 1);
  ASSERT_NEAR(m->cell_area(0), 0.01, 1e-15);
  const int n = 10000;
  std::vector<double> same(n), diff(n);
  for (int s = 0; s < n; ++s) {
    const auto r = sample(m, 5000 + s);
    same[s] = evaluate_wh(r, 0.02, 0.03) * evaluate_wh(r, 0.07, 0.08);
    diff[s] = evaluate_wh(r, 0.02, 0.03) * evaluate_wh(r, 0.15, 0.05);
  }
  const auto a = moments(same), b = moments(diff);
  EXPECT_LT(std::abs(a.mean - 100.0), 3 * a.se);
  EXPECT_LT(std::abs(b.mean), 3 * b.se);
}

TEST(EvaluateWh, LevelCoupling) {
  const auto m = std::make_shared<const NoiseMesh>(Rect{0.0, 1.0, 0.0, 1.0}, 1, 1, 4);
  const double x1 = 0.3, x2 = 0.6;
  const int n = 10000;
  std::vector<double> v(n);
  for (int s = 0; s < n; ++s) {
    const auto fine = sample(m, 90000 + s);
    const auto coarse = coarsen_to(fine, 1);
    v[s] = evaluate_wh(coarse, x1, x2) * evaluate_wh(fine, x1, x2);
  }
  const auto e = moments(v);
  EXPECT_LT(std::abs(e.mean - 1.0 / m->cell_area(1)), 3 * e.se);
}

TEST(EvaluateWh, Isometry) {
  const auto m = std::make_shared<const NoiseMesh>(Rect{0.0, 1.0, 0.0, 0.5}, 2, 1, 3);
  const int L = 2;
  const auto nc = m->cell_count(L);
  std::vector<double> psi(nc);
  for (std::size_t i = 0; i < nc; ++i) psi[i] = std::sin(1.0 + 0.7 * double(i));
  double expect = 0.0;
  for (double p : psi) expect += m->cell_area(L) * p * p;
  const int n = 10000;
  std::vector<double> v(n);
  for (int s = 0; s < n; ++s) {
    const auto r = coarsen_to(sample(m, 31 + s), L);
    double acc = 0.0;
    for (std::size_t i = 0; i < nc; ++i) acc += r.xi[i] * std::sqrt(m->cell_area(L)) * psi[i];
    v[s] = acc * acc;
  }
  const auto e = moments(v);
  EXPECT_LT(std::abs(e.mean - expect), 3 * e.se);
}

TEST(ModalCoefficients, FullHeightCellModeZero) {
  DuctParams p;
  p.d = 1.0;
  p.k = 2.0;
  const DuctConfig cfg(p);
  const auto m = std::make_shared<const NoiseMesh>(Rect{-0.5, 0.5, 0.0, 1.0}, 4, 1, 1);
  auto r = sample(m, 1);
  const auto f0 = modal_source_coefficients(r, 0, cfg);
  for (std::size_t i = 0; i < r.xi.size(); ++i) {
    EXPECT_NEAR(f0.values[i].real(), r.xi[i] * 1.0 / std::sqrt(m->cell_area(0)), 1e-13);
  }
  EXPECT_EQ(f0.breaks, m->column_edges(0));
}

TEST(ModalCoefficients, HalfHeightModeOne) {
  DuctParams p;
  p.d = 2.0;
  p.k = 1.0;
  const DuctConfig cfg(p);
  const auto m = std::make_shared<const NoiseMesh>(Rect{0.0, 0.5, 0.0, 1.0}, 1, 1, 1);
  auto r = sample(m, 1);
  r.xi[0] = 1.0;
  const double d = 2.0;
  const double factor = std::sqrt(2.0 / d) * d / std::numbers::pi;
  const auto f1 = modal_source_coefficients(r, 1, cfg);
  EXPECT_NEAR(f1.values[0].real(), factor / std::sqrt(0.5), 1e-14);
}

TEST(ModalCoefficients, MatchesDirectProjection) {
  DuctParams p;
  p.k = 3.0;
  const DuctConfig cfg(p);
  const auto m = std::make_shared<const NoiseMesh>(Rect{-0.5, 0.5, 0.25, 0.75}, 2, 1, 3);
  const auto r = sample(m, 11);
  const auto all = noise_modal_coefficients(r, 6, cfg.d());
  const int Q = 4000;
  for (int n = 0; n < 6; ++n) {
    const auto single = modal_source_coefficients(r, n, cfg);
    for (double x1 : {-0.41, 0.02, 0.33}) {
      double direct = 0.0;
      for (int j = 0; j < Q; ++j) {
        const double x2 = (j + 0.5) / Q;
        direct += evaluate_wh(r, x1, x2) * mode_shape(n, x2, 1.0) / Q;
      }
      EXPECT_NEAR(single(x1).real(), direct, 1e-3 * (1 + std::abs(direct)));
      EXPECT_NEAR(all[n](x1).real(), single(x1).real(), 1e-13);
    }
  }
}
