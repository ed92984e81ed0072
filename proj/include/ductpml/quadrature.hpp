#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

namespace ductpml {

struct QuadratureRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n).
inline QuadratureRule make_gauss_legendre(int n) {
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

/// Cached rule; initialization is thread-safe.
template <int N>
const QuadratureRule& gauss_rule() {
  static const QuadratureRule rule = make_gauss_legendre(N);
  return rule;
}

/// Fixed-order Gauss on [a, b].
template <int N, typename F>
auto gauss_integrate(F&& f, double a, double b) {
  const auto& r = gauss_rule<N>();
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  decltype(f(c)) s{};
  for (int i = 0; i < N; ++i) s += r.weights[i] * f(c + h * r.nodes[i]);
  return s * h;
}

struct AdaptiveResult {
  std::complex<double> value;
  double error_estimate;
  bool converged;
};

namespace detail {

template <typename F>
void adaptive_step(F& f, double a, double b, std::complex<double> whole,
                   double tol, int depth, int max_depth, AdaptiveResult& acc) {
  const double m = 0.5 * (a + b);
  const std::complex<double> left = gauss_integrate<10>(f, a, m);
  const std::complex<double> right = gauss_integrate<10>(f, m, b);
  const double err = std::abs(left + right - whole);
  if (err <= tol || depth >= max_depth) {
    acc.value += left + right;
    acc.error_estimate += err;
    if (err > tol) acc.converged = false;
    return;
  }
  adaptive_step(f, a, m, left, 0.5 * tol, depth + 1, max_depth, acc);
  adaptive_step(f, m, b, right, 0.5 * tol, depth + 1, max_depth, acc);
}

}  // namespace detail

/// Adaptive bisection with a 10-point Gauss rule; absolute tolerance.
inline AdaptiveResult integrate_adaptive(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    double tol = 1e-8, int max_depth = 12) {
  AdaptiveResult acc{{0.0, 0.0}, 0.0, true};
  if (a == b) return acc;
  auto g = f;
  const std::complex<double> whole = gauss_integrate<10>(g, a, b);
  detail::adaptive_step(g, a, b, whole, tol, 0, max_depth, acc);
  return acc;
}

/// Tensor Gauss rule on the rectangle [a1,b1] x [a2,b2].
template <int N, typename F>
auto gauss_integrate_rect(F&& f, double a1, double b1, double a2, double b2) {
  const auto& r = gauss_rule<N>();
  const double c1 = 0.5 * (a1 + b1), h1 = 0.5 * (b1 - a1);
  const double c2 = 0.5 * (a2 + b2), h2 = 0.5 * (b2 - a2);
  decltype(f(c1, c2)) s{};
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      s += r.weights[i] * r.weights[j] *
           f(c1 + h1 * r.nodes[i], c2 + h2 * r.nodes[j]);
    }
  }
  return s * (h1 * h2);
}

/// Integral over the triangle (p, a, b) of a function that may be singular at
/// the vertex p. Collapsed-coordinate map x = p + u (a - p) + u v (b - a)
/// followed by u = t^4, which smooths logarithmic singularities at p.
template <int N, typename F>
auto duffy_triangle(F&& f, std::array<double, 2> p, std::array<double, 2> a,
                    std::array<double, 2> b) {
  const auto& r = gauss_rule<N>();
  const double e1x = a[0] - p[0], e1y = a[1] - p[1];
  const double e2x = b[0] - a[0], e2y = b[1] - a[1];
  const double jac = std::abs(e1x * e2y - e1y * e2x);
  decltype(f(p[0], p[1])) s{};
  for (int i = 0; i < N; ++i) {
    const double t = 0.5 * (1.0 + r.nodes[i]);
    const double t2 = t * t;
    const double u = t2 * t2;
    for (int j = 0; j < N; ++j) {
      const double v = 0.5 * (1.0 + r.nodes[j]);
      const double x = p[0] + u * e1x + u * v * e2x;
      const double y = p[1] + u * e1y + u * v * e2y;
      // dx dy = jac u du dv, du = 4 t^3 dt
      s += r.weights[i] * r.weights[j] * (4.0 * t2 * t * u) * f(x, y);
    }
  }
  return s * (0.25 * jac);
}

/// Integral over [a1,b1] x [a2,b2] of a function singular at the point p,
/// which may lie inside, on the boundary of, or outside the rectangle. The
/// rectangle is fanned into triangles from p.
template <int N, typename F>
auto integrate_rect_singular(F&& f, double a1, double b1, double a2, double b2,
                             std::array<double, 2> p) {
  const std::array<std::array<double, 2>, 4> c{
      {{a1, a2}, {b1, a2}, {b1, b2}, {a1, b2}}};
  decltype(f(p[0], p[1])) s{};
  for (int e = 0; e < 4; ++e) {
    const auto& q0 = c[e];
    const auto& q1 = c[(e + 1) % 4];
    // signed area decides orientation; for p outside the rectangle the fan
    // still covers it exactly with signed contributions
    const double area = (q0[0] - p[0]) * (q1[1] - p[1]) - (q0[1] - p[1]) * (q1[0] - p[0]);
    if (std::abs(area) < 1e-300) continue;
    const auto v = duffy_triangle<N>(f, p, q0, q1);
    s += (area > 0 ? 1.0 : -1.0) * v;
  }
  return s;
}

}  // namespace ductpml
