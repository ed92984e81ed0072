#pragma once

// Complex tridiagonal systems: LU with partial pivoting (one extra upper
// diagonal of fill), solves with A and A^H, and a 1-norm condition estimate.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <type_traits>
#include <vector>

#include "ductpml/errors.hpp"

namespace ductpml {

template <typename T = std::complex<double>>
struct TridiagonalMatrix {
  std::vector<T> lower;  // size n-1, entry (i+1, i)
  std::vector<T> diag;   // size n
  std::vector<T> upper;  // size n-1, entry (i, i+1)

  TridiagonalMatrix() = default;
  explicit TridiagonalMatrix(std::size_t n)
      : lower(n > 0 ? n - 1 : 0), diag(n), upper(n > 0 ? n - 1 : 0) {}

  [[nodiscard]] std::size_t size() const noexcept { return diag.size(); }

  /// y = A x
  [[nodiscard]] std::vector<T> multiply(const std::vector<T>& x) const {
    const std::size_t n = size();
    std::vector<T> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      T s = diag[i] * x[i];
      if (i > 0) s += lower[i - 1] * x[i - 1];
      if (i + 1 < n) s += upper[i] * x[i + 1];
      y[i] = s;
    }
    return y;
  }

  [[nodiscard]] double norm1() const {
    const std::size_t n = size();
    double best = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double s = std::abs(diag[j]);
      if (j > 0) s += std::abs(upper[j - 1]);
      if (j + 1 < n) s += std::abs(lower[j]);
      best = std::max(best, s);
    }
    return best;
  }
};

/// Factorization P A = L U of a tridiagonal matrix.
template <typename T = std::complex<double>>
class TridiagonalLU {
 public:
  explicit TridiagonalLU(TridiagonalMatrix<T> a) : anorm_(a.norm1()) {
    const std::size_t n = a.size();
    if (n == 0) throw ContractError("empty tridiagonal system");
    dl_ = std::move(a.lower);
    d_ = std::move(a.diag);
    du_ = std::move(a.upper);
    du2_.assign(n > 2 ? n - 2 : 0, T{});
    swapped_.assign(n, false);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(d_[i]) >= std::abs(dl_[i])) {
        // no interchange
        if (d_[i] != T{}) {
          const T f = dl_[i] / d_[i];
          dl_[i] = f;
          d_[i + 1] -= f * du_[i];
        }
      } else {
        swapped_[i] = true;
        const T f = d_[i] / dl_[i];
        d_[i] = dl_[i];
        dl_[i] = f;
        const T tmp = du_[i];
        du_[i] = d_[i + 1];
        d_[i + 1] = tmp - f * d_[i + 1];
        if (i + 2 < n) {
          du2_[i] = du_[i + 1];
          du_[i + 1] = -f * du_[i + 1];
        }
      }
    }
    for (const auto& v : d_) {
      if (!(std::abs(v) > 1e-15 * anorm_)) {
        throw IllPosedError("singular tridiagonal factorization");
      }
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return d_.size(); }

  /// Solve A x = b.
  [[nodiscard]] std::vector<T> solve(std::vector<T> b) const {
    const std::size_t n = size();
    if (b.size() != n) throw ContractError("right-hand side size mismatch");
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (swapped_[i]) {
        const T tmp = b[i];
        b[i] = b[i + 1];
        b[i + 1] = tmp - dl_[i] * b[i];
      } else {
        b[i + 1] -= dl_[i] * b[i];
      }
    }
    b[n - 1] /= d_[n - 1];
    if (n > 1) b[n - 2] = (b[n - 2] - du_[n - 2] * b[n - 1]) / d_[n - 2];
    for (std::size_t ii = n > 2 ? n - 2 : 0; ii-- > 0;) {
      b[ii] = (b[ii] - du_[ii] * b[ii + 1] - du2_[ii] * b[ii + 2]) / d_[ii];
    }
    return b;
  }

  /// Solve A^H x = b.
  [[nodiscard]] std::vector<T> solve_adjoint(std::vector<T> b) const {
    const std::size_t n = size();
    if (b.size() != n) throw ContractError("right-hand side size mismatch");
    // U^H y = b
    b[0] /= conj_(d_[0]);
    if (n > 1) b[1] = (b[1] - conj_(du_[0]) * b[0]) / conj_(d_[1]);
    for (std::size_t i = 2; i < n; ++i) {
      b[i] = (b[i] - conj_(du_[i - 1]) * b[i - 1] - conj_(du2_[i - 2]) * b[i - 2]) /
             conj_(d_[i]);
    }
    // L^H P x = y
    for (std::size_t ii = n - 1; ii-- > 0;) {
      if (swapped_[ii]) {
        const T tmp = b[ii + 1];
        b[ii + 1] = b[ii] - conj_(dl_[ii]) * tmp;
        b[ii] = tmp;
      } else {
        b[ii] -= conj_(dl_[ii]) * b[ii + 1];
      }
    }
    return b;
  }

  /// 1-norm of A taken before factorization.
  [[nodiscard]] double norm1() const noexcept { return anorm_; }

  /// Estimate of ||A||_1 ||A^{-1}||_1 (Hager's method with Higham's
  /// refinements for complex data).
  [[nodiscard]] double condition_estimate() const {
    const std::size_t n = size();
    std::vector<T> x(n, T(1.0 / double(n)));
    double est = 0.0;
    std::size_t last_j = n;
    for (int iter = 0; iter < 5; ++iter) {
      auto y = solve(x);
      double ny = 0.0;
      for (const auto& v : y) ny += std::abs(v);
      if (iter > 0 && ny <= est) {
        est = std::max(est, ny);
        break;
      }
      est = ny;
      std::vector<T> s(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double a = std::abs(y[i]);
        s[i] = a > 0 ? y[i] / a : T(1);
      }
      auto z = solve_adjoint(s);
      std::size_t j = 0;
      double zmax = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(z[i]) > zmax) {
          zmax = std::abs(z[i]);
          j = i;
        }
      }
      if (j == last_j) break;
      last_j = j;
      std::fill(x.begin(), x.end(), T{});
      x[j] = T(1);
    }
    // alternating-sign probe guards against underestimation
    std::vector<T> alt(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double sign = (i % 2 == 0) ? 1.0 : -1.0;
      alt[i] = T(sign * (1.0 + double(i) / double(std::max<std::size_t>(n - 1, 1))));
    }
    const auto w = solve(alt);
    double nw = 0.0;
    for (const auto& v : w) nw += std::abs(v);
    est = std::max(est, 2.0 * nw / (3.0 * double(n)));
    return est * anorm_;
  }

 private:
  static T conj_(const T& v) {
    if constexpr (std::is_floating_point_v<T>) {
      return v;
    } else {
      return std::conj(v);
    }
  }

  std::vector<T> dl_, d_, du_, du2_;
  std::vector<bool> swapped_;
  double anorm_;
};

/// One-shot solve of A x = b.
template <typename T>
std::vector<T> solve_tridiagonal(TridiagonalMatrix<T> a, std::vector<T> b) {
  return TridiagonalLU<T>(std::move(a)).solve(std::move(b));
}

}  // namespace ductpml
