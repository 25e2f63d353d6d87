#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "ness/errors.hpp"

namespace ness {

/// Chebyshev interpolant on [a, b], refined by doubling until the trailing
/// coefficients are negligible.
class ChebyshevInterpolant {
 public:
  template <class F>
  ChebyshevInterpolant(F&& f, double a, double b, double tolerance = 1e-13, std::size_t max_degree = 512)
      : a_(a), b_(b) {
    require(b > a, "Chebyshev interpolant: empty interval");
    for (std::size_t n = 16;; n *= 2) {
      fit(f, n);
      double scale = 0.0;
      for (double c : coeffs_) scale = std::max(scale, std::abs(c));
      double tail = 0.0;
      for (std::size_t k = n - 4; k < n; ++k) tail = std::max(tail, std::abs(coeffs_[k]));
      if (!std::isfinite(scale)) throw NumericError("Chebyshev interpolant: non-finite samples");
      if (tail <= tolerance * std::max(1.0, scale)) break;
      if (2 * n > max_degree) throw NumericError("Chebyshev interpolant: no convergence up to degree 512");
    }
    derivative_.assign(coeffs_.size(), 0.0);
    const std::size_t n = coeffs_.size();
    // c'_{k-1} = c'_{k+1} + 2 k c_k
    for (std::size_t k = n - 1; k >= 1; --k) {
      const double next = k + 1 < n ? derivative_[k + 1] : 0.0;
      derivative_[k - 1] = next + 2.0 * static_cast<double>(k) * coeffs_[k];
    }
    derivative_[0] *= 0.5;
    const double jac = 2.0 / (b_ - a_);
    for (auto& c : derivative_) c *= jac;
  }

  double operator()(double x) const { return clenshaw(coeffs_, x); }
  double derivative(double x) const { return clenshaw(derivative_, x); }
  std::size_t size() const noexcept { return coeffs_.size(); }

 private:
  template <class F>
  void fit(F& f, std::size_t n) {
    std::vector<double> values(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double t = std::cos(std::numbers::pi * (static_cast<double>(j) + 0.5) / static_cast<double>(n));
      values[j] = f(0.5 * (a_ + b_) + 0.5 * (b_ - a_) * t);
    }
    coeffs_.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        s += values[j] * std::cos(std::numbers::pi * static_cast<double>(k) * (static_cast<double>(j) + 0.5) /
                                  static_cast<double>(n));
      }
      coeffs_[k] = 2.0 * s / static_cast<double>(n);
    }
    coeffs_[0] *= 0.5;
  }

  double clenshaw(const std::vector<double>& c, double x) const {
    const double t = (2.0 * x - a_ - b_) / (b_ - a_);
    double b1 = 0.0;
    double b2 = 0.0;
    for (std::size_t k = c.size(); k-- > 1;) {
      const double b0 = 2.0 * t * b1 - b2 + c[k];
      b2 = b1;
      b1 = b0;
    }
    return t * b1 - b2 + c[0];
  }

  double a_;
  double b_;
  std::vector<double> coeffs_;
  std::vector<double> derivative_;
};

}  // namespace ness
