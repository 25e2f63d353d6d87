#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ness/errors.hpp"

namespace ness {

/// Number of particles at one site.
using Occupation = std::uint64_t;

/// c * n_1^{a_1} * ... * n_k^{a_k}
struct Monomial {
  double coefficient = 1.0;
  std::vector<unsigned> exponents;
};

/// Polynomial in the k occupations of a window.
class Polynomial {
 public:
  Polynomial(std::size_t k, std::vector<Monomial> terms) : k_(k), terms_(std::move(terms)) {
    require(k_ >= 1, "polynomial: window size must be positive");
    for (const auto& t : terms_) {
      require(t.exponents.size() == k_, "polynomial: every monomial needs exactly k exponents");
    }
  }

  std::size_t k() const noexcept { return k_; }
  const std::vector<Monomial>& terms() const noexcept { return terms_; }

  unsigned degree() const noexcept {
    unsigned d = 0;
    for (const auto& t : terms_) {
      unsigned s = 0;
      for (unsigned a : t.exponents) s += a;
      d = std::max(d, s);
    }
    return d;
  }

  unsigned max_site_exponent() const noexcept {
    unsigned d = 0;
    for (const auto& t : terms_)
      for (unsigned a : t.exponents) d = std::max(d, a);
    return d;
  }

  double abs_coefficient_sum() const noexcept {
    double s = 0.0;
    for (const auto& t : terms_) s += std::abs(t.coefficient);
    return s;
  }

  double operator()(std::span<const Occupation> window) const {
    double total = 0.0;
    for (const auto& t : terms_) {
      double v = t.coefficient;
      for (std::size_t j = 0; j < k_; ++j) {
        if (t.exponents[j] != 0) v *= std::pow(static_cast<double>(window[j]), static_cast<double>(t.exponents[j]));
      }
      total += v;
    }
    return total;
  }

 private:
  std::size_t k_;
  std::vector<Monomial> terms_;
};

/// Envelope |g(n)| <= constant * prod_j (1 + n_j)^site_degree, used to certify
/// truncations of sums against geometric marginals. site_degree == 0 means bounded.
struct Growth {
  double constant = 1.0;
  unsigned site_degree = 0;
};

/// A function of k consecutive occupations, shifted along the chain by tau_i.
class LocalFunction {
 public:
  using Evaluator = std::function<double(std::span<const Occupation>)>;

  static LocalFunction bounded(std::string name, std::size_t k, Evaluator f, double bound) {
    require(bound >= 0.0 && std::isfinite(bound), "local function: bound must be finite and non-negative");
    return LocalFunction(std::move(name), k, std::move(f), Growth{bound, 0}, true, std::nullopt);
  }

  static LocalFunction with_growth(std::string name, std::size_t k, Evaluator f, Growth growth) {
    return LocalFunction(std::move(name), k, std::move(f), growth, growth.site_degree == 0, std::nullopt);
  }

  static LocalFunction from_polynomial(std::string name, Polynomial p) {
    const std::size_t k = p.k();
    const Growth growth{p.abs_coefficient_sum(), p.max_site_exponent()};
    const bool is_bounded = growth.site_degree == 0;
    Evaluator f = [p](std::span<const Occupation> w) { return p(w); };
    return LocalFunction(std::move(name), k, std::move(f), growth, is_bounded, std::move(p));
  }

  /// eta_1
  static LocalFunction density() {
    return from_polynomial("density", Polynomial(1, {Monomial{1.0, {1}}}));
  }

  /// eta_1 * eta_2
  static LocalFunction pair_product() {
    return from_polynomial("pair-product", Polynomial(2, {Monomial{1.0, {1, 1}}}));
  }

  /// 1(eta_1 = 0)
  static LocalFunction indicator_vacuum() {
    return bounded("indicator-vacuum", 1, [](std::span<const Occupation> w) { return w[0] == 0 ? 1.0 : 0.0; }, 1.0);
  }

  /// 1(eta_1 = eta_2 = 0)
  static LocalFunction indicator_pair_vacuum() {
    return bounded(
        "indicator-pair-vacuum", 2,
        [](std::span<const Occupation> w) { return (w[0] == 0 && w[1] == 0) ? 1.0 : 0.0; }, 1.0);
  }

  static LocalFunction constant(double c) {
    return from_polynomial("constant", Polynomial(1, {Monomial{c, {0}}}));
  }

  const std::string& name() const noexcept { return name_; }
  std::size_t k() const noexcept { return k_; }
  bool is_bounded() const noexcept { return bounded_; }
  /// Sup-norm bound; meaningful only when is_bounded().
  double bound() const noexcept { return growth_.constant; }
  const Growth& growth() const noexcept { return growth_; }
  const std::optional<Polynomial>& polynomial() const noexcept { return polynomial_; }

  double operator()(std::span<const Occupation> window) const { return evaluator_(window.first(k_)); }

 private:
  LocalFunction(std::string name, std::size_t k, Evaluator f, Growth growth, bool is_bounded,
                std::optional<Polynomial> poly)
      : name_(std::move(name)),
        k_(k),
        evaluator_(std::move(f)),
        growth_(growth),
        bounded_(is_bounded),
        polynomial_(std::move(poly)) {
    require(k_ >= 1, "local function: dependence set size k must be positive");
    require(static_cast<bool>(evaluator_), "local function: evaluator is empty");
  }

  std::string name_;
  std::size_t k_;
  Evaluator evaluator_;
  Growth growth_;
  bool bounded_;
  std::optional<Polynomial> polynomial_;
};

}  // namespace ness
