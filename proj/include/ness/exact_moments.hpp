#pragma once

// Closed-form moments of uniform order statistics and geometric marginals.
//
// E[U_{1:N}^{a_1} ... U_{N:N}^{a_N}] = N! prod_j 1/(S_j + j),  S_j = a_1 + ... + a_j.
//
// Between consecutive non-zero exponents S_j is constant and the run of
// factors telescopes to S terms, so the cost depends on the number and size
// of the exponents, not on N.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ness/core_model.hpp"
#include "ness/errors.hpp"
#include "ness/local_function.hpp"

namespace ness {

/// Exponent attached to a 1-based order-statistic index.
struct IndexedExponent {
  std::size_t index = 1;
  unsigned exponent = 0;
};

namespace detail {

// log prod_{j=a}^{b} j / (s + j)  =  log prod_{m=1}^{s} (a - 1 + m) / (b + m)
inline double log_constant_run(std::size_t a, std::size_t b, unsigned s) {
  if (a > b || s == 0) return 0.0;
  const double span_len = static_cast<double>(b - a + 1);
  double acc = 0.0;
  for (unsigned m = 1; m <= s; ++m) acc += std::log1p(-span_len / static_cast<double>(b + m));
  return acc;
}

inline std::vector<IndexedExponent> normalized(std::size_t n, std::span<const IndexedExponent> terms) {
  std::vector<IndexedExponent> out;
  out.reserve(terms.size());
  for (const auto& t : terms) {
    require(t.index >= 1 && t.index <= n, "order-statistic index out of range 1..N");
    if (t.exponent != 0) out.push_back(t);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  std::vector<IndexedExponent> merged;
  for (const auto& t : out) {
    if (!merged.empty() && merged.back().index == t.index) {
      merged.back().exponent += t.exponent;
    } else {
      merged.push_back(t);
    }
  }
  return merged;
}

}  // namespace detail

/// log E[prod U_{index}^{exponent}] for a sparse exponent vector.
inline double log_orderstat_product_moment(std::size_t n, std::span<const IndexedExponent> terms) {
  require(n >= 1, "order statistics: N must be at least 1");
  const auto sorted = detail::normalized(n, terms);
  unsigned s = 0;
  std::size_t prev = 0;
  double acc = 0.0;
  for (const auto& t : sorted) {
    acc += detail::log_constant_run(prev + 1, t.index - 1, s);
    s += t.exponent;
    acc -= std::log1p(static_cast<double>(s) / static_cast<double>(t.index));
    prev = t.index;
  }
  acc += detail::log_constant_run(prev + 1, n, s);
  return acc;
}

inline double orderstat_product_moment(std::size_t n, std::span<const IndexedExponent> terms) {
  return std::exp(log_orderstat_product_moment(n, terms));
}

/// E[U_{1:N}^{a_1} ... U_{N:N}^{a_N}] for a dense exponent vector of length N.
inline double uniform_orderstat_product_moment(std::size_t n, std::span<const unsigned> exponents) {
  require(exponents.size() == n, "uniform_orderstat_product_moment: exponent vector length must equal N");
  std::vector<IndexedExponent> sparse;
  for (std::size_t j = 0; j < n; ++j) {
    if (exponents[j] != 0) sparse.push_back({j + 1, exponents[j]});
  }
  return orderstat_product_moment(n, sparse);
}

/// Same moment through the Gamma-function form Gamma(N+1) prod Gamma(S_j+j)/Gamma(S_j+j+1).
inline double uniform_orderstat_product_moment_gamma(std::size_t n, std::span<const unsigned> exponents) {
  require(exponents.size() == n, "uniform_orderstat_product_moment: exponent vector length must equal N");
  double acc = std::lgamma(static_cast<double>(n) + 1.0);
  double s = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    s += exponents[j - 1];
    const double x = s + static_cast<double>(j);
    acc += std::lgamma(x) - std::lgamma(x + 1.0);
  }
  return std::exp(acc);
}

using Rational = boost::multiprecision::cpp_rational;

/// Exact rational N! prod_j 1/(S_j + j); intended for N <= 64.
inline Rational uniform_orderstat_product_moment_exact(std::size_t n, std::span<const unsigned> exponents) {
  require(exponents.size() == n, "uniform_orderstat_product_moment: exponent vector length must equal N");
  require(n <= 64, "exact rational order-statistic moments are limited to N <= 64");
  Rational r(1);
  unsigned long long s = 0;
  for (std::size_t j = 1; j <= n; ++j) {
    s += exponents[j - 1];
    r *= Rational(static_cast<long long>(j), static_cast<long long>(s + j));
  }
  return r;
}

/// E[U_{r:N}^k] = r (r+1) ... (r+k-1) / ((N+1) ... (N+k)).
inline double uniform_orderstat_moment(std::size_t r, std::size_t n, unsigned k) {
  require(r >= 1 && r <= n, "order-statistic index out of range 1..N");
  double m = 1.0;
  for (unsigned l = 1; l <= k; ++l) m *= static_cast<double>(r + l - 1) / static_cast<double>(n + l);
  return m;
}

namespace detail {

inline double binomial(unsigned n, unsigned k) {
  double c = 1.0;
  for (unsigned j = 1; j <= k; ++j) c = c * static_cast<double>(n - k + j) / static_cast<double>(j);
  return std::round(c);
}

}  // namespace detail

/// E[Theta_{i,N}^p] by binomial expansion over standard uniform moments.
inline double theta_moment(std::size_t i, std::size_t n, unsigned p, const BoundaryParams& bounds) {
  require(i >= 1 && i <= n, "theta_moment: index out of range 1..N");
  const double left = bounds.left();
  const double width = bounds.width();
  double total = 0.0;
  double u_moment = 1.0;
  for (unsigned l = 0; l <= p; ++l) {
    if (l > 0) u_moment *= static_cast<double>(i + l - 1) / static_cast<double>(n + l);
    total += detail::binomial(p, l) * std::pow(left, static_cast<double>(p - l)) *
             std::pow(width, static_cast<double>(l)) * u_moment;
  }
  return total;
}

/// E[prod Theta_{index}^{exponent}] over an arbitrary set of sites.
inline double theta_sparse_moment(std::size_t n, std::span<const IndexedExponent> terms,
                                  const BoundaryParams& bounds) {
  const auto sites = detail::normalized(n, terms);
  if (sites.empty()) return 1.0;
  const double left = bounds.left();
  const double width = bounds.width();

  std::vector<unsigned> level(sites.size(), 0);
  std::vector<IndexedExponent> u_terms(sites.size());
  double total = 0.0;
  while (true) {
    double coeff = 1.0;
    for (std::size_t j = 0; j < sites.size(); ++j) {
      const unsigned p = sites[j].exponent;
      const unsigned l = level[j];
      coeff *= detail::binomial(p, l) * std::pow(left, static_cast<double>(p - l)) *
               std::pow(width, static_cast<double>(l));
      u_terms[j] = {sites[j].index, l};
    }
    if (coeff != 0.0) total += coeff * orderstat_product_moment(n, u_terms);

    std::size_t j = 0;
    while (j < sites.size() && level[j] == sites[j].exponent) level[j++] = 0;
    if (j == sites.size()) break;
    ++level[j];
  }
  return total;
}

/// E[Theta_start^{e_1} ... Theta_{start+k-1}^{e_k}] (start is 1-based).
inline double theta_product_moment(std::size_t start, std::span<const unsigned> exponents, std::size_t n,
                                   const BoundaryParams& bounds) {
  require(start >= 1 && !exponents.empty() && start + exponents.size() - 1 <= n,
          "theta_product_moment: window out of range");
  std::vector<IndexedExponent> terms;
  for (std::size_t j = 0; j < exponents.size(); ++j) terms.push_back({start + j, exponents[j]});
  return theta_sparse_moment(n, terms, bounds);
}

/// E[C(eta, k)] under nu_theta equals theta^k.
inline double geometric_binom_moment(double theta, unsigned k) {
  detail::check_theta(theta);
  return std::pow(theta, static_cast<double>(k));
}

inline constexpr unsigned kMaxStirlingOrder = 20;

/// Stirling numbers of the second kind S(p, j), 0 <= j <= p <= 20.
inline double stirling2(unsigned p, unsigned j) {
  static const auto table = [] {
    std::array<std::array<double, kMaxStirlingOrder + 1>, kMaxStirlingOrder + 1> t{};
    t[0][0] = 1.0;
    for (unsigned n = 1; n <= kMaxStirlingOrder; ++n)
      for (unsigned k = 1; k <= n; ++k) t[n][k] = static_cast<double>(k) * t[n - 1][k] + t[n - 1][k - 1];
    return t;
  }();
  require(p <= kMaxStirlingOrder, "Stirling numbers are tabulated only up to order 20");
  if (j > p) return 0.0;
  return table[p][j];
}

/// Coefficients c_j with E[eta^p | theta] = sum_j c_j theta^j (c_j = S(p,j) j!).
inline std::vector<double> geometric_moment_polynomial(unsigned p) {
  require(p <= kMaxStirlingOrder, "geometric_raw_moment: order above 20 is not supported");
  std::vector<double> c(p + 1, 0.0);
  double factorial = 1.0;
  for (unsigned j = 0; j <= p; ++j) {
    if (j > 0) factorial *= j;
    c[j] = stirling2(p, j) * factorial;
  }
  return c;
}

/// E[eta^p] under nu_theta.
inline double geometric_raw_moment(double theta, unsigned p) {
  detail::check_theta(theta);
  const auto c = geometric_moment_polynomial(p);
  double total = 0.0;
  for (unsigned j = 0; j <= p; ++j) total += c[j] * std::pow(theta, static_cast<double>(j));
  return total;
}

inline constexpr unsigned kMaxCenteringDegree = 6;
inline constexpr std::size_t kMaxCenteringWindow = 3;

/// Exact steady-state mean E[(tau_{start-1} g)[eta]] for polynomial g.
///
/// Conditionally on Theta each site contributes E[eta^a | Theta] = sum_l S(a,l) l! Theta^l,
/// so the mean is a combination of theta_sparse_moment terms.
inline double mixture_polynomial_mean(const Polynomial& g, std::size_t start, std::size_t n,
                                      const BoundaryParams& bounds) {
  require(g.k() <= kMaxCenteringWindow, "exact centering: window size above 3 is not supported");
  require(g.degree() <= kMaxCenteringDegree, "exact centering: polynomial degree above 6 is not supported");
  require(start >= 1 && start + g.k() - 1 <= n, "exact centering: window out of range");

  double total = 0.0;
  std::vector<IndexedExponent> terms(g.k());
  for (const auto& mono : g.terms()) {
    std::vector<std::vector<double>> site_coeffs(g.k());
    for (std::size_t j = 0; j < g.k(); ++j) site_coeffs[j] = geometric_moment_polynomial(mono.exponents[j]);

    std::vector<unsigned> level(g.k(), 0);
    while (true) {
      double coeff = mono.coefficient;
      for (std::size_t j = 0; j < g.k(); ++j) {
        coeff *= site_coeffs[j][level[j]];
        terms[j] = {start + j, level[j]};
      }
      if (coeff != 0.0) total += coeff * theta_sparse_moment(n, terms, bounds);

      std::size_t j = 0;
      while (j < g.k() && level[j] == mono.exponents[j]) level[j++] = 0;
      if (j == g.k()) break;
      ++level[j];
    }
  }
  return total;
}

}  // namespace ness
