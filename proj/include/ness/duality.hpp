#pragma once

// Self-duality polynomials D_N(eta, xi) = prod_i C(eta_i, xi_i) 1(eta_i >= xi_i)
// and their exact steady-state expectations.

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "ness/core_model.hpp"
#include "ness/errors.hpp"
#include "ness/exact_moments.hpp"

namespace ness {

inline constexpr unsigned kMaxDualMass = 20;

/// Finitely many dual particles; sites are 1-based.
class DualConfiguration {
 public:
  DualConfiguration() = default;

  explicit DualConfiguration(std::map<std::size_t, unsigned> xi) : xi_(std::move(xi)) {
    for (auto it = xi_.begin(); it != xi_.end();) {
      require(it->first >= 1, "dual configuration: sites are numbered from 1");
      it = it->second == 0 ? xi_.erase(it) : std::next(it);
    }
    require(mass() <= kMaxDualMass, "dual configuration: total mass above 20 is not supported");
  }

  /// p_1 delta_{start} + ... + p_k delta_{start+k-1}
  static DualConfiguration window(std::size_t start, std::span<const unsigned> p) {
    std::map<std::size_t, unsigned> xi;
    for (std::size_t j = 0; j < p.size(); ++j) xi[start + j] += p[j];
    return DualConfiguration(std::move(xi));
  }

  const std::map<std::size_t, unsigned>& entries() const noexcept { return xi_; }

  unsigned mass() const noexcept {
    unsigned m = 0;
    for (const auto& [site, count] : xi_) m += count;
    return m;
  }

  std::size_t max_site() const noexcept { return xi_.empty() ? 0 : xi_.rbegin()->first; }

 private:
  std::map<std::size_t, unsigned> xi_;
};

namespace detail {

/// C(n, k) in 64 bits; NumericError on overflow.
inline std::uint64_t checked_binomial(std::uint64_t n, unsigned k) {
  if (k > n) return 0;
  std::uint64_t c = 1;
  for (unsigned j = 1; j <= k; ++j) {
    // c * (n - k + j) / j is exact at every step; do it in 128 bits.
    const unsigned __int128 wide = static_cast<unsigned __int128>(c) * (n - k + j) / j;
    if (wide > UINT64_MAX) throw NumericError("binomial coefficient overflows 64 bits");
    c = static_cast<std::uint64_t>(wide);
  }
  return c;
}

}  // namespace detail

inline double duality_poly(const Configuration& eta, const DualConfiguration& xi) {
  require(xi.max_site() <= eta.size(), "duality_poly: dual particle outside the chain");
  std::uint64_t product = 1;
  for (const auto& [site, count] : xi.entries()) {
    const std::uint64_t c = detail::checked_binomial(eta[site - 1], count);
    if (c == 0) return 0.0;
    if (__builtin_mul_overflow(product, c, &product)) {
      throw NumericError("duality polynomial overflows 64 bits");
    }
  }
  return static_cast<double>(product);
}

/// E[D_N(eta, xi)] = E[prod_i Theta_i^{xi_i}] under the steady state.
inline double duality_expectation_exact(const DualConfiguration& xi, std::size_t n, const BoundaryParams& bounds) {
  require(xi.max_site() <= n, "duality_expectation_exact: dual particle outside 1..N");
  std::vector<IndexedExponent> terms;
  for (const auto& [site, count] : xi.entries()) terms.push_back({site, count});
  return theta_sparse_moment(n, terms, bounds);
}

namespace detail {

/// floor(x N), snapped to the nearest integer when x N is within 1e-9 of it.
inline std::size_t lattice_site(double x, std::size_t n) {
  const double xn = x * static_cast<double>(n);
  const double nearest = std::round(xn);
  return static_cast<std::size_t>(std::abs(xn - nearest) < 1e-9 ? nearest : std::floor(xn));
}

}  // namespace detail

/// E[D_N(eta, sum_j p_j delta_{floor(xN)+j})] - rho(x)^{p_1 + ... + p_k}.
inline double le_deviation(double x, std::span<const unsigned> p, std::size_t n, const BoundaryParams& bounds) {
  require(x > 0.0 && x < 1.0, "le_deviation: x must lie in (0, 1)");
  require(!p.empty(), "le_deviation: p_vec must be non-empty");
  const std::size_t base = detail::lattice_site(x, n);
  require(base + p.size() <= n, "le_deviation: window floor(xN)+k exceeds N");
  unsigned total = 0;
  for (unsigned v : p) total += v;
  const auto xi = DualConfiguration::window(base + 1, p);
  return duality_expectation_exact(xi, n, bounds) - std::pow(bounds.density(x), static_cast<double>(total));
}

}  // namespace ness
