#pragma once

// Deterministic limits of the field theorems: h, h', V, the LLN integral,
// the CLT variances sigma_T^2 and sigma_E^2, and the Brownian-bridge kernel.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "ness/core_model.hpp"
#include "ness/errors.hpp"
#include "ness/fields.hpp"
#include "ness/local_function.hpp"
#include "ness/quadrature.hpp"

namespace ness {

struct CltVariances {
  double sigma_t_sq = 0.0;  // parameter (Brownian bridge) part
  double sigma_e_sq = 0.0;  // local-equilibrium white-noise part

  double total() const noexcept { return sigma_t_sq + sigma_e_sq; }
};

struct Derivative {
  double value = 0.0;
  bool one_sided = false;
};

inline constexpr std::size_t kMaxHWindow = 4;
inline constexpr std::size_t kMaxVWindow = 3;

namespace detail {

inline std::vector<double> pmf_table(double theta, std::size_t m) {
  std::vector<double> p(m + 1);
  for (std::size_t n = 0; n <= m; ++n) p[n] = geometric_pmf(theta, n);
  return p;
}

/// sum over n in {0..M}^k of weight(n) * f(n), with product weights from `pmf`.
template <class F>
double product_sum(std::size_t k, const std::vector<double>& pmf, F&& f) {
  const std::size_t m = pmf.size() - 1;
  std::vector<Occupation> n(k, 0);
  double total = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t j = 0; j < k; ++j) w *= pmf[n[j]];
    if (w != 0.0) total += w * f(std::span<const Occupation>(n));
    std::size_t j = 0;
    while (j < k && n[j] == m) n[j++] = 0;
    if (j == k) break;
    ++n[j];
  }
  return total;
}

inline double h_truncated(const LocalFunction& g, double rho, std::size_t m) {
  const auto pmf = pmf_table(rho, m);
  return product_sum(g.k(), pmf, [&](std::span<const Occupation> n) { return g(n); });
}

}  // namespace detail

/// h(rho) = E[g(eta_1..eta_k)] under the homogeneous product nu_rho.
inline double h_of(const LocalFunction& g, double rho, const QuadratureSpec& quad) {
  detail::check_theta(rho);
  require(g.k() <= kMaxHWindow, "h_of: dependence sets larger than 4 sites are not supported");
  const std::size_t m = resolve_truncation(quad, g.growth(), g.k(), rho);
  return detail::h_truncated(g, rho, m);
}

/// d/dt h(t) at t = rho by central differences with one Richardson step.
inline Derivative h_prime(const LocalFunction& g, double rho, const QuadratureSpec& quad) {
  detail::check_theta(rho);
  require(g.k() <= kMaxHWindow, "h_prime: dependence sets larger than 4 sites are not supported");
  const double delta = std::max(1e-5, 1e-5 * rho);
  // One cutoff for every stencil point keeps the truncated h smooth in rho.
  const std::size_t m = resolve_truncation(quad, g.growth(), g.k(), rho + 2.0 * delta);
  auto h = [&](double t) { return detail::h_truncated(g, t, m); };

  if (rho - delta < 0.0) {
    const double h0 = h(rho);
    const double d1 = (h(rho + delta) - h0) / delta;
    const double d2 = (h(rho + 0.5 * delta) - h0) / (0.5 * delta);
    return {2.0 * d2 - d1, true};
  }
  const double d1 = (h(rho + delta) - h(rho - delta)) / (2.0 * delta);
  const double d2 = (h(rho + 0.5 * delta) - h(rho - 0.5 * delta)) / delta;
  return {(4.0 * d2 - d1) / 3.0, false};
}

/// V(rho) = sum_{m=1}^{2k-1} cov(g(eta_k..eta_{2k-1}), g(eta_m..eta_{m+k-1})) under nu_rho.
inline double v_of(const LocalFunction& g, double rho, const QuadratureSpec& quad) {
  detail::check_theta(rho);
  const std::size_t k = g.k();
  require(k <= kMaxVWindow, "v_of: dependence sets larger than 3 sites are not supported");
  const Growth squared{g.growth().constant * g.growth().constant, 2 * g.growth().site_degree};
  const std::size_t m = resolve_truncation(quad, squared, 2 * k - 1, rho);
  const auto pmf = detail::pmf_table(rho, m);

  const double mean = detail::product_sum(k, pmf, [&](std::span<const Occupation> n) { return g(n); });

  double total = 0.0;
  std::vector<Occupation> a(k);
  std::vector<Occupation> b(k);
  for (std::size_t lag_index = 1; lag_index <= 2 * k - 1; ++lag_index) {
    // Window B starts `shift` sites after window A (negative: before).
    const auto shift = static_cast<long>(lag_index) - static_cast<long>(k);
    const std::size_t gap = static_cast<std::size_t>(std::labs(shift));
    const std::size_t overlap = k - gap;

    // Condition on the shared sites; the remaining sites of A and B are independent.
    const double cross = detail::product_sum(overlap, pmf, [&](std::span<const Occupation> shared) {
      if (gap == 0) {
        const double v = g(shared);
        return v * v;
      }
      // The earlier window holds the shared block at its end, the later one at its start.
      const double earlier = detail::product_sum(gap, pmf, [&](std::span<const Occupation> free_sites) {
        for (std::size_t j = 0; j < k; ++j) a[j] = j < gap ? free_sites[j] : shared[j - gap];
        return g(a);
      });
      const double later = detail::product_sum(gap, pmf, [&](std::span<const Occupation> free_sites) {
        for (std::size_t j = 0; j < k; ++j) b[j] = j < overlap ? shared[j] : free_sites[j - overlap];
        return g(b);
      });
      return earlier * later;
    });
    total += cross - mean * mean;
  }
  return total;
}

/// rho-profile limit int_0^1 h(rho(x)) phi(x) dx.
inline double lln_limit(const LocalFunction& g, const TestFunction& phi, const BoundaryParams& bounds,
                        const QuadratureSpec& quad) {
  if (bounds.is_equilibrium()) {
    const double hc = h_of(g, bounds.left(), quad);
    return hc * integrate_checked([&](double x) { return phi(x); }, quad, "lln_limit");
  }
  return integrate_checked([&](double x) { return h_of(g, bounds.density(x), quad) * phi(x); }, quad,
                           "lln_limit");
}

/// Covariance of (theta_R - theta_L) times a Brownian bridge: w^2 (s ^ t - s t).
inline double bridge_covariance(double s, double t, const BoundaryParams& bounds) {
  require(s >= 0.0 && s <= 1.0 && t >= 0.0 && t <= 1.0, "bridge_covariance: s and t must lie in [0, 1]");
  const double w = bounds.width();
  return w * w * (std::min(s, t) - s * t);
}

namespace detail {

/// int_0^1 int_0^1 (s ^ t - s t) a(s) a(t) ds dt with panels split along s = t.
template <class A>
double bridge_double_integral(A&& a, std::size_t panels, const GaussLegendre& rule) {
  const std::size_t q = rule.nodes.size();
  const double h = 1.0 / static_cast<double>(panels);
  std::vector<double> x(panels * q);
  std::vector<double> w(panels * q);
  std::vector<double> ax(panels * q);
  for (std::size_t p = 0; p < panels; ++p) {
    for (std::size_t j = 0; j < q; ++j) {
      const std::size_t idx = p * q + j;
      x[idx] = h * (static_cast<double>(p) + 0.5 * (rule.nodes[j] + 1.0));
      w[idx] = 0.5 * h * rule.weights[j];
      ax[idx] = a(x[idx]);
    }
  }
  auto kernel = [](double s, double t) { return std::min(s, t) - s * t; };

  double total = 0.0;
  // Off-diagonal panel pairs: the kernel is smooth there.
  for (std::size_t p1 = 0; p1 < panels; ++p1) {
    for (std::size_t p2 = 0; p2 < panels; ++p2) {
      if (p1 == p2) continue;
      double block = 0.0;
      for (std::size_t i = p1 * q; i < (p1 + 1) * q; ++i)
        for (std::size_t j = p2 * q; j < (p2 + 1) * q; ++j) block += w[i] * w[j] * kernel(x[i], x[j]) * ax[i] * ax[j];
      total += block;
    }
  }
  // Diagonal panels: twice the lower triangle s < t, by a conical product rule.
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = h * static_cast<double>(p);
    double block = 0.0;
    for (std::size_t i = p * q; i < (p + 1) * q; ++i) {
      const double t = x[i];
      const double inner_h = t - lo;
      double inner = 0.0;
      for (std::size_t j = 0; j < q; ++j) {
        const double s = lo + 0.5 * inner_h * (rule.nodes[j] + 1.0);
        inner += 0.5 * inner_h * rule.weights[j] * (s - s * t) * a(s);
      }
      block += w[i] * ax[i] * inner;
    }
    total += 2.0 * block;
  }
  return total;
}

}  // namespace detail

/// sigma_T^2 and sigma_E^2 of the fluctuation field of g tested against phi.
inline CltVariances clt_variances(const LocalFunction& g, const TestFunction& phi, const BoundaryParams& bounds,
                                  const QuadratureSpec& quad) {
  CltVariances out;
  const GaussLegendre rule(quad.nodes_per_panel);

  if (!bounds.is_equilibrium()) {
    auto a = [&](double x) { return phi(x) * h_prime(g, bounds.density(x), quad).value; };
    const double w2 = bounds.width() * bounds.width();
    const double coarse = w2 * detail::bridge_double_integral(a, quad.panels, rule);
    const double fine = w2 * detail::bridge_double_integral(a, 2 * quad.panels, rule);
    if (!std::isfinite(fine) ||
        std::abs(fine - coarse) > quad.convergence_tolerance * std::max(1.0, std::abs(fine))) {
      throw QuadratureError("clt_variances: sigma_T^2 did not converge under panel doubling");
    }
    out.sigma_t_sq = std::max(0.0, fine);
  }

  out.sigma_e_sq = integrate_checked(
      [&](double x) {
        const double p = phi(x);
        return v_of(g, bounds.density(x), quad) * p * p;
      },
      quad, "clt_variances: sigma_E^2");
  return out;
}

}  // namespace ness
