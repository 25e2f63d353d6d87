#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "ness/core_model.hpp"
#include "ness/errors.hpp"

namespace ness {

/// Composite quadrature and state-space truncation settings.
struct QuadratureSpec {
  std::size_t panels = 16;
  std::size_t nodes_per_panel = 8;
  /// Cutoff M for sums over occupations; 0 chooses the smallest certified M.
  std::size_t truncation = 0;
  double tail_tolerance = 1e-12;
  /// Allowed change of an integral when the panel count is doubled (relative, floor 1).
  double convergence_tolerance = 1e-8;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(std::size_t n) {
    require(n >= 1, "Gauss-Legendre: need at least one node");
    nodes.resize(n);
    weights.resize(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
      double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0;
        double p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
          p0 = p1;
          p1 = p2;
        }
        if (n == 1) {
          p1 = x;
          p0 = 1.0;
        }
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      if (n == 1) {
        nodes[0] = 0.0;
        weights[0] = 2.0;
        return;
      }
      nodes[i] = -x;
      nodes[n - 1 - i] = x;
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      weights[i] = w;
      weights[n - 1 - i] = w;
    }
  }
};

/// Composite Gauss-Legendre rule on [a, b].
template <class F>
double integrate(F&& f, double a, double b, std::size_t panels, const GaussLegendre& rule) {
  const double h = (b - a) / static_cast<double>(panels);
  double total = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + h * static_cast<double>(p);
    double panel = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      panel += rule.weights[q] * f(lo + 0.5 * h * (rule.nodes[q] + 1.0));
    }
    total += 0.5 * h * panel;
  }
  return total;
}

/// Integral on [0, 1] with the configured panel count, checked against twice as many panels.
template <class F>
double integrate_checked(F&& f, const QuadratureSpec& spec, const std::string& what) {
  const GaussLegendre rule(spec.nodes_per_panel);
  const double coarse = integrate(f, 0.0, 1.0, spec.panels, rule);
  const double fine = integrate(f, 0.0, 1.0, 2 * spec.panels, rule);
  if (!std::isfinite(fine) || std::abs(fine - coarse) > spec.convergence_tolerance * std::max(1.0, std::abs(fine))) {
    throw QuadratureError(what + ": panel doubling changed the integral by " + std::to_string(fine - coarse));
  }
  return fine;
}

inline constexpr std::size_t kMaxStateTruncation = 200000;

/// Smallest M with sum_{n > M} (1+n)^degree nu_theta(n) <= tolerance.
inline std::size_t certified_truncation(double theta, unsigned degree, double tolerance) {
  detail::check_theta(theta);
  require(tolerance > 0.0, "truncation tolerance must be positive");
  if (theta == 0.0) return 0;
  const double log_ratio = -std::log1p(1.0 / theta);
  const double log_norm = -std::log1p(theta);
  auto term = [&](std::size_t n) {
    return std::exp(static_cast<double>(degree) * std::log1p(static_cast<double>(n)) +
                    static_cast<double>(n) * log_ratio + log_norm);
  };
  // Walk past the mode, then until terms are negligible against the tolerance.
  std::size_t last = 1;
  while (true) {
    if (last > kMaxStateTruncation) {
      throw QuadratureError("state truncation above " + std::to_string(kMaxStateTruncation) +
                            " needed for theta=" + std::to_string(theta));
    }
    const double ratio = std::exp(static_cast<double>(degree) * std::log1p(1.0 / (1.0 + last)) + log_ratio);
    if (ratio < 1.0 && term(last) < 1e-6 * tolerance * (1.0 - ratio)) break;
    last = last * 2;
  }
  // Suffix sums from the far end; the geometric remainder beyond `last` is below 1e-6 * tolerance.
  double tail = 1e-6 * tolerance;
  std::size_t m = last;
  while (m > 0) {
    const double next = tail + term(m);
    if (next > tolerance) break;
    tail = next;
    --m;
  }
  return m;
}

/// Truncation for a k-fold sum of a function with the given growth envelope.
///
/// With |g| <= C prod (1+n_j)^d the omitted mass is bounded by
/// C k E[(1+eta)^d]^{k-1} tail_d(M); the per-site tolerance is scaled accordingly.
inline std::size_t truncation_for(const Growth& growth, std::size_t k, double theta_max, double tolerance) {
  double moment = 1.0;
  if (growth.site_degree > 0) {
    // E[(1+eta)^d] <= (1 + theta)^d d!, a crude but safe bound for geometric marginals.
    double fact = 1.0;
    for (unsigned j = 2; j <= growth.site_degree; ++j) fact *= j;
    moment = std::pow(1.0 + theta_max, static_cast<double>(growth.site_degree)) * fact;
  }
  const double scale = std::max(1.0, growth.constant) * static_cast<double>(k) *
                       std::pow(moment, static_cast<double>(k > 0 ? k - 1 : 0));
  return certified_truncation(theta_max, growth.site_degree, tolerance / scale);
}

/// Resolves the state cutoff: either the user's explicit M (verified) or the certified one.
inline std::size_t resolve_truncation(const QuadratureSpec& spec, const Growth& growth, std::size_t k,
                                      double theta_max) {
  const std::size_t needed = truncation_for(growth, k, theta_max, spec.tail_tolerance);
  if (spec.truncation == 0) return needed;
  if (spec.truncation < needed) {
    throw QuadratureError("truncation M=" + std::to_string(spec.truncation) + " cannot reach tail tolerance " +
                          std::to_string(spec.tail_tolerance) + " at theta=" + std::to_string(theta_max) +
                          " (needs M>=" + std::to_string(needed) + ")");
  }
  return spec.truncation;
}

}  // namespace ness
