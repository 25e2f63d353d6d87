#pragma once

// Large deviations for bounded local functions: homogeneous free energies,
// their Legendre transforms, the path functional J, and the two variational
// problems over non-decreasing parameter profiles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ness/chebyshev.hpp"
#include "ness/core_model.hpp"
#include "ness/errors.hpp"
#include "ness/fields.hpp"
#include "ness/local_function.hpp"
#include "ness/parallel.hpp"
#include "ness/quadrature.hpp"
#include "ness/random.hpp"

namespace ness {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct FreeEnergySpec {
  LocalFunction g;
  double lambda_min = -40.0;
  double lambda_max = 40.0;
  /// Per-site state cutoff; 0 certifies one from the tail tolerance.
  std::size_t truncation = 0;
  double tail_tolerance = 1e-12;
  double eigen_tolerance = 1e-12;
  std::size_t max_iterations = 100000;

  explicit FreeEnergySpec(LocalFunction fn) : g(std::move(fn)) {
    require(g.is_bounded(), "free energy: g must be bounded");
  }
};

inline constexpr std::size_t kMaxTransferWindow = 3;
inline constexpr std::size_t kMaxTransferEntries = 20000000;

namespace detail {

inline std::size_t ldp_truncation(const FreeEnergySpec& spec, double theta, double lambda) {
  const double b = spec.g.bound();
  // Relative accuracy of the partition sum degrades by up to e^{2 |lambda| B}.
  const double tol = std::max(1e-300, spec.tail_tolerance * std::exp(-2.0 * std::abs(lambda) * b));
  QuadratureSpec q;
  q.truncation = spec.truncation;
  q.tail_tolerance = tol;
  return resolve_truncation(q, Growth{1.0, 0}, spec.g.k(), theta);
}

inline std::size_t ipow(std::size_t base, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t j = 0; j < e; ++j) r *= base;
  return r;
}

/// Entries nu(n_k) e^{lambda g(n_1..n_k) - |lambda| B}, n_1 most significant.
inline std::vector<double> transfer_entries(const FreeEnergySpec& spec, double theta, double lambda,
                                            std::size_t m) {
  const std::size_t k = spec.g.k();
  const std::size_t base = m + 1;
  const std::size_t total = ipow(base, k);
  if (total > kMaxTransferEntries) {
    throw QuadratureError("transfer kernel: " + std::to_string(total) + " entries exceed the supported size");
  }
  const double offset = std::abs(lambda) * spec.g.bound();
  std::vector<double> pmf(base);
  for (std::size_t n = 0; n < base; ++n) pmf[n] = geometric_pmf(theta, n);
  const double mass = pairwise_sum(pmf);
  for (double& p : pmf) p /= mass;
  std::vector<double> kernel(total);
  std::vector<Occupation> w(k, 0);
  for (std::size_t t = 0; t < total; ++t) {
    std::size_t rest = t;
    for (std::size_t j = k; j-- > 0;) {
      w[j] = rest % base;
      rest /= base;
    }
    kernel[t] = pmf[w[k - 1]] * std::exp(lambda * spec.g(w) - offset);
  }
  return kernel;
}

/// (K v)(n_1..n_{k-1}) = sum_{n_k} K(n_1..n_k) v(n_2..n_k)
inline void transfer_apply(const std::vector<double>& kernel, std::size_t base, std::size_t states,
                           const std::vector<double>& v, std::vector<double>& out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t t = 0; t < kernel.size(); ++t) out[t / base] += kernel[t] * v[t % states];
}

}  // namespace detail

/// F(theta, lambda; g) = log sum_n e^{lambda g(n)} nu_theta(n) for one-site g.
inline double free_energy_k1(double theta, double lambda, const FreeEnergySpec& spec) {
  require(spec.g.k() == 1, "free_energy_k1: g must depend on one site");
  detail::check_theta(theta);
  if (lambda == 0.0) return 0.0;
  const std::size_t m = detail::ldp_truncation(spec, theta, lambda);
  const double offset = std::abs(lambda) * spec.g.bound();
  // Truncated marginal renormalized, so constant g is exact.
  double total = 0.0;
  double mass = 0.0;
  Occupation n = 0;
  for (std::size_t j = 0; j <= m; ++j, ++n) {
    const double p = geometric_pmf(theta, n);
    mass += p;
    total += p * std::exp(lambda * spec.g(std::span<const Occupation>(&n, 1)) - offset);
  }
  return std::log(total / mass) + offset;
}

inline double free_energy_k1(double theta, double lambda, const LocalFunction& g) {
  return free_energy_k1(theta, lambda, FreeEnergySpec(g));
}

/// Tilted mean dF/dlambda for one-site g.
inline double free_energy_k1_slope(double theta, double lambda, const FreeEnergySpec& spec) {
  require(spec.g.k() == 1, "free_energy_k1: g must depend on one site");
  detail::check_theta(theta);
  const std::size_t m = detail::ldp_truncation(spec, theta, lambda);
  const double offset = std::abs(lambda) * spec.g.bound();
  double z = 0.0;
  double zg = 0.0;
  Occupation n = 0;
  for (std::size_t j = 0; j <= m; ++j, ++n) {
    const double gv = spec.g(std::span<const Occupation>(&n, 1));
    const double w = geometric_pmf(theta, n) * std::exp(lambda * gv - offset);
    z += w;
    zg += w * gv;
  }
  return zg / z;
}

/// log of the Perron eigenvalue of the truncated transfer kernel.
inline double free_energy_transfer(double theta, double lambda, const FreeEnergySpec& spec) {
  detail::check_theta(theta);
  const std::size_t k = spec.g.k();
  require(k <= kMaxTransferWindow, "free_energy_transfer: windows above 3 sites are not supported");
  if (lambda == 0.0) return 0.0;
  const std::size_t m = detail::ldp_truncation(spec, theta, lambda);
  const std::size_t base = m + 1;
  const std::size_t states = detail::ipow(base, k - 1);
  const auto kernel = detail::transfer_entries(spec, theta, lambda, m);

  std::vector<double> v(states, 1.0 / static_cast<double>(states));
  std::vector<double> w(states);
  double eigen = 0.0;
  for (std::size_t it = 0; it < spec.max_iterations; ++it) {
    detail::transfer_apply(kernel, base, states, v, w);
    const double next = pairwise_sum(w);  // v sums to one
    if (!(next > 0.0)) throw NumericError("free_energy_transfer: kernel annihilated the iterate");
    for (std::size_t s = 0; s < states; ++s) v[s] = w[s] / next;
    if (it > 0 && std::abs(next - eigen) <= spec.eigen_tolerance * next) {
      return std::log(next) + std::abs(lambda) * spec.g.bound();
    }
    eigen = next;
  }
  throw NumericError("free_energy_transfer: power iteration did not converge within " +
                     std::to_string(spec.max_iterations) + " iterations");
}

/// Exact (1/N) log E[exp(lambda sum_{i=0}^{N-k} tau_i g)] under the truncated homogeneous product.
inline double free_energy_finite(double theta, double lambda, std::size_t n, const FreeEnergySpec& spec) {
  detail::check_theta(theta);
  const std::size_t k = spec.g.k();
  require(k <= kMaxTransferWindow, "free_energy_finite: windows above 3 sites are not supported");
  require(n >= k, "free_energy_finite: N must be at least k");
  const std::size_t m = detail::ldp_truncation(spec, theta, lambda);
  const std::size_t base = m + 1;
  const std::size_t states = detail::ipow(base, k - 1);
  const auto kernel = detail::transfer_entries(spec, theta, lambda, m);

  std::vector<double> v(states, 1.0);
  std::vector<double> w(states);
  double log_scale = 0.0;
  for (std::size_t step = 0; step + k <= n; ++step) {
    detail::transfer_apply(kernel, base, states, v, w);
    double mx = 0.0;
    for (double x : w) mx = std::max(mx, x);
    for (std::size_t s = 0; s < states; ++s) v[s] = w[s] / mx;
    log_scale += std::log(mx);
  }
  // Weight the first k-1 sites by their product law.
  double total = 0.0;
  for (std::size_t s = 0; s < states; ++s) {
    double p = 1.0;
    std::size_t rest = s;
    for (std::size_t j = 0; j + 1 < k; ++j) {
      p *= geometric_pmf(theta, rest % base);
      rest /= base;
    }
    total += p * v[s];
  }
  const double steps = static_cast<double>(n - k + 1);
  return (std::log(total) + log_scale + steps * std::abs(lambda) * spec.g.bound()) / static_cast<double>(n);
}

/// F(theta, lambda; g) for any supported window size.
inline double free_energy(double theta, double lambda, const FreeEnergySpec& spec) {
  return spec.g.k() == 1 ? free_energy_k1(theta, lambda, spec) : free_energy_transfer(theta, lambda, spec);
}

/// dF/dlambda: tilted mean for k = 1, central difference otherwise.
inline double free_energy_slope(double theta, double lambda, const FreeEnergySpec& spec) {
  if (spec.g.k() == 1) return free_energy_k1_slope(theta, lambda, spec);
  const double h = 1e-5 * std::max(1.0, std::abs(lambda));
  return (free_energy_transfer(theta, lambda + h, spec) - free_energy_transfer(theta, lambda - h, spec)) / (2.0 * h);
}

namespace detail {

/// Smallest and largest value of g over the truncated state space.
inline std::pair<double, double> truncated_range(const FreeEnergySpec& spec, double theta) {
  const std::size_t k = spec.g.k();
  const std::size_t m = theta == 0.0 ? 0 : std::min<std::size_t>(ldp_truncation(spec, theta, 0.0), 200);
  const std::size_t base = m + 1;
  std::vector<Occupation> w(k, 0);
  double lo = kInfinity;
  double hi = -kInfinity;
  for (std::size_t t = 0; t < ipow(base, k); ++t) {
    std::size_t rest = t;
    for (std::size_t j = k; j-- > 0;) {
      w[j] = rest % base;
      rest /= base;
    }
    const double v = spec.g(w);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

}  // namespace detail

/// I(theta, x; g) = sup_lambda (lambda x - F(theta, lambda; g)); +infinity outside the range of g.
///
/// Golden-section search on the concave objective narrows the bracket; bisection on
/// x - dF/dlambda then locates the maximizer. When the maximizer runs into the lambda
/// domain, the value at the domain edge is returned.
inline double rate_function_I(double theta, double x, const FreeEnergySpec& spec) {
  detail::check_theta(theta);
  const auto [lo, hi] = detail::truncated_range(spec, theta);
  if (x < lo || x > hi) return kInfinity;
  auto psi = [&](double lambda) { return lambda * x - free_energy(theta, lambda, spec); };
  auto dpsi = [&](double lambda) { return x - free_energy_slope(theta, lambda, spec); };

  // Bracket the maximizer by expanding away from 0 in the uphill direction.
  double a = 0.0;
  double b = 0.0;
  const double d0 = dpsi(0.0);
  if (d0 == 0.0) return 0.0;
  if (d0 > 0.0) {
    double step = 0.5;
    a = 0.0;
    b = std::min(step, spec.lambda_max);
    while (b < spec.lambda_max && dpsi(b) > 0.0) {
      a = b;
      step *= 2.0;
      b = std::min(b + step, spec.lambda_max);
    }
    if (dpsi(b) > 0.0) return psi(b);
  } else {
    double step = 0.5;
    b = 0.0;
    a = std::max(-step, spec.lambda_min);
    while (a > spec.lambda_min && dpsi(a) < 0.0) {
      b = a;
      step *= 2.0;
      a = std::max(a - step, spec.lambda_min);
    }
    if (dpsi(a) < 0.0) return psi(a);
  }

  // Golden-section on psi down to a modest bracket.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = psi(c);
  double fd = psi(d);
  while (b - a > 1e-4 * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = psi(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = psi(d);
    }
  }
  // Widen slightly so the root of dpsi stays inside, then bisect on the derivative.
  const double pad = b - a;
  a -= pad;
  b += pad;
  if (dpsi(a) < 0.0 || dpsi(b) > 0.0) {
    return std::max({psi(a), psi(b), 0.5 * (fc + fd)});
  }
  for (int it = 0; it < 200 && b - a > 1e-13 * std::max(1.0, std::abs(a)); ++it) {
    const double mid = 0.5 * (a + b);
    if (dpsi(mid) > 0.0) {
      a = mid;
    } else {
      b = mid;
    }
  }
  return std::max(0.0, psi(0.5 * (a + b)));
}

/// Non-decreasing profile on the grid j/M, stored as u_0 and increments d_j = u_{j+1} - u_j.
class MonotoneProfile {
 public:
  MonotoneProfile(BoundaryParams bounds, double u0, std::vector<double> increments)
      : bounds_(bounds), u0_(u0), increments_(std::move(increments)) {
    require(!bounds_.is_equilibrium(), "monotone profile: theta_L = theta_R leaves no profile space");
    require(!increments_.empty(), "monotone profile: need at least one grid cell");
    require(u0_ >= bounds_.left() - 1e-12 * std::max(1.0, bounds_.width()), "monotone profile: u_0 below theta_L");
    for (double d : increments_) require(d >= 0.0, "monotone profile: values must be non-decreasing");
  }

  /// u_j = theta_L + (theta_R - theta_L) j / M with identical increments.
  static MonotoneProfile linear(const BoundaryParams& bounds, std::size_t m) {
    require(m >= 1, "monotone profile: need at least one grid cell");
    return MonotoneProfile(bounds, bounds.left(), std::vector<double>(m, reference_increment(bounds, m)));
  }

  /// Profile from grid values u_0..u_M; u_M must equal theta_R.
  static MonotoneProfile from_values(const BoundaryParams& bounds, std::span<const double> values) {
    require(values.size() >= 2, "monotone profile: need at least two grid values");
    const double tol = 1e-9 * std::max(1.0, std::abs(bounds.right()));
    require(std::abs(values.back() - bounds.right()) <= tol, "monotone profile: u_M must equal theta_R");
    std::vector<double> d(values.size() - 1);
    for (std::size_t j = 0; j + 1 < values.size(); ++j) {
      require(values[j + 1] >= values[j], "monotone profile: values must be non-decreasing");
      d[j] = values[j + 1] - values[j];
    }
    return MonotoneProfile(bounds, values.front(), std::move(d));
  }

  static double reference_increment(const BoundaryParams& bounds, std::size_t m) {
    return bounds.width() / static_cast<double>(m);
  }

  const BoundaryParams& bounds() const noexcept { return bounds_; }
  std::size_t cells() const noexcept { return increments_.size(); }
  double start() const noexcept { return u0_; }
  const std::vector<double>& increments() const noexcept { return increments_; }

  std::vector<double> values() const {
    std::vector<double> u(increments_.size() + 1);
    u[0] = u0_;
    for (std::size_t j = 0; j < increments_.size(); ++j) u[j + 1] = u[j] + increments_[j];
    return u;
  }

  /// Piecewise-linear interpolation at x in [0, 1].
  double operator()(double x) const {
    const double m = static_cast<double>(cells());
    const double pos = std::clamp(x, 0.0, 1.0) * m;
    const auto cell = std::min(static_cast<std::size_t>(pos), cells() - 1);
    double u = u0_;
    for (std::size_t j = 0; j < cell; ++j) u += increments_[j];
    return u + (pos - static_cast<double>(cell)) * increments_[cell];
  }

 private:
  BoundaryParams bounds_;
  double u0_;
  std::vector<double> increments_;
};

inline double default_delta_min(const BoundaryParams& bounds) { return 1e-8 * bounds.width(); }

/// J(u) = -(1/M) sum_j log(M d_j / (theta_R - theta_L)); +infinity when some d_j < delta_min.
inline double path_rate_J(const MonotoneProfile& u, double delta_min) {
  const std::size_t m = u.cells();
  const double ref = MonotoneProfile::reference_increment(u.bounds(), m);
  std::vector<double> logs(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double d = u.increments()[j];
    if (d < delta_min || d <= 0.0) return kInfinity;
    logs[j] = std::log(d / ref);
  }
  return -pairwise_sum(logs) / static_cast<double>(m);
}

inline double path_rate_J(const MonotoneProfile& u) { return path_rate_J(u, default_delta_min(u.bounds())); }

/// int_0^1 F(u(x), phi(x); g) dx, Gauss-Legendre on every grid cell of u.
inline double inhom_free_energy(const MonotoneProfile& u, const TestFunction& phi, const FreeEnergySpec& spec,
                                const QuadratureSpec& quad) {
  const GaussLegendre rule(quad.nodes_per_panel);
  const std::size_t m = u.cells();
  const auto values = u.values();
  const double h = 1.0 / static_cast<double>(m);
  std::vector<double> cells(m);
  for (std::size_t c = 0; c < m; ++c) {
    double s = 0.0;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      const double tau = 0.5 * (rule.nodes[q] + 1.0);
      const double x = h * (static_cast<double>(c) + tau);
      const double lambda = phi(x);
      if (lambda == 0.0) continue;
      s += rule.weights[q] * free_energy(values[c] + tau * u.increments()[c], lambda, spec);
    }
    cells[c] = 0.5 * h * s;
  }
  return pairwise_sum(cells);
}

struct SolverConfig {
  std::size_t max_iterations = 5000;
  /// Initial step of the projected gradient ascent.
  double step_size = 1e-2;
  double shrink = 0.5;
  double tolerance = 1e-10;
  std::size_t multistart = 4;
  std::uint64_t seed = 20240601;
  std::size_t grid_cells = 200;
  std::size_t nodes_per_cell = 3;
  unsigned workers = 1;
};

struct LocalOptimum {
  double value = 0.0;
  std::size_t iterations = 0;
  double stationarity = 0.0;
  bool converged = false;
  double start_value = 0.0;
};

struct ProfileOptimum {
  double value = 0.0;
  MonotoneProfile argopt;
  std::vector<LocalOptimum> local_optima;
};

namespace detail {

/// Euclidean projection onto {z >= 0, sum z = total}.
inline void project_simplex(std::vector<double>& z, double total) {
  std::vector<double> s(z);
  std::sort(s.begin(), s.end(), std::greater<>());
  double cumulative = 0.0;
  double shift = 0.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    cumulative += s[j];
    const double candidate = (cumulative - total) / static_cast<double>(j + 1);
    if (s[j] - candidate > 0.0) shift = candidate;
  }
  for (auto& v : z) v = std::max(0.0, v - shift);
}

/// Maximizes sum_n W_n f_n(u(x_n)) - J(u) over monotone profiles.
///
/// Variables z = (u_0 - theta_L, d_0 - delta, ..., d_{M-1} - delta) live on a simplex.
/// Node functions are Chebyshev interpolants in theta, so gradients are analytic.
class ProfileProblem {
 public:
  ProfileProblem(const BoundaryParams& bounds, const SolverConfig& cfg, std::vector<const ChebyshevInterpolant*> f,
                 std::vector<double> node_weights, std::vector<double> node_tau)
      : bounds_(bounds),
        m_(cfg.grid_cells),
        q_(cfg.nodes_per_cell),
        delta_(default_delta_min(bounds)),
        f_(std::move(f)),
        weight_(std::move(node_weights)),
        tau_(std::move(node_tau)) {
    require(delta_ * static_cast<double>(m_) < bounds.width(), "profile solver: grid too fine for delta_min");
  }

  std::size_t dimension() const noexcept { return m_ + 1; }
  double total() const noexcept { return bounds_.width() - delta_ * static_cast<double>(m_); }

  MonotoneProfile profile(const std::vector<double>& z) const {
    std::vector<double> d(m_);
    for (std::size_t j = 0; j < m_; ++j) d[j] = z[j + 1] + delta_;
    return MonotoneProfile(bounds_, bounds_.left() + z[0], std::move(d));
  }

  std::vector<double> variables(const MonotoneProfile& u) const {
    std::vector<double> z(m_ + 1);
    z[0] = std::max(0.0, u.start() - bounds_.left());
    for (std::size_t j = 0; j < m_; ++j) z[j + 1] = std::max(0.0, u.increments()[j] - delta_);
    project_simplex(z, total());
    return z;
  }

  double value(const std::vector<double>& z) const { return evaluate(z, nullptr); }

  double value_and_gradient(const std::vector<double>& z, std::vector<double>& grad) const {
    return evaluate(z, &grad);
  }

 private:
  double evaluate(const std::vector<double>& z, std::vector<double>* grad) const {
    const double ref = MonotoneProfile::reference_increment(bounds_, m_);
    std::vector<double> terms(m_ * q_);
    std::vector<double> cell_sum(m_, 0.0);
    std::vector<double> cell_tau_sum(m_, 0.0);
    double u = bounds_.left() + z[0];
    for (std::size_t c = 0; c < m_; ++c) {
      const double d = z[c + 1] + delta_;
      for (std::size_t j = 0; j < q_; ++j) {
        const std::size_t n = c * q_ + j;
        const double un = std::min(bounds_.right(), u + tau_[j] * d);
        terms[n] = weight_[n] * (*f_[n])(un);
        if (grad) {
          const double gn = weight_[n] * f_[n]->derivative(un);
          cell_sum[c] += gn;
          cell_tau_sum[c] += tau_[j] * gn;
        }
      }
      u += d;
    }
    std::vector<double> logs(m_);
    for (std::size_t c = 0; c < m_; ++c) logs[c] = std::log((z[c + 1] + delta_) / ref);
    const double j_rate = -pairwise_sum(logs) / static_cast<double>(m_);

    if (grad) {
      grad->assign(m_ + 1, 0.0);
      // d/d(d_c): nodes in later cells move by 1, nodes in cell c by tau.
      double later = 0.0;
      for (std::size_t c = m_; c-- > 0;) {
        (*grad)[c + 1] = later + cell_tau_sum[c] + 1.0 / (static_cast<double>(m_) * (z[c + 1] + delta_));
        later += cell_sum[c];
      }
      (*grad)[0] = later;
    }
    return pairwise_sum(terms) - j_rate;
  }

  BoundaryParams bounds_;
  std::size_t m_;
  std::size_t q_;
  double delta_;
  std::vector<const ChebyshevInterpolant*> f_;
  std::vector<double> weight_;
  std::vector<double> tau_;
};

inline double stationarity(const std::vector<double>& z, const std::vector<double>& grad, double total) {
  std::vector<double> moved(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) moved[j] = z[j] + grad[j];
  project_simplex(moved, total);
  double s = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) s = std::max(s, std::abs(moved[j] - z[j]));
  return s;
}

/// Projected gradient ascent with Barzilai-Borwein steps and Armijo backtracking.
inline LocalOptimum ascend(const ProfileProblem& problem, std::vector<double>& z, const SolverConfig& cfg) {
  const double total = problem.total();
  project_simplex(z, total);
  std::vector<double> grad;
  double value = problem.value_and_gradient(z, grad);
  LocalOptimum out;
  out.start_value = value;
  double step = cfg.step_size;
  std::vector<double> trial(z.size());
  std::vector<double> trial_grad;
  std::size_t it = 0;
  for (; it < cfg.max_iterations; ++it) {
    out.stationarity = stationarity(z, grad, total);
    if (out.stationarity <= cfg.tolerance) {
      out.converged = true;
      break;
    }
    double alpha = step;
    double trial_value = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t j = 0; j < z.size(); ++j) trial[j] = z[j] + alpha * grad[j];
      project_simplex(trial, total);
      double ascent = 0.0;
      for (std::size_t j = 0; j < z.size(); ++j) ascent += grad[j] * (trial[j] - z[j]);
      trial_value = problem.value_and_gradient(trial, trial_grad);
      if (std::isfinite(trial_value) && trial_value >= value + 1e-4 * ascent) {
        accepted = true;
        break;
      }
      alpha *= cfg.shrink;
    }
    if (!accepted) break;
    // Barzilai-Borwein step for the next iteration.
    double ss = 0.0;
    double sy = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      const double s = trial[j] - z[j];
      ss += s * s;
      sy -= s * (trial_grad[j] - grad[j]);
    }
    step = sy > 0.0 ? std::clamp(ss / sy, 1e-12, 1e6) : cfg.step_size;
    const double change = std::abs(trial_value - value);
    z.swap(trial);
    grad.swap(trial_grad);
    value = trial_value;
    if (change <= 1e-15 * std::max(1.0, std::abs(value)) && ss == 0.0) break;
  }
  out.iterations = it;
  out.value = value;
  out.stationarity = stationarity(z, grad, total);
  out.converged = out.converged || out.stationarity <= std::sqrt(cfg.tolerance);
  return out;
}

/// Node abscissae tau in (0, 1) and weights of the per-cell Gauss rule.
inline std::pair<std::vector<double>, std::vector<double>> cell_rule(std::size_t q) {
  const GaussLegendre rule(q);
  std::vector<double> tau(q);
  std::vector<double> w(q);
  for (std::size_t j = 0; j < q; ++j) {
    tau[j] = 0.5 * (rule.nodes[j] + 1.0);
    w[j] = 0.5 * rule.weights[j];
  }
  return {tau, w};
}

/// Multistart driver shared by both variational problems. `node_function(x)` returns a key
/// and a callable theta -> f(theta) for the node at x; equal keys share one interpolant.
template <class NodeFunction>
ProfileOptimum solve_profile_problem(const BoundaryParams& bounds, const SolverConfig& cfg, NodeFunction&& node_function,
                                     double sign) {
  require(!bounds.is_equilibrium(), "profile solver: requires theta_L < theta_R");
  require(cfg.grid_cells >= 2 && cfg.nodes_per_cell >= 1 && cfg.multistart >= 1, "profile solver: invalid config");
  require(cfg.shrink > 0.0 && cfg.shrink < 1.0 && cfg.step_size > 0.0, "profile solver: invalid step settings");
  const auto [tau, w] = cell_rule(cfg.nodes_per_cell);
  const std::size_t m = cfg.grid_cells;
  const double h = 1.0 / static_cast<double>(m);

  std::map<double, std::size_t> key_index;
  std::vector<double> keys;
  std::vector<std::size_t> node_key(m * cfg.nodes_per_cell);
  std::vector<double> weights(m * cfg.nodes_per_cell);
  for (std::size_t c = 0; c < m; ++c) {
    for (std::size_t j = 0; j < cfg.nodes_per_cell; ++j) {
      const std::size_t n = c * cfg.nodes_per_cell + j;
      const double x = h * (static_cast<double>(c) + tau[j]);
      const double key = node_function.key(x);
      auto [it, inserted] = key_index.emplace(key, keys.size());
      if (inserted) keys.push_back(key);
      node_key[n] = it->second;
      weights[n] = h * w[j];
    }
  }
  auto interpolants = map_indexed(keys.size(), cfg.workers, [&](std::size_t i) {
    return ChebyshevInterpolant([&, key = keys[i]](double theta) { return sign * node_function.value(key, theta); },
                                bounds.left(), bounds.right());
  });
  std::vector<const ChebyshevInterpolant*> f(node_key.size());
  for (std::size_t n = 0; n < node_key.size(); ++n) f[n] = &interpolants[node_key[n]];
  const ProfileProblem problem(bounds, cfg, std::move(f), std::move(weights), tau);

  // Start 0 is the linear profile; the rest are seeded monotone sine perturbations.
  auto start = [&](std::size_t s) {
    if (s == 0) return problem.variables(MonotoneProfile::linear(bounds, m));
    RandomStream rng(RandomSeed{cfg.seed, 0}.child(s));
    const double amp = 0.9 * (2.0 * rng.uniform() - 1.0);
    const double freq = 1.0 + std::floor(3.0 * rng.uniform());
    const double lift = 0.2 * rng.uniform() * bounds.width();
    std::vector<double> u(m + 1);
    for (std::size_t j = 0; j <= m; ++j) {
      const double t = static_cast<double>(j) * h;
      const double shape = t + amp * std::sin(std::numbers::pi * freq * t) / (std::numbers::pi * freq);
      u[j] = bounds.left() + lift + (bounds.width() - lift) * shape;
    }
    u[m] = bounds.right();
    for (std::size_t j = 1; j <= m; ++j) u[j] = std::max(u[j], u[j - 1]);
    return problem.variables(MonotoneProfile::from_values(bounds, u));
  };

  struct Run {
    LocalOptimum opt;
    std::vector<double> z;
  };
  auto runs = map_indexed(cfg.multistart, cfg.workers, [&](std::size_t s) {
    Run r{{}, start(s)};
    r.opt = ascend(problem, r.z, cfg);
    return r;
  });

  std::size_t best = 0;
  bool any_progress = false;
  std::vector<LocalOptimum> optima;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    if (runs[s].opt.converged || runs[s].opt.iterations > 0) any_progress = true;
    if (runs[s].opt.value > runs[best].opt.value) best = s;
    LocalOptimum o = runs[s].opt;
    o.value *= sign;
    o.start_value *= sign;
    optima.push_back(o);
  }
  if (!any_progress) {
    std::string diag;
    for (std::size_t s = 0; s < runs.size(); ++s) {
      diag += "start " + std::to_string(s) + ": stationarity " + std::to_string(runs[s].opt.stationarity) + "; ";
    }
    throw OptimizationError("profile solver: no start made line-search progress", diag);
  }
  return {sign * runs[best].opt.value, problem.profile(runs[best].z), std::move(optima)};
}

}  // namespace detail

/// sup over monotone profiles of int F(u(x), phi(x); g) dx - J(u).
inline ProfileOptimum annealed_free_energy(const TestFunction& phi, const FreeEnergySpec& spec,
                                           const BoundaryParams& bounds, const SolverConfig& solver) {
  struct Node {
    const TestFunction& phi;
    const FreeEnergySpec& spec;
    double key(double x) const { return phi(x); }
    double value(double lambda, double theta) const { return free_energy(theta, lambda, spec); }
  };
  return detail::solve_profile_problem(bounds, solver, Node{phi, spec}, 1.0);
}

/// inf over monotone profiles of int I(u(x), mu(x); g) dx + J(u).
inline ProfileOptimum profile_rate(const TestFunction& mu_density, const FreeEnergySpec& spec,
                                   const BoundaryParams& bounds, const SolverConfig& solver) {
  struct Node {
    const TestFunction& mu;
    const FreeEnergySpec& spec;
    double key(double x) const { return mu(x); }
    double value(double target, double theta) const {
      const double v = rate_function_I(theta, target, spec);
      if (!std::isfinite(v)) {
        throw DomainError("profile_rate: target density " + std::to_string(target) +
                          " is outside the range of g at theta=" + std::to_string(theta));
      }
      return v;
    }
  };
  return detail::solve_profile_problem(bounds, solver, Node{mu_density, spec}, -1.0);
}

}  // namespace ness
