#pragma once

// The steady state as a mixture of geometric product measures whose
// parameters are uniform order statistics on [theta_L, theta_R].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ness/errors.hpp"
#include "ness/local_function.hpp"
#include "ness/random.hpp"

namespace ness {

/// Reservoir parameters. theta_left == theta_right is the equilibrium case.
class BoundaryParams {
 public:
  BoundaryParams(double theta_left, double theta_right) : left_(theta_left), right_(theta_right) {
    require(std::isfinite(left_) && std::isfinite(right_), "boundary parameters must be finite");
    require(left_ >= 0.0, "boundary parameters: theta_L must be non-negative");
    require(right_ >= left_, "boundary parameters: theta_R must not be below theta_L");
  }

  double left() const noexcept { return left_; }
  double right() const noexcept { return right_; }
  double width() const noexcept { return right_ - left_; }
  bool is_equilibrium() const noexcept { return left_ == right_; }

  /// Linear density profile rho(x) = theta_L + (theta_R - theta_L) x on [0, 1].
  double density(double x) const noexcept { return left_ + (right_ - left_) * x; }

  friend bool operator==(const BoundaryParams&, const BoundaryParams&) = default;

 private:
  double left_;
  double right_;
};

/// Sorted realization (Theta_{1,N}, ..., Theta_{N,N}). Indexing is 0-based.
class ParameterProfile {
 public:
  ParameterProfile(std::vector<double> values, BoundaryParams bounds)
      : values_(std::move(values)), bounds_(bounds) {
    require(!values_.empty(), "parameter profile: N must be at least 1");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      require(values_[i] >= bounds_.left() && values_[i] <= bounds_.right(),
              "parameter profile: entry outside [theta_L, theta_R]");
      require(i == 0 || values_[i - 1] <= values_[i], "parameter profile: entries must be non-decreasing");
    }
  }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  const BoundaryParams& bounds() const noexcept { return bounds_; }

 private:
  std::vector<double> values_;
  BoundaryParams bounds_;
};

/// One steady-state sample: occupations eta_1..eta_N, stored 0-based.
struct Configuration {
  std::vector<Occupation> occupations;

  std::size_t size() const noexcept { return occupations.size(); }
  Occupation operator[](std::size_t i) const noexcept { return occupations[i]; }
  std::span<const Occupation> view() const noexcept { return occupations; }
};

namespace detail {

inline void check_theta(double theta) {
  if (!(theta >= 0.0) || !std::isfinite(theta)) {
    throw DomainError("geometric law: theta must be finite and non-negative, got " + std::to_string(theta));
  }
}

}  // namespace detail

/// nu_theta(n) = (1/(1+theta)) (theta/(1+theta))^n; mean theta.
inline double geometric_pmf(double theta, Occupation n) {
  detail::check_theta(theta);
  if (theta == 0.0) return n == 0 ? 1.0 : 0.0;
  return (1.0 / (1.0 + theta)) * std::pow(theta / (1.0 + theta), static_cast<double>(n));
}

/// P(eta >= n) = (theta/(1+theta))^n.
inline double geometric_survival(double theta, Occupation n) {
  detail::check_theta(theta);
  if (theta == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(-static_cast<double>(n) * std::log1p(1.0 / theta));
}

/// Inverse-CDF draw from nu_theta using one uniform u in (0, 1).
inline Occupation geometric_from_uniform(double theta, double u) noexcept {
  if (theta <= 0.0) return 0;
  const double log_ratio = -std::log1p(1.0 / theta);  // log(theta / (1 + theta)) < 0
  const double n = std::floor(std::log(u) / log_ratio);
  if (!(n < 1.8e19)) return std::numeric_limits<Occupation>::max();
  return static_cast<Occupation>(n);
}

/// Sorted affine images of N standard uniforms.
inline ParameterProfile sample_parameter_profile(std::size_t n, const BoundaryParams& bounds, RandomSeed seed) {
  require(n >= 1, "sample_parameter_profile: N must be at least 1");
  RandomStream rng(seed);
  std::vector<double> u(n);
  for (auto& x : u) x = rng.uniform();
  std::sort(u.begin(), u.end());
  const double w = bounds.width();
  for (auto& x : u) x = std::min(bounds.right(), bounds.left() + w * x);
  return ParameterProfile(std::move(u), bounds);
}

/// Independent geometric occupations with the given site parameters.
inline Configuration sample_configuration(const ParameterProfile& profile, RandomSeed seed) {
  RandomStream rng(seed);
  Configuration eta;
  eta.occupations.resize(profile.size());
  for (std::size_t i = 0; i < profile.size(); ++i) {
    eta.occupations[i] = geometric_from_uniform(profile[i], rng.uniform());
  }
  return eta;
}

struct NessSample {
  ParameterProfile profile;
  Configuration configuration;
};

/// One draw from the steady state mu_N: profile from seed.child(0), occupations from seed.child(1).
inline NessSample sample_ness(std::size_t n, const BoundaryParams& bounds, RandomSeed seed) {
  auto profile = sample_parameter_profile(n, bounds, seed.child(0));
  auto eta = sample_configuration(profile, seed.child(1));
  return {std::move(profile), std::move(eta)};
}

}  // namespace ness
