#pragma once

// Fields of local functions evaluated on a configuration:
//   X_N(g; phi) = (1/N) sum_{i=0}^{N-k} (tau_i g)[eta] phi(i / (N+1)).

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ness/core_model.hpp"
#include "ness/errors.hpp"
#include "ness/local_function.hpp"

namespace ness {

enum class Smoothness { continuous, lipschitz, smooth };

/// Test function phi on [0, 1].
class TestFunction {
 public:
  TestFunction(std::string name, std::function<double(double)> f, Smoothness smoothness = Smoothness::smooth)
      : name_(std::move(name)), f_(std::move(f)), smoothness_(smoothness) {
    require(static_cast<bool>(f_), "test function: evaluator is empty");
  }

  static TestFunction constant(double c) {
    return TestFunction("constant", [c](double) { return c; });
  }

  /// x^p
  static TestFunction power(unsigned p) {
    return TestFunction("power", [p](double x) { return std::pow(x, static_cast<double>(p)); });
  }

  /// cos(2 pi m x)
  static TestFunction cosine(unsigned m) {
    return TestFunction("cosine", [m](double x) { return std::cos(2.0 * 3.14159265358979323846 * m * x); });
  }

  double operator()(double x) const { return f_(x); }
  const std::string& name() const noexcept { return name_; }
  Smoothness smoothness() const noexcept { return smoothness_; }

 private:
  std::string name_;
  std::function<double(double)> f_;
  Smoothness smoothness_;
};

/// Point masses (i/(N+1), (tau_i g)[eta] / N), i = 0..N-k.
struct EmpiricalProfile {
  struct Atom {
    double location;
    double weight;
  };
  std::vector<Atom> atoms;

  /// Integral of phi against the profile; same summation order as field_value.
  double pair(const TestFunction& phi) const {
    double total = 0.0;
    for (const auto& a : atoms) total += a.weight * phi(a.location);
    return total;
  }
};

/// (tau_i g)[eta] = g(eta_{i+1}, ..., eta_{i+k}); i is the 0-based shift.
inline double shift_apply(const LocalFunction& g, std::size_t i, const Configuration& eta) {
  require(i + g.k() <= eta.size(), "shift_apply: window exceeds the configuration");
  return g(eta.view().subspan(i, g.k()));
}

inline double field_value(const LocalFunction& g, const TestFunction& phi, const Configuration& eta) {
  require(eta.size() >= g.k(), "field_value: configuration shorter than the dependence set");
  const std::size_t n = eta.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double step = 1.0 / static_cast<double>(n + 1);
  double total = 0.0;
  for (std::size_t i = 0; i + g.k() <= n; ++i) {
    const double weight = g(eta.view().subspan(i, g.k())) * inv_n;
    total += weight * phi(static_cast<double>(i) * step);
  }
  return total;
}

inline EmpiricalProfile empirical_profile(const LocalFunction& g, const Configuration& eta) {
  require(eta.size() >= g.k(), "empirical_profile: configuration shorter than the dependence set");
  const std::size_t n = eta.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double step = 1.0 / static_cast<double>(n + 1);
  EmpiricalProfile out;
  out.atoms.reserve(n - g.k() + 1);
  for (std::size_t i = 0; i + g.k() <= n; ++i) {
    out.atoms.push_back({static_cast<double>(i) * step, g(eta.view().subspan(i, g.k())) * inv_n});
  }
  return out;
}

/// Mean occupation over the sites j with |j - i| <= floor(eps N); i is 1-based.
inline double block_average(const Configuration& eta, std::size_t i, double eps) {
  require(eps > 0.0 && eps < 1.0, "block_average: eps must lie in (0, 1)");
  const std::size_t n = eta.size();
  const auto half = static_cast<std::size_t>(std::floor(eps * static_cast<double>(n)));
  require(i >= 1 && i > half && i + half <= n, "block_average: window exits the chain 1..N");
  double total = 0.0;
  for (std::size_t j = i - half; j <= i + half; ++j) total += static_cast<double>(eta[j - 1]);
  return total / static_cast<double>(2 * half + 1);
}

/// (1/N) sum_i h(A_{i,N,eps}(eta)) phi(i/(N+1)) over all sites whose block fits in the chain.
inline double block_replacement_sum(const Configuration& eta, const std::function<double(double)>& h,
                                    const TestFunction& phi, double eps) {
  require(eps > 0.0 && eps < 0.5, "block_replacement_sum: eps must lie in (0, 1/2)");
  const std::size_t n = eta.size();
  const auto half = static_cast<std::size_t>(std::floor(eps * static_cast<double>(n)));
  require(n > 2 * half, "block_replacement_sum: chain too short for the block size");

  // Sliding window sum.
  double window = 0.0;
  for (std::size_t j = 1; j <= 2 * half + 1; ++j) window += static_cast<double>(eta[j - 1]);
  const double size = static_cast<double>(2 * half + 1);
  double total = 0.0;
  for (std::size_t i = half + 1; i + half <= n; ++i) {
    if (i > half + 1) {
      window += static_cast<double>(eta[i + half - 1]);
      window -= static_cast<double>(eta[i - half - 2]);
    }
    total += h(window / size) * phi(static_cast<double>(i) / static_cast<double>(n + 1));
  }
  return total / static_cast<double>(n);
}

}  // namespace ness
