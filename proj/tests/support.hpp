#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <catch_amalgamated.hpp>

#include "ness/stats.hpp"

namespace ness::testing {

/// |estimate - target| <= k * se, with a readable failure message.
inline void check_within_se(double estimate, double target, double se, double k, const std::string& what) {
  INFO(what << ": estimate " << estimate << ", target " << target << ", se " << se << ", z "
            << (se > 0 ? (estimate - target) / se : 0.0));
  CHECK(std::abs(estimate - target) <= k * se);
}

inline void check_mean_within_se(const std::vector<double>& xs, double target, double k, const std::string& what) {
  const auto m = sample_moments(xs);
  check_within_se(m.mean, target, m.mean_se, k, what);
}

}  // namespace ness::testing
