#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "ness/errors.hpp"
#include "ness/parallel.hpp"

namespace ness {

inline double normal_cdf(double x, double variance = 1.0) {
  require(variance >= 0.0, "normal_cdf: variance must be non-negative");
  if (variance == 0.0) return x < 0.0 ? 0.0 : 1.0;
  return 0.5 * std::erfc(-x / std::sqrt(2.0 * variance));
}

/// Sample summary; the standard errors assume independent samples.
struct SampleMoments {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;       // unbiased
  double mean_se = 0.0;
  double variance_se = 0.0;    // from the fourth central moment
};

inline SampleMoments sample_moments(std::span<const double> xs) {
  require(xs.size() >= 2, "sample_moments: need at least two samples");
  SampleMoments m;
  m.count = xs.size();
  const double n = static_cast<double>(xs.size());
  m.mean = pairwise_sum(xs) / n;
  std::vector<double> d2(xs.size());
  std::vector<double> d4(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - m.mean;
    d2[i] = d * d;
    d4[i] = d2[i] * d2[i];
  }
  const double m2 = pairwise_sum(d2) / n;
  const double m4 = pairwise_sum(d4) / n;
  m.variance = m2 * n / (n - 1.0);
  m.mean_se = std::sqrt(m.variance / n);
  m.variance_se = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
  return m;
}

/// sup_x |F_n(x) - cdf(x)|, evaluated on both sides of every jump of F_n.
///
/// cdf is taken to be continuous. Ties are grouped, so a sample of one repeated
/// value against its own point-mass CDF (cdf(x) = 1 for x >= v) gives 1: the left
/// limit of the step cdf is not visible to a continuous-CDF statistic.
inline double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
  require(samples.size() >= 2, "ks_statistic: need at least two samples");
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < xs.size()) {
    std::size_t j = i;
    while (j < xs.size() && xs[j] == xs[i]) ++j;
    const double f = cdf(xs[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(j) / n - f});
    i = j;
  }
  return d;
}

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares of log value on log N.
inline SlopeFit fit_log_slope(std::span<const std::pair<double, double>> points) {
  require(points.size() >= 3, "fit_log_slope: need at least three points");
  std::vector<double> lx;
  std::vector<double> ly;
  for (const auto& [n, v] : points) {
    require(n > 0.0, "fit_log_slope: abscissae must be positive");
    require(v > 0.0, "fit_log_slope: values must be positive");
    lx.push_back(std::log(n));
    ly.push_back(std::log(v));
  }
  const double k = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  require(sxx > 0.0, "fit_log_slope: abscissae must not all coincide");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  // A flat line is fitted perfectly.
  const double scale = std::max(1.0, std::abs(my));
  fit.r_squared = syy <= 1e-28 * scale * scale * k ? 1.0 : std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
  if (syy <= 1e-28 * scale * scale * k) fit.slope = 0.0;
  return fit;
}

}  // namespace ness
