#pragma once

// Monte Carlo experiments for the limit theorems, with verdicts stated in
// estimated standard errors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ness/asymptotics.hpp"
#include "ness/core_model.hpp"
#include "ness/duality.hpp"
#include "ness/errors.hpp"
#include "ness/exact_moments.hpp"
#include "ness/fields.hpp"
#include "ness/local_function.hpp"
#include "ness/parallel.hpp"
#include "ness/quadrature.hpp"
#include "ness/random.hpp"
#include "ness/stats.hpp"

namespace ness {

struct Verdict {
  std::string name;
  bool passed = false;
  double statistic = 0.0;
  double standard_error = 0.0;
  double threshold = 0.0;
  std::string note;
};

inline bool all_passed(const std::vector<Verdict>& vs) {
  return std::all_of(vs.begin(), vs.end(), [](const Verdict& v) { return v.passed; });
}

struct ExperimentConfig {
  std::vector<std::size_t> n_ladder;
  std::size_t replicas = 100;
  BoundaryParams bounds{0.0, 2.0};
  LocalFunction g = LocalFunction::density();
  TestFunction phi = TestFunction::constant(1.0);
  RandomSeed seed{};
  unsigned workers = 1;
  QuadratureSpec quad{};

  void validate(std::size_t min_replicas) const {
    require(!n_ladder.empty(), "experiment: N-ladder must not be empty");
    for (std::size_t j = 0; j < n_ladder.size(); ++j) {
      require(n_ladder[j] >= g.k(), "experiment: every N must be at least the window size k");
      require(j == 0 || n_ladder[j] > n_ladder[j - 1], "experiment: N-ladder must be strictly increasing");
    }
    require(replicas >= min_replicas,
            "experiment: at least " + std::to_string(min_replicas) + " replicas are required, got " +
                std::to_string(replicas));
  }
};

inline constexpr unsigned kMaxLlnDegree = 6;

// ---------------------------------------------------------------- LLN

struct LlnRow {
  std::size_t n = 0;
  double mean_abs_deviation = 0.0;
  double standard_error = 0.0;
  double clt_band = 0.0;  // 5 sqrt(sigma_T^2 + sigma_E^2) / sqrt(N)
};

struct LlnResult {
  double limit = 0.0;
  CltVariances variances;
  std::vector<LlnRow> rows;
  std::vector<Verdict> verdicts;
};

inline LlnResult run_lln(const ExperimentConfig& cfg) {
  cfg.validate(2);
  require(cfg.g.is_bounded() || (cfg.g.polynomial() && cfg.g.polynomial()->degree() <= kMaxLlnDegree),
          "run_lln: g must be bounded or a polynomial of degree at most 6");
  LlnResult out;
  out.limit = lln_limit(cfg.g, cfg.phi, cfg.bounds, cfg.quad);
  out.variances = clt_variances(cfg.g, cfg.phi, cfg.bounds, cfg.quad);
  const double sigma = std::sqrt(out.variances.total());

  for (std::size_t a = 0; a < cfg.n_ladder.size(); ++a) {
    const std::size_t n = cfg.n_ladder[a];
    const auto dev = map_indexed(cfg.replicas, cfg.workers, [&](std::size_t r) {
      const auto sample = sample_ness(n, cfg.bounds, cfg.seed.child(a).child(r));
      return std::abs(field_value(cfg.g, cfg.phi, sample.configuration) - out.limit);
    });
    const auto m = sample_moments(dev);
    out.rows.push_back({n, m.mean, m.mean_se, 5.0 * sigma / std::sqrt(static_cast<double>(n))});
  }

  bool decreasing = true;
  for (std::size_t a = 1; a < out.rows.size(); ++a) {
    decreasing = decreasing && out.rows[a].mean_abs_deviation < out.rows[a - 1].mean_abs_deviation;
  }
  const auto& last = out.rows.back();
  out.verdicts.push_back({"deviation decreases along the ladder", decreasing, last.mean_abs_deviation,
                          last.standard_error, 0.0, "mean |X_N - limit| per ladder point"});
  out.verdicts.push_back({"final deviation below the CLT band", last.mean_abs_deviation < last.clt_band,
                          last.mean_abs_deviation, last.standard_error, last.clt_band,
                          "band = 5 sqrt(sigma_T^2 + sigma_E^2) / sqrt(N)"});
  return out;
}

// ---------------------------------------------------------------- CLT

/// E[X_N(g; phi)] from exact mixture moments (polynomial g only).
inline double exact_field_mean(const LocalFunction& g, const TestFunction& phi, std::size_t n,
                               const BoundaryParams& bounds) {
  require(g.polynomial().has_value(), "exact centering: g must be a polynomial");
  std::vector<double> terms;
  terms.reserve(n);
  const double step = 1.0 / static_cast<double>(n + 1);
  for (std::size_t i = 0; i + g.k() <= n; ++i) {
    terms.push_back(mixture_polynomial_mean(*g.polynomial(), i + 1, n, bounds) * phi(static_cast<double>(i) * step));
  }
  return pairwise_sum(terms) / static_cast<double>(n);
}

inline constexpr std::size_t kMinDistributionalReplicas = 2000;

struct CltResult {
  std::size_t n = 0;
  double centering = 0.0;
  CltVariances variances;
  std::vector<double> samples;  // sqrt(N) (X_N - centering)
  SampleMoments moments;
  double ks = 0.0;
  double ks_threshold = 0.0;
  std::vector<Verdict> verdicts;
};

inline CltResult run_clt(const ExperimentConfig& cfg) {
  cfg.validate(kMinDistributionalReplicas);
  CltResult out;
  out.n = cfg.n_ladder.back();
  out.centering = exact_field_mean(cfg.g, cfg.phi, out.n, cfg.bounds);
  out.variances = clt_variances(cfg.g, cfg.phi, cfg.bounds, cfg.quad);
  const double root_n = std::sqrt(static_cast<double>(out.n));
  out.samples = map_indexed(cfg.replicas, cfg.workers, [&](std::size_t r) {
    const auto sample = sample_ness(out.n, cfg.bounds, cfg.seed.child(out.n).child(r));
    return root_n * (field_value(cfg.g, cfg.phi, sample.configuration) - out.centering);
  });
  out.moments = sample_moments(out.samples);
  const double var = out.variances.total();
  out.ks = ks_statistic(out.samples, [var](double x) { return normal_cdf(x, var); });
  // 1% critical value of the KS distribution with the finite-N slack factor.
  out.ks_threshold = 1.4 * 1.628 / std::sqrt(static_cast<double>(cfg.replicas));

  out.verdicts.push_back({"KS distance to Normal(0, sigma_T^2 + sigma_E^2)", out.ks < out.ks_threshold, out.ks,
                          0.0, out.ks_threshold, "threshold 1.4 x 1.628 / sqrt(R)"});
  const double var_z = (out.moments.variance - var) / out.moments.variance_se;
  out.verdicts.push_back({"sample variance matches sigma_T^2 + sigma_E^2", std::abs(var_z) < 5.0,
                          out.moments.variance - var, out.moments.variance_se, 5.0, "threshold in standard errors"});
  const double mean_z = out.moments.mean / out.moments.mean_se;
  out.verdicts.push_back({"exact centering agrees with the Monte Carlo mean", std::abs(mean_z) < 5.0,
                          out.moments.mean, out.moments.mean_se, 5.0, "threshold in standard errors"});
  return out;
}

// ---------------------------------------------------------------- bridge

struct BridgeEntry {
  double s = 0.0;
  double t = 0.0;
  double empirical = 0.0;
  double standard_error = 0.0;
  double analytic = 0.0;
  double finite_n = 0.0;  // exact N Cov(Theta_i, Theta_j)
};

struct BridgeResult {
  std::size_t n = 0;
  std::vector<BridgeEntry> entries;
  std::vector<Verdict> verdicts;
};

/// clamp(floor(s N), 1, N)
inline std::size_t bridge_index(double s, std::size_t n) {
  const auto i = static_cast<std::size_t>(std::floor(s * static_cast<double>(n)));
  return std::clamp<std::size_t>(i, 1, n);
}

/// N Cov(Theta_i, Theta_j) from the joint Beta moments.
inline double scaled_parameter_covariance(std::size_t i, std::size_t j, std::size_t n, const BoundaryParams& bounds) {
  if (i > j) std::swap(i, j);
  const double np1 = static_cast<double>(n + 1);
  const double w = bounds.width();
  return static_cast<double>(n) * w * w * static_cast<double>(i) * static_cast<double>(n + 1 - j) /
         (np1 * np1 * (np1 + 1.0));
}

inline BridgeResult run_bridge(const ExperimentConfig& cfg, const std::vector<double>& grid) {
  cfg.validate(kMinDistributionalReplicas);
  require(!grid.empty(), "run_bridge: grid must not be empty");
  for (double s : grid) require(s >= 0.0 && s <= 1.0, "run_bridge: grid values must lie in [0, 1]");
  BridgeResult out;
  out.n = cfg.n_ladder.back();
  const std::size_t n = out.n;
  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<std::size_t> index(grid.size());
  std::vector<double> expect(grid.size());
  for (std::size_t a = 0; a < grid.size(); ++a) {
    index[a] = bridge_index(grid[a], n);
    expect[a] = cfg.bounds.left() + cfg.bounds.width() * static_cast<double>(index[a]) / static_cast<double>(n + 1);
  }
  const auto fluct = map_indexed(cfg.replicas, cfg.workers, [&](std::size_t r) {
    const auto profile = sample_parameter_profile(n, cfg.bounds, cfg.seed.child(n).child(r).child(0));
    std::vector<double> y(grid.size());
    for (std::size_t a = 0; a < grid.size(); ++a) y[a] = root_n * (profile[index[a] - 1] - expect[a]);
    return y;
  });

  bool ok = true;
  double worst = 0.0;
  for (std::size_t a = 0; a < grid.size(); ++a) {
    for (std::size_t b = a; b < grid.size(); ++b) {
      std::vector<double> prod(cfg.replicas);
      for (std::size_t r = 0; r < cfg.replicas; ++r) prod[r] = fluct[r][a] * fluct[r][b];
      const auto m = sample_moments(prod);
      BridgeEntry e{grid[a], grid[b], m.mean, m.mean_se, bridge_covariance(grid[a], grid[b], cfg.bounds),
                    scaled_parameter_covariance(index[a], index[b], n, cfg.bounds)};
      // Allow the exact finite-N offset on top of three standard errors.
      const double allowed = 3.0 * e.standard_error + std::abs(e.finite_n - e.analytic);
      const double gap = std::abs(e.empirical - e.analytic);
      ok = ok && gap <= allowed;
      worst = std::max(worst, allowed > 0.0 ? gap / allowed : (gap > 0.0 ? std::numeric_limits<double>::infinity() : 0.0));
      out.entries.push_back(e);
    }
  }
  out.verdicts.push_back({"empirical covariance matches (theta_R - theta_L)^2 (s ^ t - s t)", ok, worst, 0.0, 1.0,
                          "worst |empirical - analytic| / (3 SE + |finite N - analytic|)"});
  return out;
}

// ---------------------------------------------------------------- local equilibrium scaling

struct LeScalingResult {
  std::vector<std::pair<std::size_t, double>> deviations;
  std::optional<SlopeFit> fit;
  bool degenerate = false;
  std::vector<Verdict> verdicts;
};

inline LeScalingResult run_le_scaling(double x, const std::vector<unsigned>& p, const std::vector<std::size_t>& ladder,
                                      const BoundaryParams& bounds) {
  require(ladder.size() >= 3, "run_le_scaling: need at least three ladder points");
  LeScalingResult out;
  std::vector<std::pair<double, double>> points;
  unsigned total = 0;
  for (unsigned v : p) total += v;
  const double scale = std::max(1.0, std::pow(std::max(bounds.left(), bounds.right()), static_cast<double>(total)));
  for (std::size_t n : ladder) {
    const double dev = le_deviation(x, p, n, bounds);
    out.deviations.emplace_back(n, dev);
    if (bounds.is_equilibrium() || std::abs(dev) <= 1e-14 * scale) out.degenerate = true;
    points.emplace_back(static_cast<double>(n), std::abs(dev));
  }
  if (out.degenerate) {
    out.verdicts.push_back({"degenerate fit: zero deviation (equilibrium)", true, 0.0, 0.0, 0.0,
                            "no slope is defined when the deviation vanishes"});
    return out;
  }
  out.fit = fit_log_slope(points);
  out.verdicts.push_back({"log-log slope in [-1.15, -0.85]", out.fit->slope >= -1.15 && out.fit->slope <= -0.85,
                          out.fit->slope, 0.0, 0.15, "deterministic exact ladder"});
  out.verdicts.push_back({"r^2 above 0.99", out.fit->r_squared > 0.99, out.fit->r_squared, 0.0, 0.99, ""});
  return out;
}

// ---------------------------------------------------------------- concentration

struct ConcentrationRow {
  std::size_t n = 0;
  double eps = 0.0;
  double probability = 0.0;
  double standard_error = 0.0;
  double beta_union_bound = 0.0;     // sum_i Var(Theta_i) / eps^2
  double printed_union_bound = 0.0;  // 1 / (eps^2 N)
};

struct ConcentrationResult {
  std::vector<ConcentrationRow> rows;
  std::vector<Verdict> verdicts;
};

inline double quarter_power_schedule(std::size_t n) { return std::pow(static_cast<double>(n), -0.25); }

inline ConcentrationResult run_concentration(const std::vector<std::size_t>& ladder,
                                             const std::function<double(std::size_t)>& eps_schedule,
                                             const BoundaryParams& bounds, std::size_t replicas, RandomSeed seed,
                                             unsigned workers = 1, std::size_t min_replicas = 10000) {
  require(!ladder.empty(), "run_concentration: ladder must not be empty");
  require(replicas >= min_replicas, "run_concentration: at least " + std::to_string(min_replicas) + " replicas required");
  ConcentrationResult out;
  const double w = bounds.width();
  for (std::size_t a = 0; a < ladder.size(); ++a) {
    const std::size_t n = ladder[a];
    const double eps = eps_schedule(n);
    require(eps > 0.0, "run_concentration: eps must be positive");
    const auto hits = map_indexed(replicas, workers, [&](std::size_t r) {
      const auto profile = sample_parameter_profile(n, bounds, seed.child(a).child(r));
      double sup = 0.0;
      for (std::size_t i = 1; i <= n; ++i) {
        const double mean = bounds.left() + w * static_cast<double>(i) / static_cast<double>(n + 1);
        sup = std::max(sup, std::abs(profile[i - 1] - mean));
      }
      return sup >= eps ? 1.0 : 0.0;
    });
    const double p = pairwise_sum(hits) / static_cast<double>(replicas);
    const double dn = static_cast<double>(n);
    out.rows.push_back({n, eps, p, std::sqrt(p * (1.0 - p) / static_cast<double>(replicas)),
                        w * w * dn / (6.0 * (dn + 1.0) * eps * eps), 1.0 / (eps * eps * dn)});
  }
  bool non_increasing = true;
  for (std::size_t a = 1; a < out.rows.size(); ++a) {
    const auto& prev = out.rows[a - 1];
    const auto& cur = out.rows[a];
    const double se = std::hypot(prev.standard_error, cur.standard_error);
    non_increasing = non_increasing && cur.probability <= prev.probability + 3.0 * se;
  }
  const auto& last = out.rows.back();
  out.verdicts.push_back({"tail probability non-increasing along the ladder", non_increasing, last.probability,
                          last.standard_error, 3.0, "increase allowed up to 3 combined standard errors"});
  out.verdicts.push_back({"tail probability below 1e-2 at the largest N", last.probability < 1e-2, last.probability,
                          last.standard_error, 1e-2, ""});
  return out;
}

// ---------------------------------------------------------------- order-statistic marginals

struct OrderStatRow {
  std::size_t i = 0;
  double mean = 0.0;
  double mean_se = 0.0;
  double variance = 0.0;
  double variance_se = 0.0;
  double beta_mean = 0.0;
  double beta_variance = 0.0;     // w^2 i (N+1-i) / ((N+1)^2 (N+2))
  double printed_variance = 0.0;  // w^2 i (N+1-i) / ((N+1)^2 (N+2)^2)
};

struct OrderStatResult {
  std::vector<OrderStatRow> rows;
  std::vector<Verdict> verdicts;
};

inline OrderStatResult run_orderstat_moments(std::size_t n, std::size_t replicas, const BoundaryParams& bounds,
                                             RandomSeed seed, unsigned workers = 1) {
  require(n >= 1 && replicas >= 2, "run_orderstat_moments: need N >= 1 and at least two replicas");
  const auto draws = map_indexed(replicas, workers, [&](std::size_t r) {
    const auto p = sample_parameter_profile(n, bounds, seed.child(r));
    return std::vector<double>(p.values().begin(), p.values().end());
  });
  OrderStatResult out;
  const double np1 = static_cast<double>(n + 1);
  const double w2 = bounds.width() * bounds.width();
  double worst_mean = 0.0;
  double worst_var = 0.0;
  double worst_printed = 0.0;
  std::vector<double> column(replicas);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t r = 0; r < replicas; ++r) column[r] = draws[r][i - 1];
    const auto m = sample_moments(column);
    const double di = static_cast<double>(i);
    OrderStatRow row{i,
                     m.mean,
                     m.mean_se,
                     m.variance,
                     m.variance_se,
                     bounds.left() + bounds.width() * di / np1,
                     w2 * di * (np1 - di) / (np1 * np1 * (np1 + 1.0)),
                     w2 * di * (np1 - di) / (np1 * np1 * (np1 + 1.0) * (np1 + 1.0))};
    if (m.mean_se > 0.0) worst_mean = std::max(worst_mean, std::abs(m.mean - row.beta_mean) / m.mean_se);
    if (m.variance_se > 0.0) {
      worst_var = std::max(worst_var, std::abs(m.variance - row.beta_variance) / m.variance_se);
      worst_printed = std::max(worst_printed, std::abs(m.variance - row.printed_variance) / m.variance_se);
    }
    out.rows.push_back(row);
  }
  out.verdicts.push_back({"means match i/(N+1)", worst_mean < 4.0, worst_mean, 1.0, 4.0, "largest |z| over i"});
  out.verdicts.push_back({"variances match the Beta(i, N+1-i) law", worst_var < 4.0, worst_var, 1.0, 4.0,
                          "largest |z| over i"});
  out.verdicts.push_back({"printed variance with (N+2)^2 is rejected", worst_printed >= 4.0, worst_printed, 1.0, 4.0,
                          "largest |z| over i against i(N+1-i)/((N+1)^2 (N+2)^2)"});
  return out;
}

}  // namespace ness
