#include <algorithm>
#include <cmath>
#include <vector>

#include "ness/core_model.hpp"
#include "ness/exact_moments.hpp"
#include "ness/parallel.hpp"
#include "support.hpp"

using namespace ness;
using Catch::Approx;

TEST_CASE("geometric_pmf values", "[core_model]") {
  CHECK(geometric_pmf(1.0, 0) == 0.5);
  CHECK(geometric_pmf(0.0, 0) == 1.0);
  CHECK(geometric_pmf(0.0, 3) == 0.0);
  CHECK(geometric_pmf(2.0, 1) == Approx(2.0 / 9.0).epsilon(1e-15));
  CHECK_THROWS_AS(geometric_pmf(-0.5, 1), DomainError);
}

TEST_CASE("geometric_pmf sums to one with mean theta", "[core_model]") {
  for (double theta : {0.1, 1.0, 2.0, 7.5}) {
    double mass = 0.0;
    double mean = 0.0;
    for (Occupation n = 0; n < 2000; ++n) {
      const double p = geometric_pmf(theta, n);
      mass += p;
      mean += static_cast<double>(n) * p;
    }
    CHECK(mass == Approx(1.0).epsilon(1e-12));
    CHECK(mean == Approx(theta).epsilon(1e-10));
    CHECK(geometric_survival(theta, 3) == Approx(1.0 - geometric_pmf(theta, 0) - geometric_pmf(theta, 1) -
                                                 geometric_pmf(theta, 2))
                                              .epsilon(1e-13));
  }
}

TEST_CASE("boundary parameters validate their inputs", "[core_model]") {
  CHECK_THROWS_AS(BoundaryParams(-1.0, 1.0), ContractError);
  CHECK_THROWS_AS(BoundaryParams(2.0, 1.0), ContractError);
  CHECK(BoundaryParams(1.0, 1.0).is_equilibrium());
  CHECK(BoundaryParams(0.0, 2.0).density(0.25) == 0.5);
}

TEST_CASE("sampled profiles are sorted and lie within the bounds", "[core_model]") {
  const BoundaryParams b(0.5, 3.0);
  for (std::uint64_t r = 0; r < 200; ++r) {
    const auto p = sample_parameter_profile(57, b, RandomSeed{11, r});
    REQUIRE(std::is_sorted(p.values().begin(), p.values().end()));
    REQUIRE(p.values().front() >= 0.5);
    REQUIRE(p.values().back() <= 3.0);
  }
  const auto single = sample_parameter_profile(1, BoundaryParams(1.5, 1.5), RandomSeed{1, 2});
  REQUIRE(single.size() == 1);
  CHECK(single[0] == 1.5);
  CHECK_THROWS_AS(sample_parameter_profile(0, b, RandomSeed{}), ContractError);
}

TEST_CASE("profile entries follow the rescaled Beta law", "[core_model]") {
  const std::size_t n = 10;
  const std::size_t reps = 200000;
  const BoundaryParams b(0.0, 2.0);
  std::vector<std::vector<double>> cols(n, std::vector<double>(reps));
  for (std::size_t r = 0; r < reps; ++r) {
    const auto p = sample_parameter_profile(n, b, RandomSeed{5, 0}.child(r));
    for (std::size_t i = 0; i < n; ++i) cols[i][r] = p[i];
  }
  for (std::size_t i = 1; i <= n; ++i) {
    const auto m = sample_moments(cols[i - 1]);
    const double mean = 2.0 * static_cast<double>(i) / (n + 1.0);
    const double var = 4.0 * static_cast<double>(i * (n + 1 - i)) / ((n + 1.0) * (n + 1.0) * (n + 2.0));
    testing::check_within_se(m.mean, mean, m.mean_se, 4.0, "mean of Theta_" + std::to_string(i));
    testing::check_within_se(m.variance, var, m.variance_se, 4.0, "variance of Theta_" + std::to_string(i));
  }
}

TEST_CASE("profile marginals pass a KS test against the Beta CDF", "[core_model]") {
  const std::size_t n = 6;
  const std::size_t reps = 100000;
  const BoundaryParams b(1.0, 3.0);
  std::vector<std::vector<double>> cols(n, std::vector<double>(reps));
  for (std::size_t r = 0; r < reps; ++r) {
    const auto p = sample_parameter_profile(n, b, RandomSeed{77, 0}.child(r));
    for (std::size_t i = 0; i < n; ++i) cols[i][r] = p[i];
  }
  const double critical = 1.628 / std::sqrt(static_cast<double>(reps));
  for (std::size_t i = 1; i <= n; ++i) {
    // P(U_{i:n} <= u) = P(Bin(n, u) >= i)
    auto cdf = [&](double t) {
      const double u = std::clamp((t - 1.0) / 2.0, 0.0, 1.0);
      double acc = 0.0;
      for (std::size_t j = i; j <= n; ++j) {
        acc += std::exp(std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0)) *
               std::pow(u, static_cast<double>(j)) * std::pow(1.0 - u, static_cast<double>(n - j));
      }
      return acc;
    };
    const double d = ks_statistic(cols[i - 1], cdf);
    INFO("site " << i << " KS " << d << " critical " << critical);
    CHECK(d < critical);
  }
}

TEST_CASE("sample_configuration draws geometric sites", "[core_model]") {
  const BoundaryParams b(0.0, 2.0);
  const ParameterProfile zeros(std::vector<double>(8, 0.0), b);
  const auto eta0 = sample_configuration(zeros, RandomSeed{3, 4});
  CHECK(std::all_of(eta0.occupations.begin(), eta0.occupations.end(), [](Occupation o) { return o == 0; }));

  const ParameterProfile fixed({0.3, 1.0, 1.9}, b);
  const std::size_t reps = 200000;
  std::vector<std::vector<double>> cols(3, std::vector<double>(reps));
  std::vector<std::vector<std::size_t>> counts(3, std::vector<std::size_t>(4, 0));
  for (std::size_t r = 0; r < reps; ++r) {
    const auto eta = sample_configuration(fixed, RandomSeed{8, 0}.child(r));
    for (std::size_t i = 0; i < 3; ++i) {
      cols[i][r] = static_cast<double>(eta[i]);
      if (eta[i] < 4) ++counts[i][eta[i]];
    }
  }
  for (std::size_t i = 0; i < 3; ++i) {
    const double theta = fixed[i];
    const auto m = sample_moments(cols[i]);
    testing::check_within_se(m.mean, theta, m.mean_se, 4.0, "site mean");
    // series oracle for the second moment
    double second = 0.0;
    for (Occupation k = 0; k < 4000; ++k) second += static_cast<double>(k * k) * geometric_pmf(theta, k);
    testing::check_within_se(m.variance, second - theta * theta, m.variance_se, 4.0, "site variance");
    CHECK(second - theta * theta == Approx(theta * (1.0 + theta)).epsilon(1e-10));
    for (Occupation k = 0; k < 4; ++k) {
      const double p = geometric_pmf(theta, k);
      const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
      testing::check_within_se(static_cast<double>(counts[i][k]) / reps, p, se, 4.5, "site pmf");
    }
  }
}

TEST_CASE("sample_ness has the local-equilibrium mean", "[core_model]") {
  const std::size_t n = 20;
  const std::size_t reps = 100000;
  const BoundaryParams b(0.0, 2.0);
  std::vector<std::vector<double>> cols(n, std::vector<double>(reps));
  for (std::size_t r = 0; r < reps; ++r) {
    const auto s = sample_ness(n, b, RandomSeed{21, 0}.child(r));
    REQUIRE(s.configuration.size() == n);
    for (std::size_t i = 0; i < n; ++i) cols[i][r] = static_cast<double>(s.configuration[i]);
  }
  for (std::size_t i = 1; i <= n; ++i) {
    testing::check_mean_within_se(cols[i - 1], 2.0 * i / (n + 1.0), 4.0, "E eta_" + std::to_string(i));
  }
}

namespace {

struct CovEstimate {
  double value;
  double se;
};

CovEstimate covariance(const std::vector<double>& x, const std::vector<double>& y) {
  const auto mx = sample_moments(x);
  const auto my = sample_moments(y);
  std::vector<double> prod(x.size());
  for (std::size_t r = 0; r < x.size(); ++r) prod[r] = (x[r] - mx.mean) * (y[r] - my.mean);
  const auto mp = sample_moments(prod);
  return {mp.mean, mp.mean_se};
}

}  // namespace

TEST_CASE("equilibrium sites are uncorrelated", "[core_model]") {
  const std::size_t reps = 200000;
  const BoundaryParams b(1.0, 1.0);
  std::vector<double> x(reps);
  std::vector<double> y(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto s = sample_ness(5, b, RandomSeed{31, 0}.child(r));
    x[r] = static_cast<double>(s.configuration[1]);
    y[r] = static_cast<double>(s.configuration[3]);
  }
  const auto c = covariance(x, y);
  testing::check_within_se(c.value, 0.0, c.se, 4.0, "equilibrium covariance");
}

TEST_CASE("non-equilibrium sites have the positive mixture covariance", "[core_model]") {
  const std::size_t n = 50;
  const BoundaryParams b(0.0, 2.0);
  auto exact_cov = [&](std::size_t i, std::size_t j) {
    const std::vector<IndexedExponent> both{{i, 1}, {j, 1}};
    return theta_sparse_moment(n, both, b) - theta_moment(i, n, 1, b) * theta_moment(j, n, 1, b);
  };
  // Closed form w^2 i (N+1-j) / ((N+1)^2 (N+2)) for i < j.
  CHECK(exact_cov(1, 50) == Approx(4.0 * 1 * 1 / (51.0 * 51.0 * 52.0)).epsilon(1e-10));
  CHECK(exact_cov(1, 50) > 0.0);
  CHECK(exact_cov(20, 30) == Approx(4.0 * 20 * 21 / (51.0 * 51.0 * 52.0)).epsilon(1e-10));

  const std::size_t reps = 200000;
  std::vector<double> x(reps);
  std::vector<double> y(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto s = sample_ness(n, b, RandomSeed{41, 0}.child(r));
    x[r] = static_cast<double>(s.configuration[19]);
    y[r] = static_cast<double>(s.configuration[29]);
  }
  const auto c = covariance(x, y);
  testing::check_within_se(c.value, exact_cov(20, 30), c.se, 4.0, "cov(eta_20, eta_30)");
}

TEST_CASE("sampling is deterministic per seed", "[core_model]") {
  const BoundaryParams b(0.0, 2.0);
  const auto a = sample_ness(300, b, RandomSeed{9, 9});
  const auto c = sample_ness(300, b, RandomSeed{9, 9});
  CHECK(std::equal(a.profile.values().begin(), a.profile.values().end(), c.profile.values().begin()));
  CHECK(a.configuration.occupations == c.configuration.occupations);
}
