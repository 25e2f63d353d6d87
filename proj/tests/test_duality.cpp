#include <cmath>
#include <vector>

#include "ness/core_model.hpp"
#include "ness/duality.hpp"
#include "support.hpp"

using namespace ness;
using Catch::Approx;

namespace {

DualConfiguration dual(std::map<std::size_t, unsigned> xi) { return DualConfiguration(std::move(xi)); }

}  // namespace

TEST_CASE("duality polynomial values", "[duality]") {
  const Configuration eta{{3, 0, 5, 2}};
  CHECK(duality_poly(eta, DualConfiguration{}) == 1.0);
  CHECK(duality_poly(eta, dual({{1, 2}})) == 3.0);
  CHECK(duality_poly(eta, dual({{1, 2}, {3, 3}})) == 30.0);
  CHECK(duality_poly(eta, dual({{2, 1}})) == 0.0);
  CHECK(duality_poly(eta, dual({{4, 3}, {1, 1}})) == 0.0);
  CHECK(dual({{2, 0}, {3, 1}}).entries().size() == 1);
  CHECK_THROWS_AS(duality_poly(eta, dual({{5, 1}})), ContractError);
  CHECK_THROWS_AS(dual({{0, 1}}), ContractError);
  CHECK_THROWS_AS(dual({{1, 21}}), ContractError);
  CHECK_THROWS_AS(duality_poly(Configuration{{1ULL << 40}}, dual({{1, 20}})), NumericError);
}

TEST_CASE("exact duality expectations", "[duality]") {
  const BoundaryParams b(0.5, 2.5);
  CHECK(duality_expectation_exact(DualConfiguration{}, 9, b) == 1.0);
  for (std::size_t i = 1; i <= 9; ++i) {
    CHECK(duality_expectation_exact(dual({{i, 1}}), 9, b) == Approx(0.5 + 2.0 * i / 10.0).epsilon(1e-14));
  }
  const BoundaryParams eq(1.7, 1.7);
  const DualConfiguration xi({{2, 3}, {5, 1}, {6, 2}});
  CHECK(duality_expectation_exact(xi, 8, eq) == Approx(std::pow(1.7, 6)).epsilon(1e-13));
  CHECK_THROWS_AS(duality_expectation_exact(xi, 5, b), ContractError);
}

TEST_CASE("duality expectations match Monte Carlo", "[duality]") {
  const BoundaryParams b(0.0, 2.0);
  const std::size_t n = 7;
  const std::size_t reps = 300000;
  std::vector<Configuration> samples;
  samples.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) samples.push_back(sample_ness(n, b, RandomSeed{404, 0}.child(r)).configuration);
  std::uint64_t state = 7;
  for (int trial = 0; trial < 10; ++trial) {
    std::map<std::size_t, unsigned> m;
    state = detail::splitmix64(state);
    const unsigned mass = 1 + state % 4;
    for (unsigned q = 0; q < mass; ++q) m[1 + (state >> (8 + 4 * q)) % n] += 1;
    const DualConfiguration xi(m);
    std::vector<double> xs(reps);
    for (std::size_t r = 0; r < reps; ++r) xs[r] = duality_poly(samples[r], xi);
    testing::check_mean_within_se(xs, duality_expectation_exact(xi, n, b), 4.0, "duality expectation");
  }
}

TEST_CASE("conditional duality identity given a fixed profile", "[duality]") {
  const BoundaryParams b(0.0, 2.0);
  const auto profile = sample_parameter_profile(6, b, RandomSeed{505, 0});
  const DualConfiguration xi({{2, 1}, {4, 2}, {6, 1}});
  const double target = profile[1] * profile[3] * profile[3] * profile[5];
  std::vector<double> xs(300000);
  for (std::size_t r = 0; r < xs.size(); ++r) xs[r] = duality_poly(sample_configuration(profile, RandomSeed{506, 0}.child(r)), xi);
  testing::check_mean_within_se(xs, target, 4.0, "conditional duality");
}

TEST_CASE("local-equilibrium deviation", "[duality]") {
  const BoundaryParams b(0.0, 2.0);
  const std::vector<unsigned> p1{1};
  for (std::size_t n : {10u, 128u, 1000u}) {
    for (double x : {0.1, 0.5, 0.77}) {
      const auto base = static_cast<double>(detail::lattice_site(x, n));
      CHECK(le_deviation(x, p1, n, b) == Approx(2.0 * ((base + 1.0) / (n + 1.0) - x)).margin(1e-14));
    }
  }
  const std::vector<unsigned> p21{2, 1};
  CHECK(le_deviation(0.4, p21, 500, BoundaryParams(1.2, 1.2)) == Approx(0.0).margin(1e-13));
  CHECK(detail::lattice_site(1.0 / 3.0, 384) == 128);
  CHECK_THROWS_AS(le_deviation(0.99, p21, 50, b), ContractError);
  CHECK_THROWS_AS(le_deviation(0.0, p1, 50, b), ContractError);

  const std::vector<unsigned> p111{1, 1, 1};
  for (const auto& p : {p1, p21, p111}) {
    double prev = std::abs(le_deviation(0.5, p, 128, b));
    for (std::size_t n = 256; n <= 16384; n *= 2) {
      const double d = std::abs(le_deviation(0.5, p, n, b));
      CHECK(d < prev);
      prev = d;
    }
  }
}
