#include <cmath>
#include <vector>

#include "ness/core_model.hpp"
#include "ness/fields.hpp"
#include "support.hpp"

using namespace ness;
using Catch::Approx;

namespace {

Configuration config(std::vector<Occupation> v) { return Configuration{std::move(v)}; }

}  // namespace

TEST_CASE("shift_apply evaluates the shifted window", "[fields]") {
  const auto eta = config({5, 7, 9});
  CHECK(shift_apply(LocalFunction::density(), 2, eta) == 9.0);
  CHECK(shift_apply(LocalFunction::density(), 0, eta) == 5.0);
  CHECK(shift_apply(LocalFunction::pair_product(), 0, config({3, 4, 1})) == 12.0);
  CHECK_THROWS_AS(shift_apply(LocalFunction::pair_product(), 2, eta), ContractError);
}

TEST_CASE("field_value examples", "[fields]") {
  const auto one = TestFunction::constant(1.0);
  CHECK(field_value(LocalFunction::density(), one, config({1, 2, 3})) == Approx(2.0).epsilon(1e-15));
  CHECK(field_value(LocalFunction::density(), one, config({0, 0, 0, 0})) == 0.0);
  // pair field on (1, 2, 3): (1*2) phi(0) + (2*3) phi(1/4), divided by 3
  const auto x = TestFunction::power(1);
  CHECK(field_value(LocalFunction::pair_product(), x, config({1, 2, 3})) == Approx(6.0 * 0.25 / 3.0));
}

TEST_CASE("field_value is linear in g and phi", "[fields]") {
  const BoundaryParams b(0.0, 2.0);
  const auto g1 = LocalFunction::density();
  const auto g2 = LocalFunction::pair_product();
  const Polynomial combo_poly(2, {Monomial{2.5, {1, 0}}, Monomial{-0.75, {1, 1}}});
  const auto combo = LocalFunction::from_polynomial("combo", combo_poly);
  const auto phi1 = TestFunction::cosine(1);
  const auto phi2 = TestFunction::power(2);
  const TestFunction phi_combo("combo", [&](double s) { return 0.3 * phi1(s) - 1.2 * phi2(s); });
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto s = sample_ness(137, b, RandomSeed{55, r});
    const auto& eta = s.configuration;
    // Both summands use k = 2 so the index ranges coincide.
    const auto first = LocalFunction::from_polynomial("first", Polynomial(2, {Monomial{1.0, {1, 0}}}));
    const double lhs = field_value(combo, phi1, eta);
    const double rhs = 2.5 * field_value(first, phi1, eta) - 0.75 * field_value(g2, phi1, eta);
    CHECK(lhs == Approx(rhs).epsilon(1e-12).margin(1e-12));
    // Linearity in phi.
    const double a = field_value(g1, phi_combo, eta);
    const double c = 0.3 * field_value(g1, phi1, eta) - 1.2 * field_value(g1, phi2, eta);
    CHECK(a == Approx(c).epsilon(1e-12).margin(1e-12));
  }
}

TEST_CASE("empirical profile pairs to the field exactly", "[fields]") {
  const BoundaryParams b(0.5, 1.5);
  const auto phi = TestFunction::cosine(2);
  for (const auto& g : {LocalFunction::density(), LocalFunction::pair_product(), LocalFunction::indicator_pair_vacuum()}) {
    const auto s = sample_ness(301, b, RandomSeed{66, 1});
    const auto prof = empirical_profile(g, s.configuration);
    CHECK(prof.atoms.size() == 301 - g.k() + 1);
    CHECK(prof.pair(phi) == field_value(g, phi, s.configuration));
    for (const auto& a : prof.atoms) {
      REQUIRE(a.location >= 0.0);
      REQUIRE(a.location <= 1.0);
    }
  }
  const auto zero = empirical_profile(LocalFunction::pair_product(), config(std::vector<Occupation>(9, 0)));
  CHECK(zero.atoms.size() == 8);
  for (const auto& a : zero.atoms) CHECK(a.weight == 0.0);
}

TEST_CASE("block averages", "[fields]") {
  const auto flat = config(std::vector<Occupation>(100, 4));
  CHECK(block_average(flat, 50, 0.1) == 4.0);
  std::vector<Occupation> ramp(100);
  for (std::size_t i = 0; i < 100; ++i) ramp[i] = i;
  const auto r = config(ramp);
  CHECK(block_average(r, 37, 0.005) == 36.0);  // floor(0.5) = 0: a single site
  CHECK(block_average(r, 50, 0.03) == Approx(49.0));
  CHECK_THROWS_AS(block_average(r, 2, 0.05), ContractError);
  CHECK_THROWS_AS(block_average(r, 98, 0.05), ContractError);
}

TEST_CASE("block averages follow the density profile", "[fields]") {
  const BoundaryParams b(0.0, 2.0);
  const std::size_t n = 100000;
  const std::size_t reps = 40;
  for (double x : {0.25, 0.5, 0.8}) {
    const auto i = static_cast<std::size_t>(x * n);
    std::vector<double> vals(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      vals[r] = block_average(sample_ness(n, b, RandomSeed{88, 0}.child(r)).configuration, i, 0.01);
    }
    // Block-average mean is the average of rho over the block, equal to rho(x) up to O(1/N).
    testing::check_mean_within_se(vals, b.density(static_cast<double>(i) / (n + 1.0)), 5.0, "block average");
  }
}

TEST_CASE("field mean follows the LLN limit", "[fields]") {
  const BoundaryParams b(0.0, 2.0);
  const auto one = TestFunction::constant(1.0);
  std::vector<double> vals(200);
  for (std::size_t r = 0; r < vals.size(); ++r) {
    vals[r] = field_value(LocalFunction::density(), one, sample_ness(10000, b, RandomSeed{89, 0}.child(r)).configuration);
  }
  testing::check_mean_within_se(vals, 1.0, 5.0, "density field mean");
}

TEST_CASE("block replacement error decays with N", "[fields]") {
  const BoundaryParams b(0.0, 2.0);
  const auto g = LocalFunction::pair_product();
  const auto phi = TestFunction::constant(1.0);
  auto sq = [](double r) { return r * r; };
  auto mean_gap = [&](std::size_t n) {
    std::vector<double> gaps(20);
    for (std::size_t r = 0; r < gaps.size(); ++r) {
      const auto eta = sample_ness(n, b, RandomSeed{90, n}.child(r)).configuration;
      gaps[r] = std::abs(field_value(g, phi, eta) - block_replacement_sum(eta, sq, phi, 0.01));
    }
    return sample_moments(gaps).mean;
  };
  const double small = mean_gap(1000);
  const double large = mean_gap(100000);
  INFO("N=1e3 gap " << small << ", N=1e5 gap " << large);
  CHECK(large < small);
}
