#include <array>
#include <set>
#include <vector>

#include "ness/parallel.hpp"
#include "ness/random.hpp"
#include "support.hpp"

using namespace ness;

TEST_CASE("Philox4x64-10 reproduces the reference vectors", "[random]") {
  using P = detail::Philox4x64;
  const auto zero = P::apply({0, 0, 0, 0}, {0, 0});
  CHECK(zero == P::Counter{0x16554d9eca36314cULL, 0xdb20fe9d672d0fdcULL, 0xd7e772cee186176bULL,
                           0x7e68b68aec7ba23bULL});
  const auto pi = P::apply({0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL, 0xa4093822299f31d0ULL, 0x082efa98ec4e6c89ULL},
                           {0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL});
  CHECK(pi == P::Counter{0xa528f45403e61d95ULL, 0x38c72dbd566e9788ULL, 0xa5a1610e72fd18b5ULL,
                         0x57bd43b5e52b7fe6ULL});
}

TEST_CASE("uniform draws lie in the open unit interval with mean 1/2", "[random]") {
  RandomStream rng(RandomSeed{7, 3});
  std::vector<double> xs(200000);
  for (auto& x : xs) {
    x = rng.uniform();
    REQUIRE(x > 0.0);
    REQUIRE(x < 1.0);
  }
  testing::check_mean_within_se(xs, 0.5, 5.0, "uniform mean");
  const auto m = sample_moments(xs);
  testing::check_within_se(m.variance, 1.0 / 12.0, m.variance_se, 5.0, "uniform variance");
}

TEST_CASE("identical seeds replay identically and distinct streams differ", "[random]") {
  const RandomSeed s{42, 0};
  RandomStream a(s.child(5));
  RandomStream b(s.child(5));
  RandomStream c(s.child(6));
  RandomStream d(RandomSeed{43, 0}.child(5));
  bool differs_c = false;
  bool differs_d = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    REQUIRE(x == b());
    differs_c = differs_c || x != c();
    differs_d = differs_d || x != d();
  }
  CHECK(differs_c);
  CHECK(differs_d);
  CHECK(s.child(1) == s.child(1));
  CHECK(!(s.child(1) == s.child(2)));
}

TEST_CASE("child substreams are uncorrelated", "[random]") {
  const RandomSeed s{1, 0};
  std::vector<double> prod;
  for (std::uint64_t r = 0; r < 50000; ++r) {
    RandomStream a(s.child(r));
    RandomStream b(s.child(r + 1));
    prod.push_back((a.uniform() - 0.5) * (b.uniform() - 0.5));
  }
  testing::check_mean_within_se(prod, 0.0, 5.0, "adjacent-substream covariance");
}

TEST_CASE("map_indexed results do not depend on the worker count", "[random]") {
  auto fn = [](std::size_t i) {
    RandomStream rng(RandomSeed{9, 0}.child(i));
    return rng.uniform();
  };
  const auto one = map_indexed(1000, 1, fn);
  for (unsigned w : {2u, 4u, 8u}) CHECK(map_indexed(1000, w, fn) == one);
  CHECK(pairwise_sum(one) == pairwise_sum(map_indexed(1000, 8, fn)));
}

TEST_CASE("map_indexed propagates exceptions", "[random]") {
  auto fn = [](std::size_t i) -> int {
    if (i == 17) throw std::runtime_error("boom");
    return static_cast<int>(i);
  };
  CHECK_THROWS_AS(map_indexed(40, 4, fn), std::runtime_error);
  CHECK_THROWS_AS(map_indexed(40, 1, fn), std::runtime_error);
}

TEST_CASE("pairwise summation is exact on integers", "[random]") {
  std::vector<double> xs(1001);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(i);
  CHECK(pairwise_sum(xs) == 500500.0);
  CHECK(pairwise_sum(std::span<const double>{}) == 0.0);
}
