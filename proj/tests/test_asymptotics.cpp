#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "ness/asymptotics.hpp"
#include "ness/core_model.hpp"
#include "ness/fields.hpp"
#include "support.hpp"

using namespace ness;
using Catch::Approx;

namespace {

const QuadratureSpec kQuad{};

}  // namespace

TEST_CASE("h for the built-in local functions", "[asymptotics]") {
  for (double rho : {0.0, 0.3, 1.0, 2.0}) {
    CHECK(h_of(LocalFunction::density(), rho, kQuad) == Approx(rho).epsilon(1e-11).margin(1e-12));
    CHECK(h_of(LocalFunction::pair_product(), rho, kQuad) == Approx(rho * rho).epsilon(1e-11).margin(1e-12));
    CHECK(h_of(LocalFunction::indicator_vacuum(), rho, kQuad) == Approx(1.0 / (1.0 + rho)).epsilon(1e-12));
    CHECK(h_of(LocalFunction::indicator_pair_vacuum(), rho, kQuad) ==
          Approx(1.0 / ((1.0 + rho) * (1.0 + rho))).epsilon(1e-12));
  }
  // Direct double series for the pair product.
  double series = 0.0;
  for (Occupation a = 0; a < 200; ++a)
    for (Occupation b = 0; b < 200; ++b)
      series += static_cast<double>(a * b) * geometric_pmf(0.7, a) * geometric_pmf(0.7, b);
  CHECK(h_of(LocalFunction::pair_product(), 0.7, kQuad) == Approx(series).epsilon(1e-11));
}

TEST_CASE("h' by extrapolated finite differences", "[asymptotics]") {
  for (double rho : {0.5, 1.0, 1.8}) {
    const auto d1 = h_prime(LocalFunction::density(), rho, kQuad);
    CHECK(d1.value == Approx(1.0).epsilon(1e-7));
    CHECK_FALSE(d1.one_sided);
    CHECK(h_prime(LocalFunction::pair_product(), rho, kQuad).value == Approx(2.0 * rho).epsilon(1e-7));
    CHECK(h_prime(LocalFunction::indicator_vacuum(), rho, kQuad).value ==
          Approx(-1.0 / ((1.0 + rho) * (1.0 + rho))).epsilon(1e-7));
  }
  const auto edge = h_prime(LocalFunction::indicator_vacuum(), 0.0, kQuad);
  CHECK(edge.one_sided);
  CHECK(edge.value == Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("V for the built-in local functions", "[asymptotics]") {
  for (double rho : {0.25, 1.0, 2.0}) {
    CHECK(v_of(LocalFunction::density(), rho, kQuad) == Approx(rho * (1.0 + rho)).epsilon(1e-10));
    const double p0 = 1.0 / (1.0 + rho);
    CHECK(v_of(LocalFunction::indicator_vacuum(), rho, kQuad) == Approx(p0 * (1.0 - p0)).epsilon(1e-12));
    CHECK(v_of(LocalFunction::pair_product(), rho, kQuad) ==
          Approx(rho * rho + 6.0 * std::pow(rho, 3) + 5.0 * std::pow(rho, 4)).epsilon(1e-10));
  }
  CHECK(v_of(LocalFunction::pair_product(), 1.0, kQuad) == Approx(12.0).epsilon(1e-10));
}

TEST_CASE("V for eta1 eta2 matches brute-force enumeration of the triple window", "[asymptotics]") {
  const std::size_t m = 60;
  const double rho = 1.0;
  std::vector<double> p(m + 1);
  for (std::size_t n = 0; n <= m; ++n) p[n] = geometric_pmf(rho, n);
  double mean = 0.0;
  double second = 0.0;
  double lag = 0.0;
  for (std::size_t a = 0; a <= m; ++a)
    for (std::size_t b = 0; b <= m; ++b) {
      const double wab = p[a] * p[b];
      mean += wab * a * b;
      second += wab * double(a * b) * double(a * b);
      for (std::size_t c = 0; c <= m; ++c) lag += wab * p[c] * double(a * b) * double(b * c);
    }
  const double brute = (second - mean * mean) + 2.0 * (lag - mean * mean);
  CHECK(v_of(LocalFunction::pair_product(), rho, kQuad) == Approx(brute).epsilon(1e-9));
}

TEST_CASE("V is the conditional variance rate of the field", "[asymptotics]") {
  // At equilibrium the profile is deterministic, so Var(sqrt(N) X_N) -> V(c) int phi^2.
  const BoundaryParams b(1.0, 1.0);
  const std::size_t n = 2000;
  const std::size_t reps = 3000;
  const auto g = LocalFunction::pair_product();
  const auto one = TestFunction::constant(1.0);
  std::vector<double> xs(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    xs[r] = std::sqrt(static_cast<double>(n)) * field_value(g, one, sample_ness(n, b, RandomSeed{17, 0}.child(r)).configuration);
  }
  const auto m = sample_moments(xs);
  testing::check_within_se(m.variance, v_of(g, 1.0, kQuad), m.variance_se, 5.0, "equilibrium field variance");
}

TEST_CASE("LLN limits", "[asymptotics]") {
  const auto one = TestFunction::constant(1.0);
  const auto x = TestFunction::power(1);
  CHECK(lln_limit(LocalFunction::density(), one, BoundaryParams(0.0, 2.0), kQuad) == Approx(1.0).epsilon(1e-10));
  CHECK(lln_limit(LocalFunction::density(), one, BoundaryParams(0.5, 3.5), kQuad) == Approx(2.0).epsilon(1e-10));
  CHECK(lln_limit(LocalFunction::density(), x, BoundaryParams(0.0, 1.0), kQuad) == Approx(1.0 / 3.0).epsilon(1e-10));
  // int (2x)^2 x dx = 1
  CHECK(lln_limit(LocalFunction::pair_product(), x, BoundaryParams(0.0, 2.0), kQuad) == Approx(1.0).epsilon(1e-10));
  const auto cos1 = TestFunction::cosine(1);
  CHECK(lln_limit(LocalFunction::indicator_vacuum(), x, BoundaryParams(1.5, 1.5), kQuad) ==
        Approx(0.4 * 0.5).epsilon(1e-10));
  CHECK(lln_limit(LocalFunction::indicator_vacuum(), cos1, BoundaryParams(1.5, 1.5), kQuad) ==
        Approx(0.0).margin(1e-12));
}

TEST_CASE("CLT variances", "[asymptotics]") {
  const auto one = TestFunction::constant(1.0);
  const auto v02 = clt_variances(LocalFunction::density(), one, BoundaryParams(0.0, 2.0), kQuad);
  CHECK(v02.sigma_t_sq == Approx(4.0 / 12.0).epsilon(1e-9));
  CHECK(v02.sigma_e_sq == Approx(7.0 / 3.0).epsilon(1e-9));  // int 2x(1+2x) dx
  const auto v01 = clt_variances(LocalFunction::density(), one, BoundaryParams(0.0, 1.0), kQuad);
  CHECK(v01.sigma_t_sq == Approx(1.0 / 12.0).epsilon(1e-9));
  CHECK(v01.sigma_e_sq == Approx(5.0 / 6.0).epsilon(1e-9));
  const auto eq = clt_variances(LocalFunction::pair_product(), TestFunction::power(1), BoundaryParams(1.0, 1.0), kQuad);
  CHECK(eq.sigma_t_sq == 0.0);
  CHECK(eq.sigma_e_sq == Approx(12.0 / 3.0).epsilon(1e-9));

  // sigma_T^2 for phi = x, g = eta_1 on (0, 1): int int (s^t - st) s t = 1/45.
  const auto vx = clt_variances(LocalFunction::density(), TestFunction::power(1), BoundaryParams(0.0, 1.0), kQuad);
  CHECK(vx.sigma_t_sq == Approx(1.0 / 45.0).epsilon(1e-9));

  for (const auto& g : {LocalFunction::density(), LocalFunction::pair_product(), LocalFunction::indicator_vacuum()}) {
    for (const auto& phi : {TestFunction::constant(1.0), TestFunction::cosine(1), TestFunction::power(2)}) {
      const auto v = clt_variances(g, phi, BoundaryParams(0.25, 1.75), kQuad);
      CHECK(v.sigma_t_sq >= 0.0);
      CHECK(v.sigma_e_sq >= 0.0);
    }
  }
}

TEST_CASE("doubling the panels leaves the integrals unchanged", "[asymptotics]") {
  QuadratureSpec fine = kQuad;
  fine.panels *= 2;
  const BoundaryParams b(0.0, 2.0);
  const auto phi = TestFunction::cosine(1);
  const auto g = LocalFunction::indicator_pair_vacuum();
  CHECK(lln_limit(g, phi, b, kQuad) == Approx(lln_limit(g, phi, b, fine)).margin(1e-8));
  const auto c = clt_variances(g, phi, b, kQuad);
  const auto f = clt_variances(g, phi, b, fine);
  CHECK(c.sigma_t_sq == Approx(f.sigma_t_sq).margin(1e-8));
  CHECK(c.sigma_e_sq == Approx(f.sigma_e_sq).margin(1e-8));
}

TEST_CASE("bridge covariance kernel", "[asymptotics]") {
  const BoundaryParams unit(0.0, 1.0);
  CHECK(bridge_covariance(0.5, 0.5, unit) == 0.25);
  CHECK(bridge_covariance(0.0, 0.3, unit) == 0.0);
  CHECK(bridge_covariance(0.7, 1.0, unit) == Approx(0.0).margin(1e-16));
  CHECK(bridge_covariance(0.2, 0.9, unit) == bridge_covariance(0.9, 0.2, unit));
  CHECK(bridge_covariance(0.25, 0.75, BoundaryParams(0.0, 2.0)) == Approx(4.0 / 16.0));
  CHECK_THROWS_AS(bridge_covariance(-0.1, 0.5, unit), ContractError);

  const std::size_t m = 60;
  Eigen::MatrixXd k(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double s = (i + 0.37) / m;
      const double t = (j + 0.37) / m;
      k(i, j) = bridge_covariance(s, t, unit);
    }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  CHECK(es.eigenvalues().minCoeff() > -1e-10);
}

TEST_CASE("h agrees with the Monte Carlo mixture mean at equilibrium", "[asymptotics]") {
  const std::size_t reps = 200000;
  for (const auto& g : {LocalFunction::pair_product(), LocalFunction::indicator_pair_vacuum()}) {
    const BoundaryParams b(1.3, 1.3);
    std::vector<double> xs(reps);
    for (std::size_t r = 0; r < reps; ++r) {
      xs[r] = shift_apply(g, 0, sample_ness(2, b, RandomSeed{303, 0}.child(r)).configuration);
    }
    testing::check_mean_within_se(xs, h_of(g, 1.3, kQuad), 4.0, g.name());
  }
}

TEST_CASE("an explicit truncation below the certified one is rejected", "[asymptotics]") {
  QuadratureSpec q = kQuad;
  q.truncation = 5;
  CHECK_THROWS_AS(h_of(LocalFunction::density(), 2.0, q), QuadratureError);
}
