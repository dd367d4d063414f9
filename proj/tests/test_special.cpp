#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "condpred/quadrature.hpp"
#include "condpred/special.hpp"
#include "oracles.hpp"

using namespace condpred;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("normal quantile inverts the cdf to 1e-12 relative") {
  for (double p : {1e-300, 1e-20, 1e-12, 1e-6, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.975, 0.999999}) {
    const double x = normal_quantile(p);
    CHECK_THAT(normal_cdf(x), WithinRel(p, 1e-12));
  }
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK_THAT(normal_quantile(0.975), WithinAbs(1.959963984540054, 1e-14));
  CHECK_THAT(normal_upper_quantile(1e-12), WithinRel(-normal_quantile(1e-12), 1e-14));
  CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
  CHECK_THROWS_AS(normal_quantile(1.0), DomainError);
}

TEST_CASE("bivariate normal cdf matches a one-dimensional quadrature oracle") {
  // P(X <= a, Y <= b) = int_{-inf}^{a} phi(x) Phi((b - rho x) / sqrt(1 - rho^2)) dx
  auto oracle_cdf = [](double a, double b, double rho) {
    const double s = std::sqrt(1.0 - rho * rho);
    return oracle::integrate([&](double x) { return oracle::phi(x) * oracle::Phi((b - rho * x) / s); }, -12.0, a,
                             400, 20);
  };
  for (double rho : {-0.95, -0.8, -0.5, -0.1, 0.0, 0.2, 0.5, 0.8, 0.93, 0.99}) {
    for (double a : {-2.5, -0.7, 0.0, 0.4, 1.9}) {
      for (double b : {-1.3, 0.0, 0.6, 2.2}) {
        CHECK_THAT(bivariate_normal_cdf(a, b, rho), WithinAbs(oracle_cdf(a, b, rho), 1e-12));
      }
    }
  }
  // Closed form at the origin: 1/4 + asin(rho) / (2 pi).
  CHECK_THAT(bivariate_normal_cdf(0.0, 0.0, 0.5), WithinAbs(1.0 / 3.0, 1e-14));
}

TEST_CASE("kolmogorov survival function") {
  CHECK_THAT(kolmogorov_survival(1.3581), WithinAbs(0.05, 1e-4));
  CHECK_THAT(kolmogorov_survival(1.6276), WithinAbs(0.01, 1e-4));
  // The two series agree near the switch point.
  CHECK_THAT(kolmogorov_survival(0.999999), WithinAbs(kolmogorov_survival(1.000001), 1e-5));
  CHECK(kolmogorov_survival(0.0) == 1.0);
}

TEST_CASE("adaptive Simpson integrates smooth and peaked integrands") {
  CHECK_THAT(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi), WithinAbs(2.0, 1e-9));
  CHECK_THAT(integrate([](double x) { return std::exp(-200.0 * (x - 0.3) * (x - 0.3)); }, 0.0, 1.0),
             WithinAbs(std::sqrt(std::numbers::pi / 200.0), 1e-9));
  CHECK(integrate([](double x) { return x; }, 1.0, 1.0) == 0.0);
}

TEST_CASE("probability-space integration handles unbounded quantile integrands") {
  // int_0^1 -log(1-u) du = 1 (mean of a unit exponential).
  const double m = integrate_probability([](double, double q) { return -std::log(q); });
  CHECK_THAT(m, WithinAbs(1.0, 1e-9));
  // int_0^1 Phi^{-1}(u)^2 du = 1.
  const double v = integrate_probability([](double p, double q) {
    const double z = p <= 0.5 ? normal_quantile(p) : normal_upper_quantile(q);
    return z * z;
  });
  CHECK_THAT(v, WithinAbs(1.0, 1e-9));
}

TEST_CASE("non-finite integrands are reported as numerical errors") {
  CHECK_THROWS_AS(integrate([](double x) { return 1.0 / x; }, 0.0, 1.0), NumericalError);
}
