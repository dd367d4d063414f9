#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "condpred/copulas.hpp"
#include "condpred/stats.hpp"
#include "oracles.hpp"

using namespace condpred;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<Copula> families() {
  return {Copula::independence(), Copula::gaussian(0.5),  Copula::gaussian(-0.7), Copula::fgm(1.0),
          Copula::fgm(-0.6),      Copula::clayton(2.0),   Copula::clayton(0.4)};
}

struct Sample {
  std::vector<double> u;
  std::vector<double> v;
};

Sample draw(const Copula& c, std::size_t n, std::uint64_t seed) {
  RandomState rng(seed);
  Sample s;
  s.u.resize(n);
  s.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) std::tie(s.u[i], s.v[i]) = c.sample_pair(rng);
  return s;
}

}  // namespace

TEST_CASE("copula cdf examples") {
  CHECK(Copula::independence().cdf(0.5, 0.5) == 0.25);
  for (const Copula& c : families()) CHECK(c.cdf(0.7, 1.0) == 0.7);

  // Oracle: integrate the bivariate normal density over (-inf, 0]^2.
  const double rho = 0.5;
  const double oracle_value = oracle::integrate2d(
      [&](double x, double y) {
        const double q = (x * x - 2.0 * rho * x * y + y * y) / (1.0 - rho * rho);
        return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(1.0 - rho * rho));
      },
      -12.0, 0.0, -12.0, 0.0);
  CHECK_THAT(oracle_value, WithinAbs(1.0 / 3.0, 1e-10));
  CHECK_THAT(Copula::gaussian(0.5).cdf(0.5, 0.5), WithinAbs(oracle_value, 1e-10));
}

TEST_CASE("invalid copula parameters are rejected") {
  CHECK_THROWS_AS(Copula::gaussian(1.0), ConstructionError);
  CHECK_THROWS_AS(Copula::fgm(1.5), ConstructionError);
  CHECK_THROWS_AS(Copula::clayton(0.0), ConstructionError);
}

TEST_CASE("boundary conditions, Frechet bounds and exchangeability") {
  for (const Copula& c : families()) {
    INFO(c.name());
    for (int i = 0; i <= 100; ++i) {
      const double u = i / 100.0;
      REQUIRE(c.cdf(u, 0.0) == 0.0);
      REQUIRE(c.cdf(0.0, u) == 0.0);
      REQUIRE_THAT(c.cdf(u, 1.0), WithinAbs(u, 1e-15));
      REQUIRE_THAT(c.cdf(1.0, u), WithinAbs(u, 1e-15));
      for (int j = 0; j <= 100; ++j) {
        const double v = j / 100.0;
        const double value = c.cdf(u, v);
        REQUIRE(value >= std::max(u + v - 1.0, 0.0) - 1e-15);
        REQUIRE(value <= std::min(u, v) + 1e-15);
        REQUIRE_THAT(value, WithinAbs(c.cdf(v, u), 1e-13));
      }
    }
  }
}

TEST_CASE("2-increasing on random rectangles with random parameters") {
  RandomState rng(404);
  for (int family = 0; family < 4; ++family) {
    for (int rep = 0; rep < 10; ++rep) {
      Copula c;
      switch (family) {
        case 0: c = Copula::independence(); break;
        case 1: c = Copula::gaussian(-0.98 + 1.96 * rng.uniform()); break;
        case 2: c = Copula::fgm(-1.0 + 2.0 * rng.uniform()); break;
        default: c = Copula::clayton(0.05 + 10.0 * rng.uniform()); break;
      }
      for (int k = 0; k < 1000; ++k) {
        double u1 = rng.uniform(), u2 = rng.uniform(), v1 = rng.uniform(), v2 = rng.uniform();
        if (u1 > u2) std::swap(u1, u2);
        if (v1 > v2) std::swap(v1, v2);
        const double vol = c.cdf(u2, v2) - c.cdf(u2, v1) - c.cdf(u1, v2) + c.cdf(u1, v1);
        REQUIRE(vol >= -1e-12);
      }
    }
  }
}

TEST_CASE("conditional cdf is the u-derivative of C and inverts exactly") {
  for (const Copula& c : families()) {
    INFO(c.name());
    for (double u : {0.1, 0.35, 0.6, 0.9}) {
      for (double v : {0.05, 0.3, 0.5, 0.8, 0.97}) {
        const double h = 1e-5;
        const double fd = (c.cdf(u + h, v) - c.cdf(u - h, v)) / (2.0 * h);
        REQUIRE_THAT(c.conditional_cdf(v, u), WithinAbs(fd, 1e-6));
        const double w = c.conditional_cdf(v, u);
        REQUIRE_THAT(c.conditional_quantile(w, u), WithinAbs(v, 1e-10));
      }
    }
  }
}

TEST_CASE("density is the mixed derivative of C") {
  for (const Copula& c : families()) {
    INFO(c.name());
    for (double u : {0.2, 0.5, 0.75}) {
      for (double v : {0.15, 0.45, 0.8}) {
        const double h = 1e-4;
        const double fd = (c.cdf(u + h, v + h) - c.cdf(u + h, v - h) - c.cdf(u - h, v + h) + c.cdf(u - h, v - h)) /
                          (4.0 * h * h);
        REQUIRE_THAT(c.density(u, v), WithinAbs(fd, 1e-4));
      }
    }
  }
}

TEST_CASE("sample_pair examples") {
  const std::size_t n = 100'000;
  {
    const Sample s = draw(Copula::gaussian(0.0), n, 1);
    CHECK(std::abs(kendall_tau(s.u, s.v)) <= 0.02);
  }
  {
    Sample s = draw(Copula::gaussian(0.5), n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      s.u[i] = normal_quantile(s.u[i]);
      s.v[i] = normal_quantile(s.v[i]);
    }
    CHECK_THAT(pearson(s.u, s.v), WithinAbs(0.5, 0.02));
  }
  {
    // Spearman's rho = 12 int int C - 3, computed by quadrature for theta = 1.
    const Copula c = Copula::fgm(1.0);
    const double rho_s =
        12.0 * oracle::integrate2d([&](double u, double v) { return c.cdf(u, v); }, 0.0, 1.0, 0.0, 1.0, 8, 10) - 3.0;
    CHECK_THAT(rho_s, WithinAbs(1.0 / 3.0, 1e-12));
    const Sample s = draw(c, n, 3);
    CHECK_THAT(spearman(s.u, s.v), WithinAbs(rho_s, 0.02));
  }
  RandomState a(9), b(9);
  CHECK(Copula::clayton(2.0).sample_pair(a) == Copula::clayton(2.0).sample_pair(b));
}

TEST_CASE("sampled pairs have uniform marginals") {
  for (const Copula& c : families()) {
    INFO(c.name());
    const Sample s = draw(c, 50'000, 77);
    const double du = ks_statistic(s.u, [](double x) { return x; });
    const double dv = ks_statistic(s.v, [](double x) { return x; });
    CHECK(du <= 1.63 / std::sqrt(50'000.0));
    CHECK(dv <= 1.63 / std::sqrt(50'000.0));
  }
}

TEST_CASE("empirical copula evaluation") {
  const Sample s = draw(Copula::independence(), 100'000, 21);
  const EmpiricalCopula e(s.u, s.v);
  CHECK(e(1.0, 1.0) == 1.0);
  CHECK(e(0.0, 0.4) == 0.0);
  CHECK(e(0.7, 0.0) == 0.0);
  CHECK_THAT(e(0.5, 0.5), WithinAbs(0.25, 0.01));
  CHECK_THROWS_AS(EmpiricalCopula(std::vector<double>{}, std::vector<double>{}), DomainError);
}

TEST_CASE("empirical ranks are a permutation with index tie-breaking") {
  const std::vector<double> x = {3.0, 1.0, 3.0, 2.0, 1.0};
  const std::vector<double> y = {0.1, 0.2, 0.3, 0.4, 0.5};
  const EmpiricalCopula e(x, y);
  CHECK(e.x_ranks() == std::vector<std::uint32_t>{4, 1, 5, 3, 2});
  CHECK(e.y_ranks() == std::vector<std::uint32_t>{1, 2, 3, 4, 5});
}

TEST_CASE("lattice evaluation agrees with pointwise evaluation") {
  const Sample s = draw(Copula::clayton(1.5), 2000, 8);
  const EmpiricalCopula e(s.u, s.v);
  const std::size_t g = 11;
  const auto lat = e.lattice(g);
  for (std::size_t a = 0; a < g; ++a) {
    for (std::size_t b = 0; b < g; ++b) {
      const double u = a == g - 1 ? 1.0 : a / 10.0;
      const double v = b == g - 1 ? 1.0 : b / 10.0;
      REQUIRE_THAT(lat[a * g + b], WithinAbs(e(u, v), 1e-15));
    }
  }
}

TEST_CASE("sup distance examples") {
  std::uint64_t seed = 100;
  for (const Copula& c : families()) {
    INFO(c.name());
    const Sample s = draw(c, 100'000, seed++);
    const EmpiricalCopula e(s.u, s.v);
    CHECK(sup_distance(e, c, 50) <= 0.02);
    CHECK(sup_distance(e, c, 2) == 0.0);
  }
  const Sample s = draw(Copula::gaussian(0.8), 100'000, 5);
  const EmpiricalCopula e(s.u, s.v);
  CHECK(sup_distance(e, Copula::independence(), 50) >= 0.05);
}

TEST_CASE("split conditional quantile agrees with the plain one and keeps tails") {
  for (const Copula& c : families()) {
    INFO(c.name());
    for (double u : {1e-9, 0.2, 0.5, 0.9, 1.0 - 1e-9}) {
      for (double w : {1e-10, 0.05, 0.5, 0.8, 0.999}) {
        const SplitProbability s = c.conditional_quantile(split_probability(w), split_probability(u));
        REQUIRE_THAT(s.p, WithinAbs(c.conditional_quantile(w, u), 1e-9));
        REQUIRE_THAT(s.p + s.q, WithinAbs(1.0, 1e-15));
      }
    }
    // Far upper level: the complement stays resolved.
    const SplitProbability far = c.conditional_quantile(SplitProbability{1.0, 1e-14}, split_probability(0.5));
    CHECK(far.q > 0.0);
    CHECK(far.q < 1e-6);
  }
}
