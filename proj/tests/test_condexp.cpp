#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <vector>

#include "condpred/condexp.hpp"
#include "condpred/stats.hpp"
#include "oracles.hpp"

using namespace condpred;
using Catch::Matchers::WithinAbs;

namespace {

BivariateModel gaussian_model(double rho) {
  return {Copula::gaussian(rho), Marginal::normal(), Marginal::normal()};
}

BivariateModel fgm_uniform(double theta) {
  return {Copula::fgm(theta), Marginal::uniform(), Marginal::uniform()};
}

}  // namespace

TEST_CASE("psi for the Gaussian model is the affine regression line") {
  const RegressionFunction f = psi(gaussian_model(0.5));
  CHECK(f.is_affine());
  CHECK_THAT(f(1.0), WithinAbs(0.5, 1e-15));
  const BivariateModel shifted{Copula::gaussian(0.3), Marginal::normal(1.0, 2.0), Marginal::normal(-1.0, 0.5)};
  CHECK_THAT(psi(shifted)(2.0), WithinAbs(-1.0 + 0.3 * 0.5 / 2.0 * (2.0 - 1.0), 1e-15));
  CHECK_THAT(phi(shifted)(0.0), WithinAbs(1.0 + 0.3 * 2.0 / 0.5 * (0.0 + 1.0), 1e-15));
}

TEST_CASE("independence gives a constant regression function") {
  const BivariateModel m{Copula::independence(), Marginal::exponential(2.0), Marginal::normal(0.0, 1.0)};
  const RegressionFunction f = phi(m);
  for (double y : {-3.0, -0.5, 0.0, 1.2, 4.0}) CHECK_THAT(f(y), WithinAbs(0.5, 1e-8));
  CHECK(f.monotonicity() == Monotonicity::NonMonotone);
}

TEST_CASE("FGM regression matches a quadrature oracle") {
  const double theta = 1.0;
  const RegressionFunction f = psi(fgm_uniform(theta));
  for (double x : {0.0, 0.1, 0.37, 0.5, 0.82, 1.0}) {
    const double oracle_value =
        oracle::integrate([&](double v) { return v * (1.0 + theta * (1.0 - 2.0 * x) * (1.0 - 2.0 * v)); }, 0.0, 1.0,
                          4, 10);
    CHECK_THAT(f(x), WithinAbs(oracle_value, 1e-8));
  }
  CHECK_THAT(f(0.0), WithinAbs(1.0 / 3.0, 1e-8));
  CHECK(f.monotonicity() == Monotonicity::Increasing);
}

TEST_CASE("regression functions for non-Gaussian marginals match 2-D oracles") {
  // Clayton copula with exponential marginals: E(Y | X = x) as a ratio of
  // oracle integrals over the copula density in probability space.
  const BivariateModel m{Copula::clayton(2.0), Marginal::exponential(1.0), Marginal::exponential(1.0)};
  const RegressionFunction f = psi(m);
  for (double x : {0.2, 1.0, 2.5}) {
    const double u = 1.0 - std::exp(-x);
    auto num = oracle::integrate(
        [&](double s) {
          const double v = s * s * (3.0 - 2.0 * s);
          const double jac = 6.0 * s * (1.0 - s);
          return -std::log1p(-v) * m.copula.density(u, v) * jac;
        },
        1e-9, 1.0 - 1e-9, 400, 20);
    CHECK_THAT(f(x), WithinAbs(num, 1e-6));
  }
}

TEST_CASE("generalized inverse") {
  const RegressionFunction id = RegressionFunction::affine(1.0, 0.0, Interval{0.0, 1.0});
  CHECK(generalized_inverse(id, 0.5) == 0.5);

  const RegressionFunction g = psi(gaussian_model(0.5));
  CHECK_THAT(generalized_inverse(g, 0.5), WithinAbs(1.0, 1e-15));

  const RegressionFunction c = RegressionFunction::tabulate([](double) { return 3.0; }, Interval{0.0, 1.0}, 33);
  CHECK_THROWS_AS(generalized_inverse(c, 3.0), UnsupportedInput);

  const RegressionFunction up = psi(fgm_uniform(0.7));
  for (double t : {0.39, 0.45, 0.5, 0.6}) CHECK_THAT(up(generalized_inverse(up, t)), WithinAbs(t, 1e-8));
  CHECK(generalized_inverse(up, 0.0) == 0.0);
  CHECK(generalized_inverse(up, 1.0) == 1.0);

  const RegressionFunction down = psi(fgm_uniform(-0.7));
  CHECK(down.monotonicity() == Monotonicity::Decreasing);
  for (double t : {0.39, 0.45, 0.5, 0.6}) CHECK_THAT(down(generalized_inverse(down, t)), WithinAbs(t, 1e-8));
  CHECK(generalized_inverse(down, 1.0) == 0.0);
  CHECK(generalized_inverse(down, 0.0) == 1.0);
}

TEST_CASE("tabulated values respect the monotonicity flag") {
  const RegressionFunction f = psi(BivariateModel{Copula::clayton(1.0), Marginal::normal(), Marginal::uniform()});
  REQUIRE(f.monotonicity() == Monotonicity::Increasing);
  const auto& ys = f.values();
  for (std::size_t k = 1; k < ys.size(); ++k) REQUIRE(ys[k] >= ys[k - 1]);
  const Interval d = f.domain();
  double prev = f(d.lower);
  for (int k = 1; k <= 2000; ++k) {
    const double y = f(d.lower + (d.upper - d.lower) * k / 2000.0);
    REQUIRE(std::isfinite(y));
    REQUIRE(y >= prev - 1e-12);
    prev = y;
  }
}

TEST_CASE("predictor quantile") {
  CHECK_THAT(predictor_quantile(gaussian_model(0.5), Predictor::Z1, 0.5), WithinAbs(0.0, 1e-15));
  const BivariateModel indep{Copula::independence(), Marginal::uniform(), Marginal::uniform()};
  CHECK_THROWS_AS(predictor_quantile(indep, Predictor::Z1, 0.3), UnsupportedInput);
  CHECK_THROWS_AS(predictor_quantile(gaussian_model(0.5), Predictor::Z2, 1.0), DomainError);

  // theta = -1 makes psi decreasing, so the increasing-only quantile map
  // refuses it; its endpoint value is still 2/3.
  const RegressionFunction down = psi(fgm_uniform(-1.0));
  CHECK_THAT(down(0.0), WithinAbs(2.0 / 3.0, 1e-8));
  CHECK_THROWS_AS(predictor_quantile(fgm_uniform(-1.0), Predictor::Z2, 0.01), UnsupportedInput);

  const RegressionFunction up = psi(fgm_uniform(1.0));
  for (double t : {0.1, 0.4, 0.9}) {
    const double z = predictor_quantile(up, Marginal::uniform(), t);
    CHECK_THAT(predictor_cdf(up, Marginal::uniform(), z), WithinAbs(t, 1e-8));
  }
}

TEST_CASE("quantile-transform consistency for the Gaussian model") {
  const BivariateModel m = BivariateModel{Copula::gaussian(0.6), Marginal::normal(1.0, 2.0), Marginal::normal()};
  const RegressionFunction f = phi(m);
  RandomState rng(55);
  std::vector<double> z(100'000);
  for (double& v : z) v = f(m.draw(rng).second);
  for (int k = 1; k <= 9; ++k) {
    const double t = k / 10.0;
    const double q = predictor_quantile(m, Predictor::Z1, t);
    const double ecdf = static_cast<double>(std::count_if(z.begin(), z.end(), [&](double v) { return v <= q; })) /
                        static_cast<double>(z.size());
    CHECK_THAT(ecdf, WithinAbs(t, 0.01));
  }
}

TEST_CASE("tower property") {
  std::uint64_t seed = 60;
  for (const BivariateModel& m :
       {gaussian_model(0.4), fgm_uniform(0.8),
        BivariateModel{Copula::clayton(2.0), Marginal::exponential(1.5), Marginal::normal(0.0, 1.0)}}) {
    INFO(m.name());
    const RegressionFunction f = phi(m);
    RandomState rng(seed++);
    MeanVar mv;
    for (int i = 0; i < 100'000; ++i) mv.add(f(m.draw(rng).second));
    CHECK(std::abs(mv.mean() - m.marginal_x.mean()) <= 4.0 * mv.standard_error());
  }
}

TEST_CASE("least-squares optimality of psi") {
  const BivariateModel m = gaussian_model(0.5);
  const RegressionFunction f = psi(m);
  RandomState rng(61);
  const int n = 100'000;
  std::vector<std::pair<double, double>> xy(n);
  for (auto& p : xy) p = m.draw(rng);
  MeanVar best;
  for (const auto& [x, y] : xy) best.add((y - f(x)) * (y - f(x)));
  CHECK(std::abs(best.mean() - 0.75) <= 4.0 * best.standard_error());

  const std::array<double (*)(double), 4> rivals = {[](double x) { return x; }, [](double x) { return 0.4 * x; },
                                                     [](double x) { return 0.6 * x; },
                                                     [](double x) { return x * x; }};
  for (auto g : rivals) {
    MeanVar diff;
    for (const auto& [x, y] : xy) diff.add((y - g(x)) * (y - g(x)) - (y - f(x)) * (y - f(x)));
    CHECK(diff.mean() > 3.0 * diff.standard_error());
  }
}

TEST_CASE("kernel regression") {
  {
    RandomState rng(70);
    std::vector<double> x(10'000), y(10'000);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = normal_quantile(rng.uniform());
      y[i] = 0.5 * x[i];
    }
    CHECK_THAT(kernel_regress(x, y, 1.0), WithinAbs(0.5, 0.02));
  }
  {
    RandomState rng(71);
    std::vector<double> x(100'000), y(100'000);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.uniform();
      y[i] = Marginal::exponential().draw(rng);
    }
    const KernelRegressor k(x, y);
    for (double x0 : {0.1, 0.5, 0.9}) CHECK_THAT(k(x0), WithinAbs(mean(y), 0.02));
    CHECK_THROWS_AS(k(0.99), ExtrapolationError);
  }
  {
    const BivariateModel m = gaussian_model(0.5);
    RandomState rng(72);
    std::vector<double> x(100'000), y(100'000);
    for (std::size_t i = 0; i < x.size(); ++i) std::tie(x[i], y[i]) = m.draw(rng);
    CHECK_THAT(kernel_regress(x, y, 1.0), WithinAbs(0.5, 0.03));
  }
  std::vector<double> small(10, 1.0);
  CHECK_THROWS_AS(kernel_regress(small, small, 1.0), DomainError);
}

TEST_CASE("k-nearest-neighbour regression") {
  RandomState rng(80);
  const std::size_t n = 20'000;
  std::vector<double> a(n), b(n), t(n, 7.0), s(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.uniform();
    b[i] = rng.uniform();
    s[i] = a[i] + b[i];
  }
  CHECK(knn_regress(t, a, b, {0.3, 0.4}) == 7.0);
  CHECK_THAT(knn_regress(s, a, b, {0.3, 0.4}), WithinAbs(0.7, 0.05));

  const GaussianVector v = GaussianVector::standard_equicorrelated(3, 0.5);
  std::vector<double> x1(n), x2(n), x3(n);
  double row[3];
  for (std::size_t i = 0; i < n; ++i) {
    v.draw(rng, row);
    x1[i] = row[0];
    x2[i] = row[1];
    x3[i] = row[2];
  }
  CHECK_THAT(knn_regress(x1, x2, x3, {1.0, 1.0}), WithinAbs(2.0 / 3.0, 0.05));
  CHECK_THROWS_AS(knn_regress(std::vector<double>(10), std::vector<double>(10), std::vector<double>(10), {0, 0}),
                  DomainError);
}

TEST_CASE("gaussian conditioning examples") {
  {
    Eigen::Vector3d mu(1.0, 2.0, 3.0);
    const GaussianVector v(mu, Eigen::Matrix3d::Identity());
    const std::size_t given[] = {1, 2};
    const double values[] = {-4.0, 9.0};
    CHECK(gaussian_conditional(v, 0, given, values) == 1.0);
  }
  {
    const GaussianVector v = GaussianVector::bivariate(0.0, 0.0, 1.0, 1.0, 0.5);
    const std::size_t given[] = {1};
    const double values[] = {1.0};
    CHECK_THAT(gaussian_conditional(v, 0, given, values), WithinAbs(0.5, 1e-15));
  }
  {
    const GaussianVector v = GaussianVector::standard_equicorrelated(3, 0.5);
    const std::size_t given[] = {1, 2};
    for (auto [x2, x3] : {std::pair{1.0, 1.0}, std::pair{-0.4, 2.2}, std::pair{3.0, 0.0}}) {
      const double values[] = {x2, x3};
      CHECK_THAT(gaussian_conditional(v, 0, given, values), WithinAbs((x2 + x3) / 3.0, 1e-14));
    }
  }
  const GaussianVector v = GaussianVector::standard_equicorrelated(3, 0.5);
  const std::size_t bad[] = {0};
  const double one[] = {1.0};
  CHECK_THROWS_AS(gaussian_conditional(v, 0, bad, one), DomainError);
  CHECK_THROWS_AS(gaussian_conditional(v, 0, std::span<const std::size_t>{}, std::span<const double>{}), DomainError);
  CHECK_THROWS_AS(GaussianVector::standard_equicorrelated(3, -0.6), ConstructionError);
}

TEST_CASE("gaussian conditioning residuals are orthogonal to the conditioners") {
  Eigen::Matrix3d s;
  s << 2.0, 0.6, -0.3, 0.6, 1.0, 0.2, -0.3, 0.2, 1.5;
  const GaussianVector v(Eigen::Vector3d(0.5, -1.0, 2.0), s);
  const std::size_t given[] = {1, 2};
  const LinearPredictor p = conditional_predictor(v, 0, given);
  RandomState rng(90);
  const int n = 100'000;
  std::vector<double> resid(n), c1(n), c2(n);
  double row[3];
  for (int i = 0; i < n; ++i) {
    v.draw(rng, row);
    resid[i] = row[0] - p(row);
    c1[i] = row[1];
    c2[i] = row[2];
  }
  for (const auto* c : {&c1, &c2}) {
    MeanVar prod;
    const double mr = mean(resid);
    const double mc = mean(*c);
    for (int i = 0; i < n; ++i) prod.add((resid[i] - mr) * ((*c)[i] - mc));
    CHECK(std::abs(prod.mean()) <= 4.0 * prod.standard_error());
  }
}
