#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "condpred/theorems.hpp"
#include "oracles.hpp"

using namespace condpred;
using Catch::Matchers::WithinAbs;

namespace {

constexpr std::uint64_t kN = 100'000;

bool within_sigmas(const MeanVar& mv, double target, double k = 4.0) {
  return std::abs(mv.mean() - target) <= k * mv.standard_error();
}

bool same_report(const InequalityReport& a, const InequalityReport& b) {
  return a.name == b.name && a.lhs_estimate == b.lhs_estimate && a.rhs_estimate == b.rhs_estimate &&
         a.paired_diff_se == b.paired_diff_se && a.n_samples == b.n_samples && a.satisfied == b.satisfied &&
         a.margin_sigmas == b.margin_sigmas;
}

}  // namespace

TEST_CASE("report verdict rule") {
  const auto r = InequalityReport::make("x", 1.0, 0.9, 0.05, 1000, 1);
  CHECK(r.satisfied);
  CHECK_THAT(r.margin_sigmas, WithinAbs(-2.0, 1e-12));
  CHECK_FALSE(InequalityReport::make("x", 1.0, 0.8, 0.05, 1000, 1).satisfied);
  const auto eq = InequalityReport::make("x", 2.0, 2.0, 0.0, 1000, 1);
  CHECK(eq.satisfied);
  CHECK(eq.margin_sigmas == 0.0);
}

TEST_CASE("theorem 1 examples") {
  SECTION("n = 1 is an identical computation") {
    const auto r = verify_theorem1(JointCopiesModel::equicorrelated(1, 0.0, 0.5), kN, 3);
    CHECK(r.lhs_estimate == r.rhs_estimate);
    CHECK(r.margin_sigmas == 0.0);
    CHECK(r.satisfied);
  }
  SECTION("comonotone copies") {
    const auto r = verify_theorem1(JointCopiesModel::comonotone(4, 0.5), kN, 4);
    CHECK(r.lhs_estimate == r.rhs_estimate);
    CHECK(r.paired_diff_se == 0.0);
    CHECK(r.margin_sigmas == 0.0);
  }
  SECTION("Gaussian copies n=3, rho_xx=0.3, rho_xy=0.5") {
    const int n = 3;
    const double rxx = 0.3, rxy = 0.5;
    const auto r = verify_theorem1(JointCopiesModel::equicorrelated(n, rxx, rxy), kN, 5);
    CHECK(r.satisfied);
    CHECK(r.margin_sigmas >= 3.0);
    // E(Y - rho mean X)^2 = 1 - 2 rho^2 + rho^2 (1 + (n-1) rho_xx) / n, and 1 - rho^2.
    const double lhs = 1.0 - 2.0 * rxy * rxy + rxy * rxy * (1.0 + (n - 1) * rxx) / n;
    CHECK(std::abs(r.lhs_estimate - lhs) < 0.02);
    CHECK(std::abs(r.rhs_estimate - (1.0 - rxy * rxy)) < 0.02);
  }
  SECTION("conditionally iid construction") {
    const auto r = verify_theorem1(JointCopiesModel::conditional_iid(4, 0.6), kN, 6);
    CHECK(r.satisfied);
    CHECK(r.margin_sigmas >= 3.0);
  }
  CHECK_THROWS_AS(JointCopiesModel::equicorrelated(5, 0.0, 0.5), ConstructionError);
  CHECK_THROWS_AS(verify_theorem1(JointCopiesModel::equicorrelated(2, 0.0, 0.5), 10, 1), DomainError);
}

TEST_CASE("theorem 2 examples") {
  {
    const auto r = verify_theorem2(JointCopiesModel::equicorrelated(1, 0.0, 0.3), kN, 7);
    CHECK(r.lhs_estimate == r.rhs_estimate);
  }
  {
    const auto r = verify_theorem2(JointCopiesModel::equicorrelated(4, 0.0, 0.0), kN, 8);
    CHECK(r.satisfied);
    CHECK(std::abs(r.lhs_estimate - 1.25) < 0.03);
    CHECK(std::abs(r.rhs_estimate - 2.0) < 0.04);
  }
  {
    const auto r = verify_theorem2(JointCopiesModel::comonotone(3, 0.7), kN, 9);
    CHECK(r.lhs_estimate == r.rhs_estimate);
    CHECK(r.margin_sigmas == 0.0);
  }
}

TEST_CASE("theorem reports do not depend on the worker count") {
  const auto m = JointCopiesModel::equicorrelated(3, 0.3, 0.5);
  CHECK(same_report(verify_theorem1(m, 50'000, 11, Executor(1)), verify_theorem1(m, 50'000, 11, Executor(8))));
  CHECK(same_report(verify_theorem2(m, 50'000, 11, Executor(1)), verify_theorem2(m, 50'000, 11, Executor(3))));
}

TEST_CASE("theorem 3 examples") {
  SECTION("equicorrelated rho = 0.5") {
    const double rho = 0.5;
    const auto r = verify_theorem3(GaussianVector::standard_equicorrelated(3, rho), kN, 12);
    const double oracle_both = 1.0 - 2.0 * rho * rho / (1.0 + rho);
    CHECK_THAT(r.closed_both, WithinAbs(oracle_both, 1e-14));
    CHECK_THAT(r.closed_first, WithinAbs(1.0 - rho * rho, 1e-14));
    CHECK(within_sigmas(r.mse_both, oracle_both));
    CHECK(within_sigmas(r.mse_first, 0.75));
    CHECK(r.report.satisfied);
    CHECK(r.report.margin_sigmas >= 3.0);
  }
  SECTION("redundant conditioner") {
    Eigen::Matrix3d s;
    s << 1.0, 0.6, 0.0, 0.6, 1.0, 0.0, 0.0, 0.0, 1.0;
    const auto r = verify_theorem3(GaussianVector(Eigen::Vector3d::Zero(), s), kN, 13);
    CHECK(r.report.satisfied);
    CHECK(std::abs(r.report.lhs_estimate - r.report.rhs_estimate) < 1e-12);
  }
  SECTION("Z equal to Y") {
    const auto r = verify_theorem3_duplicate(GaussianVector::bivariate(0, 0, 1, 1, 0.4), kN, 14);
    CHECK(r.report.lhs_estimate == r.report.rhs_estimate);
    CHECK(r.report.margin_sigmas == 0.0);
  }
}

TEST_CASE("corollary chain on an AR(1) vector") {
  const double a = 0.6;
  const auto v = GaussianVector::ar1(4, a);
  const auto r = verify_corollary_chain(v, 3, {{0}, {0, 1}, {0, 1, 2}}, kN, 15);
  // Markov: only the latest conditioner matters, residual 1 - a^(2 gap).
  const double oracle[] = {1.0 - std::pow(a, 6), 1.0 - std::pow(a, 4), 1.0 - std::pow(a, 2)};
  for (int k = 0; k < 3; ++k) {
    CHECK_THAT(r.closed_form[k], WithinAbs(oracle[k], 1e-12));
    CHECK(within_sigmas(r.mse[k], oracle[k]));
  }
  REQUIRE(r.reports.size() == 2);
  for (const auto& rep : r.reports) CHECK(rep.satisfied);

  const auto dup = verify_corollary_chain(v, 3, {{0, 1, 2}, {0, 1, 2}}, kN, 16);
  CHECK(dup.reports[0].lhs_estimate == dup.reports[0].rhs_estimate);

  const auto empty = verify_corollary_chain(v, 3, {{}, {2}}, kN, 17);
  CHECK(empty.reports[0].satisfied);
  CHECK(empty.closed_form[0] == 1.0);

  CHECK_THROWS_AS(verify_corollary_chain(v, 3, {{0, 1}, {1, 2}}, kN, 1), DomainError);
  CHECK_THROWS_AS(verify_corollary_chain(v, 3, {{3}}, kN, 1), DomainError);
}

TEST_CASE("corollary chain with kNN regression") {
  auto sampler = [](RandomState& rng, std::span<double> row) {
    row[0] = 2.0 * rng.uniform() - 1.0;
    row[1] = 2.0 * rng.uniform() - 1.0;
    row[2] = row[0] + row[1] * row[1] + 0.1 * normal_quantile(rng.uniform());
  };
  const auto r = verify_corollary_chain_knn(sampler, 3, 2, {{}, {0}, {0, 1}}, 5000, 18, 5000);
  for (const auto& rep : r.reports) CHECK(rep.satisfied);
  // Var(x1^2) = 4/45 is what remains after conditioning on x0 alone.
  CHECK(std::abs(r.mse[1].mean() - (4.0 / 45.0 + 0.01)) < 0.02);
}

TEST_CASE("covariance identity") {
  {
    const BivariateModel m{Copula::gaussian(0.5), Marginal::normal(), Marginal::normal()};
    const auto r = verify_covariance_identity(m, kN, 19);
    CHECK(within_sigmas(r.cov_phi_y, 0.5));
    CHECK(within_sigmas(r.cov_psi_x, 0.5));
    CHECK(within_sigmas(r.cov_xy, 0.5));
    for (const auto& rep : r.reports) CHECK(rep.satisfied);
  }
  {
    const BivariateModel m{Copula::independence(), Marginal::exponential(), Marginal::uniform()};
    const auto r = verify_covariance_identity(m, kN, 20);
    CHECK(within_sigmas(r.cov_phi_y, 0.0));
    CHECK(within_sigmas(r.cov_xy, 0.0));
    for (const auto& rep : r.reports) CHECK(rep.satisfied);
  }
  {
    // Hoeffding: Cov(U, V) = int int (C - uv) du dv.
    const Copula c = Copula::fgm(1.0);
    const double oracle_cov =
        oracle::integrate2d([&](double u, double v) { return c.cdf(u, v) - u * v; }, 0.0, 1.0, 0.0, 1.0, 8, 10);
    CHECK_THAT(oracle_cov, WithinAbs(1.0 / 36.0, 1e-14));
    const auto r = verify_covariance_identity({c, Marginal::uniform(), Marginal::uniform()}, kN, 21);
    for (const auto& rep : r.reports) CHECK(rep.satisfied);
    CHECK(within_sigmas(r.cov_xy, oracle_cov));
  }
}

TEST_CASE("covariance counterexample") {
  const auto [z, xy] = covariance_counterexample(GaussianVector::bivariate(0, 0, 1, 1, 0.5));
  CHECK(z == 0.125);
  CHECK(xy == 0.5);
  const auto [z1, xy1] = covariance_counterexample(1.0);
  CHECK(z1 == xy1);
  const auto [z0, xy0] = covariance_counterexample(0.0);
  CHECK(z0 == 0.0);
  CHECK(xy0 == 0.0);
  // Monte Carlo cross-check of the 0.125 value.
  const auto v = GaussianVector::bivariate(0, 0, 1, 1, 0.5);
  RandomState rng(22);
  MeanVar prod;
  double row[2];
  for (int i = 0; i < 100'000; ++i) {
    v.draw(rng, row);
    prod.add(0.5 * row[1] * 0.5 * row[0]);
  }
  CHECK(within_sigmas(prod, 0.125));
}

TEST_CASE("copula swap theorem") {
  {
    const BivariateModel m{Copula::gaussian(0.5), Marginal::normal(), Marginal::normal()};
    const auto r = verify_copula_theorem(m, kN, 23);
    CHECK(r.distance_swapped <= 0.02);
    REQUIRE(r.distance_direct);
    CHECK(*r.distance_direct <= 0.02);
    for (const auto& rep : r.reports) CHECK(rep.satisfied);
  }
  {
    const BivariateModel m{Copula::clayton(2.0), Marginal::uniform(), Marginal::uniform()};
    const auto r = verify_copula_theorem(m, kN, 24);
    CHECK(r.distance_swapped <= 0.02);
    REQUIRE(r.distance_direct);
    CHECK(*r.distance_direct <= 0.02);
  }
  {
    const BivariateModel m{Copula::gaussian(0.5), Marginal::normal(), Marginal::exponential()};
    const auto r = verify_copula_theorem(m, kN, 25);
    CHECK_FALSE(r.distance_direct);
    CHECK(r.distance_swapped <= 0.02);
  }
  const BivariateModel indep{Copula::independence(), Marginal::normal(), Marginal::normal()};
  CHECK_THROWS_AS(verify_copula_theorem(indep, kN, 1), UnsupportedInput);
}

TEST_CASE("predicted sequence statistics") {
  {
    const BivariateModel m{Copula::gaussian(0.6), Marginal::normal(), Marginal::normal()};
    const auto r = predicted_sequence_stats(m, kN, 26);
    CHECK(within_sigmas(r.cov_y, 0.6));
    for (const auto& rep : r.reports) CHECK(rep.satisfied);
  }
  {
    const BivariateModel m{Copula::independence(), Marginal::uniform(), Marginal::uniform()};
    const auto r = predicted_sequence_stats(m, kN, 27);
    CHECK(std::abs(r.cov_y.mean()) < 1e-8);
    CHECK(std::abs(r.mean_y2.mean() - 0.5) < 1e-8);
  }
  {
    const BivariateModel m{Copula::fgm(-1.0), Marginal::uniform(), Marginal::uniform()};
    const auto r = predicted_sequence_stats(m, kN, 28);
    for (const auto& rep : r.reports) CHECK(rep.satisfied);
  }
}

TEST_CASE("martingale check") {
  const auto r = martingale_check(5, {{1, 2, 3, 4, 5}, {3}, {}, {1}, {5}}, kN, 29);
  CHECK(within_sigmas(r.full, 1.0));
  CHECK(r.reports[0].lhs_estimate == r.reports[0].rhs_estimate);
  CHECK(within_sigmas(r.subset[1], 3.0));
  CHECK(within_sigmas(r.subset[2], 6.0));
  CHECK(within_sigmas(r.subset[3], 5.0));
  CHECK(within_sigmas(r.subset[4], 1.0));
  CHECK(r.closed_form == std::vector<double>{1, 3, 6, 5, 1});
  for (const auto& rep : r.reports) CHECK(rep.satisfied);
  CHECK(r.reports[1].margin_sigmas > 10.0);
  CHECK_THROWS_AS(martingale_check(5, {{6}}, kN, 1), DomainError);
}
