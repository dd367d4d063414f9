#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "condpred/ordered.hpp"
#include "oracles.hpp"

using namespace condpred;
using Catch::Matchers::WithinAbs;

TEST_CASE("conditional densities of the maximum") {
  const Marginal u = Marginal::uniform();
  const Marginal e = Marginal::exponential();
  CHECK(cond_pdf_max_given_next(u, 0.5, 0.0) == 1.0);
  CHECK_THAT(cond_pdf_max_given_next(e, 2.0, 1.0), WithinAbs(std::exp(-1.0), 1e-15));
  CHECK(cond_pdf_max_given_next(u, 0.2, 0.4) == 0.0);
  CHECK(cond_pdf_max_given_second(u, 0.5, 0.0) == 1.0);
  CHECK_THAT(cond_pdf_max_given_second(u, 0.75, 0.5), WithinAbs(2.0, 1e-15));
  CHECK(cond_pdf_max_given_second(u, 0.5, 0.5) == 0.0);
  CHECK_THROWS_AS(cond_pdf_max_given_next(u, 1.5, 1.0), DomainError);
}

TEST_CASE("conditional densities integrate to one") {
  RandomState rng(1);
  for (const Marginal& m : {Marginal::uniform(), Marginal::exponential(1.0), Marginal::exponential(3.0),
                            Marginal::normal(), Marginal::uniform(-1.0, 2.0)}) {
    INFO(m.name());
    const double top = m.truncated_support().upper;
    for (int i = 0; i < 100; ++i) {
      const double x = m.quantile(0.01 + 0.98 * rng.uniform());
      const double a = oracle::integrate([&](double z) { return cond_pdf_max_given_next(m, z, x); }, x, top, 64, 20);
      const double b =
          oracle::integrate([&](double z) { return cond_pdf_max_given_second(m, z, x); }, x, top, 64, 20);
      REQUIRE_THAT(a, WithinAbs(1.0, 1e-8));
      REQUIRE_THAT(b, WithinAbs(1.0, 1e-8));
    }
  }
}

TEST_CASE("g1 and g2 examples") {
  const Marginal u = Marginal::uniform();
  const Marginal e = Marginal::exponential();
  CHECK_THAT(g1(u, 0.5), WithinAbs(0.75, 1e-15));
  CHECK_THAT(g2(u, 0.5), WithinAbs(5.0 / 6.0, 1e-15));
  CHECK_THAT(g2(u, 0.4) - g1(u, 0.4), WithinAbs(0.1, 1e-15));
  CHECK_THAT(g1(e, 2.0), WithinAbs(3.0, 1e-15));
  CHECK_THAT(g2(e, 2.0), WithinAbs(3.5, 1e-15));
  // Oracle for g2 of the exponential: int_x^inf z 2 (e^-x - e^-z) e^-z / e^-2x dz.
  const double x = 2.0;
  const double oracle_g2 = oracle::integrate(
      [&](double z) { return z * 2.0 * (std::exp(-x) - std::exp(-z)) * std::exp(-z) / std::exp(-2.0 * x); }, x,
      x + 60.0, 400, 20);
  CHECK_THAT(oracle_g2, WithinAbs(3.5, 1e-10));
  CHECK_THROWS_AS(g1(u, 1.0), DomainError);
  CHECK_THROWS_AS(g1(e, -0.5), DomainError);
}

TEST_CASE("quadrature g1/g2 agree with the closed forms") {
  for (const Marginal& m : {Marginal::uniform(), Marginal::exponential()}) {
    INFO(m.name());
    for (int k = 0; k < 50; ++k) {
      const double p = (k + 0.5) / 50.0;
      const double x = m.quantile(p);
      REQUIRE_THAT(conditional_max_mean_quadrature(m, x, 1), WithinAbs(g1(m, x), 1e-7));
      REQUIRE_THAT(conditional_max_mean_quadrature(m, x, 2), WithinAbs(g2(m, x), 1e-7));
      REQUIRE(g2(m, x) > g1(m, x));
    }
  }
}

TEST_CASE("quadrature predictor for the normal family matches an oracle") {
  const Marginal n = Marginal::normal();
  for (double x : {-1.5, 0.0, 0.7, 2.0}) {
    // E(Z | Z > x) = phi(x) / (1 - Phi(x)).
    CHECK_THAT(g1(n, x), WithinAbs(oracle::phi(x) / (1.0 - oracle::Phi(x)), 1e-8));
    const double oracle_g2 = oracle::integrate(
        [&](double z) { return z * 2.0 * (oracle::Phi(z) - oracle::Phi(x)) * oracle::phi(z); }, x, 12.0, 200, 20) /
        std::pow(1.0 - oracle::Phi(x), 2);
    CHECK_THAT(g2(n, x), WithinAbs(oracle_g2, 1e-8));
  }
}

TEST_CASE("Markov property check") {
  SECTION("uniform n=5") {
    const auto r = markov_property_check(Marginal::uniform(), 5, 1'000'000, 2);
    CHECK(r.report.satisfied);
    CHECK_FALSE(r.widened);
    for (const auto& b : r.bin_stats) CHECK(std::abs(b.target.mean() - g1(Marginal::uniform(), b.conditioning.mean())) <= 0.01);
  }
  SECTION("exponential n=5") {
    const auto r = markov_property_check(Marginal::exponential(), 5, 1'000'000, 3);
    CHECK(r.report.satisfied);
    for (const auto& b : r.bin_stats) CHECK(std::abs(b.target.mean() - (b.conditioning.mean() + 1.0)) <= 0.02);
  }
  SECTION("n=3 and a normal marginal") {
    CHECK(markov_property_check(Marginal::uniform(), 3, 200'000, 4).report.satisfied);
    CHECK(markov_property_check(Marginal::normal(), 4, 200'000, 5).report.satisfied);
  }
  SECTION("small samples widen the bins") {
    const auto r = markov_property_check(Marginal::uniform(), 4, 2000, 6);
    CHECK(r.widened);
    CHECK(r.bins * r.sub_bins * 200 <= 2000);
  }
  CHECK_THROWS_AS(markov_property_check(Marginal::uniform(), 2, 2000, 1), DomainError);
}

TEST_CASE("MSE ordering by conditioning rank") {
  for (const Marginal& m : {Marginal::uniform(), Marginal::exponential()}) {
    const auto r = mse_order_inequality(m, 5, 3, 4, 100'000, 7);
    CHECK(r.satisfied);
    CHECK(r.margin_sigmas >= 3.0);
  }
  const auto eq = mse_order_inequality(Marginal::uniform(), 5, 3, 3, 10'000, 8);
  CHECK(eq.lhs_estimate == eq.rhs_estimate);
  CHECK(eq.margin_sigmas == 0.0);
  // Uniform oracle: E Var(X_{5:5} | X_{4:5}) = E (1 - X_{4:5})^2 / 12, X_{4:5} ~ Beta(4, 2).
  const auto r = mse_order_inequality(Marginal::uniform(), 5, 3, 4, 100'000, 9);
  const double e_sq = oracle::integrate([](double x) { return (1 - x) * (1 - x) * 20 * x * x * x * (1 - x); }, 0, 1, 4, 20);
  CHECK(std::abs(r.lhs_estimate - e_sq / 12.0) < 0.001);
  CHECK(mse_order_inequality(Marginal::normal(), 4, 1, 3, 20'000, 10).satisfied);
  CHECK_THROWS_AS(mse_order_inequality(Marginal::uniform(), 5, 4, 3, 10'000, 1), DomainError);
}

TEST_CASE("window estimates near the closed forms") {
  const auto w = order_statistic_windows(Marginal::uniform(), 5, {{4, 0.5, 0.01}, {3, 0.5, 0.01}}, 1'000'000, 11);
  CHECK(std::abs(w[0].target.mean() - 0.75) <= 0.01);
  CHECK(std::abs(w[1].target.mean() - 2.5 / 3.0) <= 0.01);
  CHECK(std::abs(w[0].conditioning.mean() - 0.5) <= 0.01);
}

TEST_CASE("record extraction") {
  const std::vector<double> a = {0.3, 0.1, 0.7, 0.5, 0.9};
  const auto r = extract_records(a);
  CHECK(r.values == std::vector<double>{0.3, 0.7, 0.9});
  CHECK(r.times == std::vector<std::uint64_t>{1, 3, 5});
  CHECK(extract_records(std::vector<double>{1, 2, 3, 4}).values.size() == 4);
  const auto c = extract_records(std::vector<double>{5, 1, 2, 3});
  CHECK(c.values == std::vector<double>{5});
  CHECK(c.times == std::vector<std::uint64_t>{1});
  CHECK_THROWS_AS(extract_records(std::vector<double>{}), DomainError);
}

TEST_CASE("record extraction round trip on random sequences") {
  RandomState rng(12);
  for (int rep = 0; rep < 200; ++rep) {
    const auto xs = Marginal::normal().sample(rng, 1 + rep % 60);
    const auto r = extract_records(xs);
    REQUIRE(r.times.front() == 1);
    std::size_t next = 0;
    double running = -INFINITY;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (next < r.times.size() && r.times[next] == j + 1) {
        REQUIRE(xs[j] > running);
        REQUIRE(xs[j] == r.values[next]);
        ++next;
      } else {
        REQUIRE(xs[j] <= running);
      }
      running = std::max(running, xs[j]);
    }
    REQUIRE(next == r.times.size());
  }
}

TEST_CASE("cumulative hazard") {
  CHECK_THAT(cumulative_hazard(Marginal::exponential(), 2.0), WithinAbs(2.0, 1e-15));
  CHECK_THAT(cumulative_hazard(Marginal::uniform(), 0.5), WithinAbs(std::log(2.0), 1e-15));
  CHECK_THROWS_AS(cumulative_hazard(Marginal::exponential(), 0.0), DomainError);
  CHECK_THROWS_AS(cumulative_hazard(Marginal::uniform(), 1.0), DomainError);
}

TEST_CASE("record simulation") {
  const auto sim = simulate_records(Marginal::exponential(), 4, 20'000, 13);
  CHECK(sim.kept() + sim.discarded == 20'000);
  for (std::size_t i = 0; i < sim.kept(); ++i) {
    for (int j = 2; j <= 4; ++j) REQUIRE(sim.value(i, j) > sim.value(i, j - 1));
  }
  // X_{U(n)} of a unit exponential is Gamma(n, 1).
  MeanVar top;
  for (const double v : sim.column(4)) top.add(v);
  CHECK(std::abs(top.mean() - 4.0) <= 4.0 * top.standard_error());
  const auto again = simulate_records(Marginal::exponential(), 4, 20'000, 13, Executor(4));
  CHECK(again.values == sim.values);
  // A tiny cap forces discards, and they are counted.
  const auto capped = simulate_records(Marginal::uniform(), 4, 5000, 14, Executor{}, 10);
  CHECK(capped.discarded > 0);
  CHECK(capped.kept() + capped.discarded == 5000);
}

TEST_CASE("record gaps are unit exponential on the hazard scale") {
  const auto sim = simulate_records(Marginal::exponential(), 4, 100'000, 15);
  CHECK(record_gap_ks_pvalue(sim, Marginal::exponential(), 4) >= 0.01);
  const auto sim_u = simulate_records(Marginal::uniform(), 3, 20'000, 16);
  CHECK(record_gap_ks_pvalue(sim_u, Marginal::uniform(), 3) >= 0.01);
}

TEST_CASE("record predictor MSE") {
  const auto r = record_predictor_mse(Marginal::exponential(), 4, 1, 2, 100'000, 17);
  CHECK(r.report.satisfied);
  CHECK(r.report.margin_sigmas >= 3.0);
  // Lag-1 increments are fresh unit exponentials: the fit tracks x + 1.
  const auto& c = r.near_fit.centers();
  const auto& mu = r.near_fit.means();
  for (std::size_t b = 2; b + 2 < c.size(); ++b) CHECK(std::abs(mu[b] - (c[b] + 1.0)) <= 0.1);
  const auto r3 = record_predictor_mse(Marginal::exponential(), 3, 1, 2, 20'000, 18);
  CHECK(r3.report.satisfied);
  const auto same = record_predictor_mse(Marginal::uniform(), 3, 1, 1, 5'000, 19);
  CHECK(same.report.lhs_estimate == same.report.rhs_estimate);
  CHECK_THROWS_AS(record_predictor_mse(Marginal::exponential(), 4, 2, 1, 5'000, 1), DomainError);
  CHECK_THROWS_AS(record_predictor_mse(Marginal::exponential(), 4, 1, 2, 1'000, 1, Executor{}, 40, 4),
                  SampleSizeError);
}

TEST_CASE("binned regression") {
  std::vector<double> x(10'000), y(10'000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = static_cast<double>(i) / 10'000.0;
    y[i] = 2.0 * x[i] + 1.0;
  }
  const BinnedRegression f(x, y, 20);
  CHECK_THAT(f(0.5), WithinAbs(2.0, 1e-9));
  CHECK_THAT(f(-1.0), WithinAbs(-1.0, 1e-9));
  CHECK_THAT(f(2.0), WithinAbs(5.0, 1e-9));
  CHECK_THROWS_AS(BinnedRegression(std::vector<double>(100), std::vector<double>(100), 40), SampleSizeError);
}
