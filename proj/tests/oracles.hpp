// oracles.hpp
//
// Test-only reference computations, kept independent of the library's
// adaptive Simpson path: composite Gauss-Legendre quadrature with nodes
// computed from scratch by Newton iteration on Legendre polynomials.

#ifndef CONDPRED_TESTS_ORACLES_HPP
#define CONDPRED_TESTS_ORACLES_HPP

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

namespace oracle {

struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int n) : nodes(n), weights(n) {
    for (int i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[i] = x;
      weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }
};

/// Composite Gauss-Legendre: `panels` equal panels of an `order`-point rule.
template <class F>
double integrate(const F& f, double a, double b, int panels = 200, int order = 20) {
  static thread_local std::pair<int, GaussLegendre> cache{0, GaussLegendre(1)};
  if (cache.first != order) cache = {order, GaussLegendre(order)};
  const GaussLegendre& gl = cache.second;
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double mid = lo + 0.5 * h;
    double s = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) s += gl.weights[i] * f(mid + 0.5 * h * gl.nodes[i]);
    total += 0.5 * h * s;
  }
  return total;
}

/// Two-dimensional tensor-product version over [a, b] x [c, d].
template <class F>
double integrate2d(const F& f, double a, double b, double c, double d, int panels = 40, int order = 16) {
  return integrate([&](double x) { return integrate([&](double y) { return f(x, y); }, c, d, panels, order); }, a, b,
                   panels, order);
}

inline double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double Phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace oracle

#endif  // CONDPRED_TESTS_ORACLES_HPP
