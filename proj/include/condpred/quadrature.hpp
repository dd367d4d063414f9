// quadrature.hpp
//
// Adaptive Simpson integration plus a probability-space helper that maps
// (eps, 1 - eps) through a smoothing substitution so integrands with
// logarithmic or square-root-log blowups at 0 and 1 (quantile functions of
// unbounded marginals) converge under the Simpson error estimate.

#ifndef CONDPRED_QUADRATURE_HPP
#define CONDPRED_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "condpred/error.hpp"

namespace condpred {

struct QuadratureOptions {
  double abs_tol = 1e-9;
  int max_depth = 60;
  int initial_panels = 8;
  std::size_t max_evaluations = 20'000'000;
};

namespace detail {

template <class F>
class AdaptiveSimpson {
 public:
  AdaptiveSimpson(const F& f, const QuadratureOptions& opts) : f_(f), opts_(opts) {}

  double run(double a, double b) {
    const int panels = opts_.initial_panels > 0 ? opts_.initial_panels : 1;
    const double width = (b - a) / panels;
    const double eps = opts_.abs_tol / panels;
    double total = 0.0;
    double fa = eval(a);
    for (int p = 0; p < panels; ++p) {
      const double lo = a + p * width;
      const double hi = (p + 1 == panels) ? b : lo + width;
      const double mid = 0.5 * (lo + hi);
      const double fm = eval(mid);
      const double fb = eval(hi);
      const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
      total += step(lo, hi, eps, whole, fa, fm, fb, opts_.max_depth);
      fa = fb;
    }
    return total;
  }

  bool converged() const { return !unconverged_; }
  std::size_t evaluations() const { return evaluations_; }

 private:
  double eval(double x) {
    if (++evaluations_ > opts_.max_evaluations) {
      throw NumericalError("adaptive Simpson: evaluation budget exhausted");
    }
    const double y = f_(x);
    if (!std::isfinite(y)) {
      std::ostringstream os;
      os << "adaptive Simpson: non-finite integrand at x = " << x;
      throw NumericalError(os.str());
    }
    return y;
  }

  double step(double a, double b, double eps, double whole, double fa, double fm, double fb,
              int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = eval(lm);
    const double frm = eval(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    if (depth <= 0 || m <= a || m >= b) {
      unconverged_ = true;
      return left + right + delta / 15.0;
    }
    return step(a, m, eps / 2.0, left, fa, flm, fm, depth - 1) +
           step(m, b, eps / 2.0, right, fm, frm, fb, depth - 1);
  }

  const F& f_;
  QuadratureOptions opts_;
  std::size_t evaluations_ = 0;
  bool unconverged_ = false;
};

}  // namespace detail

/// Integral of f over [a, b]. Throws NumericalError if any subinterval
/// fails the error test at max depth.
template <class F>
double integrate(const F& f, double a, double b, const QuadratureOptions& opts = {}) {
  if (a == b) return 0.0;
  if (b < a) return -integrate(f, b, a, opts);
  detail::AdaptiveSimpson<F> engine(f, opts);
  const double value = engine.run(a, b);
  if (!engine.converged()) {
    std::ostringstream os;
    os << "adaptive Simpson did not converge on [" << a << ", " << b << "]";
    throw NumericalError(os.str());
  }
  return value;
}

/// Integral over u in (eps, 1 - eps) of g(u, 1 - u). The second argument is
/// computed without cancellation, so g can evaluate upper-tail quantiles
/// accurately. Uses u = s^2 (3 - 2 s), du = 6 s (1 - s) ds. Optional
/// breakpoints (u-levels) split the range so narrow features are not
/// stepped over by the initial panels.
template <class G>
double integrate_probability(const G& g, std::span<const double> breakpoints, double eps = 1e-12,
                             const QuadratureOptions& opts = {}) {
  // Inverse of the cubic: s = 1/2 - sin(asin(1 - 2u) / 3).
  auto to_s = [](double u) { return 0.5 - std::sin(std::asin(1.0 - 2.0 * u) / 3.0); };
  // Newton polish of the lower limit, which the closed form loses to cancellation.
  double s_lo = std::sqrt(eps / 3.0);
  for (int i = 0; i < 4; ++i) {
    const double val = s_lo * s_lo * (3.0 - 2.0 * s_lo) - eps;
    s_lo -= val / (6.0 * s_lo * (1.0 - s_lo));
  }
  const double s_hi = 1.0 - s_lo;
  std::vector<double> cuts{s_lo};
  for (const double u : breakpoints) {
    const double s = to_s(std::clamp(u, 0.0, 1.0));
    if (s > s_lo && s < s_hi) cuts.push_back(s);
  }
  cuts.push_back(s_hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto integrand = [&g](double s) {
    const double t = 1.0 - s;
    const double u = s * s * (3.0 - 2.0 * s);
    const double one_minus_u = t * t * (1.0 + 2.0 * s);
    return g(u, one_minus_u) * 6.0 * s * t;
  };
  QuadratureOptions piece = opts;
  piece.abs_tol = opts.abs_tol / static_cast<double>(cuts.size() - 1);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) total += integrate(integrand, cuts[k], cuts[k + 1], piece);
  return total;
}

template <class G>
double integrate_probability(const G& g, double eps = 1e-12, const QuadratureOptions& opts = {}) {
  return integrate_probability(g, std::span<const double>{}, eps, opts);
}

}  // namespace condpred

#endif  // CONDPRED_QUADRATURE_HPP
