// copulas.hpp
//
// Bivariate copula families (independence, Gaussian, Farlie-Gumbel-
// Morgenstern, Clayton), conditional-distribution sampling, and the
// rank-based empirical copula with a lattice sup-distance statistic.

#ifndef CONDPRED_COPULAS_HPP
#define CONDPRED_COPULAS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "condpred/error.hpp"
#include "condpred/marginals.hpp"
#include "condpred/random.hpp"
#include "condpred/special.hpp"

namespace condpred {

struct Independence {
  bool operator==(const Independence&) const = default;
};
struct GaussianCopula {
  double rho = 0.0;
  bool operator==(const GaussianCopula&) const = default;
};
struct FgmCopula {
  double theta = 0.0;
  bool operator==(const FgmCopula&) const = default;
};
struct ClaytonCopula {
  double alpha = 1.0;
  bool operator==(const ClaytonCopula&) const = default;
};

/// A probability together with its complement, each accurate on its own.
/// Lets callers push extreme copula draws through upper-tail quantiles.
struct SplitProbability {
  double p;
  double q;  // 1 - p
};

inline SplitProbability split_probability(double p) {
  constexpr double tiny = 0x1.0p-60;
  if (p <= 0.0) return {tiny, 1.0};
  if (p >= 1.0) return {1.0, tiny};
  return {p, 1.0 - p};
}

struct CopulaDraw {
  SplitProbability u;
  SplitProbability v;
};

class Copula {
 public:
  using Family = std::variant<Independence, GaussianCopula, FgmCopula, ClaytonCopula>;

  Copula() : family_(Independence{}) {}
  Copula(Independence i) : family_(i) {}
  Copula(GaussianCopula g) : family_(g) {
    if (!(g.rho > -1.0 && g.rho < 1.0)) throw ConstructionError("gaussian copula requires -1 < rho < 1");
  }
  Copula(FgmCopula f) : family_(f) {
    if (!(f.theta >= -1.0 && f.theta <= 1.0)) throw ConstructionError("fgm copula requires -1 <= theta <= 1");
  }
  Copula(ClaytonCopula c) : family_(c) {
    if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) throw ConstructionError("clayton copula requires alpha > 0");
  }

  static Copula independence() { return Copula(Independence{}); }
  static Copula gaussian(double rho) { return Copula(GaussianCopula{rho}); }
  static Copula fgm(double theta) { return Copula(FgmCopula{theta}); }
  static Copula clayton(double alpha) { return Copula(ClaytonCopula{alpha}); }

  const Family& family() const { return family_; }
  bool operator==(const Copula&) const = default;

  bool is_independence() const { return std::holds_alternative<Independence>(family_); }

  /// Every supported family is symmetric in its arguments.
  bool is_symmetric() const { return true; }

  std::string name() const {
    std::ostringstream os;
    std::visit(Overload{[&](const Independence&) { os << "Independence"; },
                        [&](const GaussianCopula& g) { os << "Gaussian(rho=" << g.rho << ")"; },
                        [&](const FgmCopula& f) { os << "FGM(theta=" << f.theta << ")"; },
                        [&](const ClaytonCopula& c) { os << "Clayton(alpha=" << c.alpha << ")"; }},
               family_);
    return os.str();
  }

  double cdf(double u, double v) const {
    u = std::clamp(u, 0.0, 1.0);
    v = std::clamp(v, 0.0, 1.0);
    if (u == 0.0 || v == 0.0) return 0.0;
    if (u == 1.0) return v;
    if (v == 1.0) return u;
    const double value = std::visit(
        Overload{[&](const Independence&) { return u * v; },
                 [&](const GaussianCopula& g) {
                   if (g.rho == 0.0) return u * v;
                   return bivariate_normal_cdf(normal_quantile(u), normal_quantile(v), g.rho);
                 },
                 [&](const FgmCopula& f) { return u * v * (1.0 + f.theta * (1.0 - u) * (1.0 - v)); },
                 [&](const ClaytonCopula& c) {
                   const double s = std::pow(u, -c.alpha) + std::pow(v, -c.alpha) - 1.0;
                   return std::pow(s, -1.0 / c.alpha);
                 }},
        family_);
    return std::clamp(value, std::max(u + v - 1.0, 0.0), std::min(u, v));
  }

  /// Copula density c(u, v) on the open square.
  double density(double u, double v) const {
    return std::visit(
        Overload{[&](const Independence&) { return 1.0; },
                 [&](const GaussianCopula& g) {
                   const double a = normal_quantile(u);
                   const double b = normal_quantile(v);
                   return gaussian_density(a, b, g.rho);
                 },
                 [&](const FgmCopula& f) { return 1.0 + f.theta * (1.0 - 2.0 * u) * (1.0 - 2.0 * v); },
                 [&](const ClaytonCopula& c) {
                   const double s = std::pow(u, -c.alpha) + std::pow(v, -c.alpha) - 1.0;
                   const double log_c = std::log1p(c.alpha) - (c.alpha + 1.0) * (std::log(u) + std::log(v)) -
                                        (1.0 / c.alpha + 2.0) * std::log(s);
                   return std::exp(log_c);
                 }},
        family_);
  }

  /// Density evaluated from split probabilities; the Gaussian branch reads
  /// normal scores from whichever tail is accurate.
  double density(SplitProbability u, SplitProbability v) const {
    if (const auto* g = std::get_if<GaussianCopula>(&family_)) {
      return gaussian_density(split_normal_score(u), split_normal_score(v), g->rho);
    }
    return density(u.p, v.p);
  }

  /// P(V <= v | U = u), the partial derivative of C in its first argument.
  double conditional_cdf(double v, double u) const {
    return std::visit(
        Overload{[&](const Independence&) { return v; },
                 [&](const GaussianCopula& g) {
                   return normal_cdf((normal_quantile(v) - g.rho * normal_quantile(u)) /
                                     std::sqrt(1.0 - g.rho * g.rho));
                 },
                 [&](const FgmCopula& f) { return v * (1.0 + f.theta * (1.0 - 2.0 * u) * (1.0 - v)); },
                 [&](const ClaytonCopula& c) {
                   const double s = std::pow(u, -c.alpha) + std::pow(v, -c.alpha) - 1.0;
                   return std::pow(u, -c.alpha - 1.0) * std::pow(s, -1.0 / c.alpha - 1.0);
                 }},
        family_);
  }

  /// v such that conditional_cdf(v, u) = w.
  double conditional_quantile(double w, double u) const {
    return std::visit(
        Overload{[&](const Independence&) { return w; },
                 [&](const GaussianCopula& g) {
                   return normal_cdf(g.rho * normal_quantile(u) +
                                     std::sqrt(1.0 - g.rho * g.rho) * normal_quantile(w));
                 },
                 [&](const FgmCopula& f) {
                   const double a = f.theta * (1.0 - 2.0 * u);
                   if (a == 0.0) return w;
                   const double disc = (1.0 + a) * (1.0 + a) - 4.0 * a * w;
                   return 2.0 * w / ((1.0 + a) + std::sqrt(std::max(disc, 0.0)));
                 },
                 [&](const ClaytonCopula& c) {
                   const double t = std::pow(w, -c.alpha / (1.0 + c.alpha)) - 1.0;
                   return std::pow(t * std::pow(u, -c.alpha) + 1.0, -1.0 / c.alpha);
                 }},
        family_);
  }

  /// conditional_quantile with both the level and the result carried as
  /// split probabilities, accurate in either tail.
  SplitProbability conditional_quantile(SplitProbability w, SplitProbability u) const {
    return std::visit(
        Overload{[&](const Independence&) { return w; },
                 [&](const GaussianCopula& g) {
                   return normal_split(g.rho * split_normal_score(u) +
                                       std::sqrt(1.0 - g.rho * g.rho) * split_normal_score(w));
                 },
                 [&](const FgmCopula&) {
                   if (w.p <= 0.5) return split_probability(conditional_quantile(w.p, u.p));
                   const double q = conditional_quantile_complement(w.q, u.p);
                   return SplitProbability{1.0 - q, q};
                 },
                 [&](const ClaytonCopula& c) {
                   // log t, t = w^(-a/(1+a)) - 1, then log(t u^-a + 1) in log space.
                   const double log_w = w.p <= 0.5 ? std::log(w.p) : std::log1p(-w.q);
                   const double log_t = std::log(std::expm1(-c.alpha / (1.0 + c.alpha) * log_w));
                   const double log_u = u.p <= 0.5 ? std::log(u.p) : std::log1p(-u.q);
                   const double l = log_t - c.alpha * log_u;
                   const double log1p_el = l > 30.0 ? l + std::log1p(std::exp(-l)) : std::log1p(std::exp(l));
                   const double log_v = -log1p_el / c.alpha;
                   return SplitProbability{std::max(std::exp(log_v), 1e-300), std::max(-std::expm1(log_v), 1e-300)};
                 }},
        family_);
  }

  /// One draw by the conditional-distribution method; the Gaussian family
  /// maps a correlated normal pair through the normal cdf.
  CopulaDraw draw(RandomState& rng) const {
    const double w1 = rng.uniform();
    const double w2 = rng.uniform();
    if (const auto* g = std::get_if<GaussianCopula>(&family_)) {
      const double a = normal_quantile(w1);
      const double b = g->rho * a + std::sqrt(1.0 - g->rho * g->rho) * normal_quantile(w2);
      return {normal_split(a), normal_split(b)};
    }
    return {split_probability(w1), split_probability(conditional_quantile(w2, w1))};
  }

  std::pair<double, double> sample_pair(RandomState& rng) const {
    const CopulaDraw d = draw(rng);
    return {d.u.p, d.v.p};
  }

 private:
  // 1 - v for the FGM conditional quantile with upper level 1 - w = wq.
  double conditional_quantile_complement(double wq, double u) const {
    const auto& f = std::get<FgmCopula>(family_);
    const double a = f.theta * (1.0 - 2.0 * u);
    if (a == 0.0) return wq;
    // 1 - v solves x (1 - a (1 - x)) = wq, the reflected quadratic.
    const double b = 1.0 - a;
    const double disc = b * b + 4.0 * a * wq;
    return 2.0 * wq / (b + std::sqrt(std::max(disc, 0.0)));
  }

  static double gaussian_density(double a, double b, double rho) {
    const double one_minus = 1.0 - rho * rho;
    return std::exp(-(rho * rho * (a * a + b * b) - 2.0 * rho * a * b) / (2.0 * one_minus)) /
           std::sqrt(one_minus);
  }

  static SplitProbability normal_split(double z) {
    SplitProbability s{normal_cdf(z), normal_survival(z)};
    constexpr double tiny = 0x1.0p-60;
    s.p = std::max(s.p, tiny);
    s.q = std::max(s.q, tiny);
    return s;
  }

  static double split_normal_score(SplitProbability s) {
    return s.p <= 0.5 ? normal_quantile(s.p) : normal_upper_quantile(s.q);
  }

  Family family_;
};

/// Rank-based empirical copula of a paired sample. Ties are broken by
/// original index, so normalized ranks are always a permutation of
/// {1, ..., N} / (N + 1).
class EmpiricalCopula {
 public:
  EmpiricalCopula(std::span<const double> xs, std::span<const double> ys)
      : x_rank_(ranks(xs)), y_rank_(ranks(ys)) {
    if (xs.empty()) throw DomainError("empirical copula: empty sample");
    if (xs.size() != ys.size()) throw DomainError("empirical copula: coordinate lengths differ");
  }

  std::size_t size() const { return x_rank_.size(); }
  const std::vector<std::uint32_t>& x_ranks() const { return x_rank_; }
  const std::vector<std::uint32_t>& y_ranks() const { return y_rank_; }

  /// Fraction of points whose normalized ranks are componentwise <= (u, v).
  double operator()(double u, double v) const {
    if (x_rank_.empty()) throw DomainError("empirical copula: empty sample");
    const double scale = static_cast<double>(size() + 1);
    std::size_t count = 0;
    for (std::size_t i = 0; i < size(); ++i) {
      if (x_rank_[i] / scale <= u && y_rank_[i] / scale <= v) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(size());
  }

  /// Empirical copula on the lattice {0, 1/(g-1), ..., 1}^2, row-major in u.
  std::vector<double> lattice(std::size_t grid) const {
    if (grid < 2) throw DomainError("empirical copula lattice: grid must be >= 2");
    const std::uint64_t n1 = size() + 1;
    const std::uint64_t g1 = grid - 1;
    // A point contributes to every lattice node j with j/(g-1) >= r/(N+1).
    auto cell = [&](std::uint32_t r) { return static_cast<std::size_t>((r * g1 + n1 - 1) / n1); };
    std::vector<double> counts(grid * grid, 0.0);
    for (std::size_t i = 0; i < size(); ++i) {
      counts[cell(x_rank_[i]) * grid + cell(y_rank_[i])] += 1.0;
    }
    for (std::size_t a = 0; a < grid; ++a) {
      for (std::size_t b = 0; b < grid; ++b) {
        double& c = counts[a * grid + b];
        if (a > 0) c += counts[(a - 1) * grid + b];
        if (b > 0) c += counts[a * grid + b - 1];
        if (a > 0 && b > 0) c -= counts[(a - 1) * grid + b - 1];
      }
    }
    for (auto& c : counts) c /= static_cast<double>(size());
    return counts;
  }

 private:
  static std::vector<std::uint32_t> ranks(std::span<const double> values) {
    std::vector<std::uint32_t> order(values.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return values[a] < values[b]; });
    std::vector<std::uint32_t> rank(values.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) rank[order[pos]] = static_cast<std::uint32_t>(pos + 1);
    return rank;
  }

  std::vector<std::uint32_t> x_rank_;
  std::vector<std::uint32_t> y_rank_;
};

/// max over the grid x grid lattice of |C_emp(u, v) - reference(u, v)|.
template <class Reference>
double sup_distance(const EmpiricalCopula& e, const Reference& reference, std::size_t grid = 50) {
  const std::vector<double> emp = e.lattice(grid);
  const double step = 1.0 / static_cast<double>(grid - 1);
  double worst = 0.0;
  for (std::size_t a = 0; a < grid; ++a) {
    const double u = (a + 1 == grid) ? 1.0 : a * step;
    for (std::size_t b = 0; b < grid; ++b) {
      const double v = (b + 1 == grid) ? 1.0 : b * step;
      worst = std::max(worst, std::abs(emp[a * grid + b] - reference(u, v)));
    }
  }
  return worst;
}

inline double sup_distance(const EmpiricalCopula& e, const Copula& c, std::size_t grid = 50) {
  return sup_distance(e, [&](double u, double v) { return c.cdf(u, v); }, grid);
}

/// Distance to the argument-swapped copula (u, v) -> C(v, u).
inline double sup_distance_swapped(const EmpiricalCopula& e, const Copula& c, std::size_t grid = 50) {
  return sup_distance(e, [&](double u, double v) { return c.cdf(v, u); }, grid);
}

}  // namespace condpred

#endif  // CONDPRED_COPULAS_HPP
