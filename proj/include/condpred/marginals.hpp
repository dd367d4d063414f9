// marginals.hpp
//
// Univariate continuous distributions used as marginals: uniform,
// exponential and normal. Values are immutable after construction.
// Sampling is inverse-transform only.

#ifndef CONDPRED_MARGINALS_HPP
#define CONDPRED_MARGINALS_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "condpred/error.hpp"
#include "condpred/random.hpp"
#include "condpred/special.hpp"

namespace condpred {

template <class... Ts>
struct Overload : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overload(Ts...) -> Overload<Ts...>;

/// Probability mass cut from each infinite tail when a finite integration
/// range is needed.
inline constexpr double kTailTruncation = 1e-12;

struct Uniform {
  double lower = 0.0;
  double upper = 1.0;
  bool operator==(const Uniform&) const = default;
};

struct Exponential {
  double rate = 1.0;
  bool operator==(const Exponential&) const = default;
};

struct Normal {
  double mean = 0.0;
  double sd = 1.0;
  bool operator==(const Normal&) const = default;
};

struct Interval {
  double lower;
  double upper;
  bool contains(double x) const { return x >= lower && x <= upper; }
  double width() const { return upper - lower; }
};

class Marginal {
 public:
  using Family = std::variant<Uniform, Exponential, Normal>;

  Marginal(Uniform u) : family_(u) {
    if (!(u.lower < u.upper) || !std::isfinite(u.lower) || !std::isfinite(u.upper)) {
      throw ConstructionError("uniform marginal requires finite lower < upper");
    }
  }
  Marginal(Exponential e) : family_(e) {
    if (!(e.rate > 0.0) || !std::isfinite(e.rate)) {
      throw ConstructionError("exponential marginal requires rate > 0");
    }
  }
  Marginal(Normal n) : family_(n) {
    if (!(n.sd > 0.0) || !std::isfinite(n.sd) || !std::isfinite(n.mean)) {
      throw ConstructionError("normal marginal requires sd > 0");
    }
  }

  static Marginal uniform(double lower = 0.0, double upper = 1.0) {
    return Marginal(Uniform{lower, upper});
  }
  static Marginal exponential(double rate = 1.0) { return Marginal(Exponential{rate}); }
  static Marginal normal(double mean = 0.0, double sd = 1.0) { return Marginal(Normal{mean, sd}); }

  const Family& family() const { return family_; }
  bool operator==(const Marginal&) const = default;

  std::string name() const {
    std::ostringstream os;
    std::visit(Overload{[&](const Uniform& u) { os << "Uniform(" << u.lower << "," << u.upper << ")"; },
                        [&](const Exponential& e) { os << "Exponential(" << e.rate << ")"; },
                        [&](const Normal& n) { os << "Normal(" << n.mean << "," << n.sd << ")"; }},
               family_);
    return os.str();
  }

  double cdf(double x) const {
    return std::visit(
        Overload{[&](const Uniform& u) {
                   if (x <= u.lower) return 0.0;
                   if (x >= u.upper) return 1.0;
                   return (x - u.lower) / (u.upper - u.lower);
                 },
                 [&](const Exponential& e) { return x <= 0.0 ? 0.0 : -std::expm1(-e.rate * x); },
                 [&](const Normal& n) { return normal_cdf((x - n.mean) / n.sd); }},
        family_);
  }

  /// 1 - cdf(x), computed without cancellation in the upper tail.
  double survival(double x) const {
    return std::visit(
        Overload{[&](const Uniform& u) {
                   if (x <= u.lower) return 1.0;
                   if (x >= u.upper) return 0.0;
                   return (u.upper - x) / (u.upper - u.lower);
                 },
                 [&](const Exponential& e) { return x <= 0.0 ? 1.0 : std::exp(-e.rate * x); },
                 [&](const Normal& n) { return normal_survival((x - n.mean) / n.sd); }},
        family_);
  }

  double pdf(double x) const {
    return std::visit(
        Overload{[&](const Uniform& u) {
                   return (x < u.lower || x > u.upper) ? 0.0 : 1.0 / (u.upper - u.lower);
                 },
                 [&](const Exponential& e) { return x < 0.0 ? 0.0 : e.rate * std::exp(-e.rate * x); },
                 [&](const Normal& n) { return normal_pdf((x - n.mean) / n.sd) / n.sd; }},
        family_);
  }

  /// inf{x : cdf(x) >= p} for p in (0, 1).
  double quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in (0, 1)");
    return std::visit(
        Overload{[&](const Uniform& u) { return u.lower + p * (u.upper - u.lower); },
                 [&](const Exponential& e) { return -std::log1p(-p) / e.rate; },
                 [&](const Normal& n) { return n.mean + n.sd * normal_quantile(p); }},
        family_);
  }

  /// x with survival(x) = q, for q in (0, 1).
  double upper_quantile(double q) const {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("upper_quantile: q must lie in (0, 1)");
    return std::visit(
        Overload{[&](const Uniform& u) { return u.upper - q * (u.upper - u.lower); },
                 [&](const Exponential& e) { return -std::log(q) / e.rate; },
                 [&](const Normal& n) { return n.mean + n.sd * normal_upper_quantile(q); }},
        family_);
  }

  /// Quantile at p given both p and 1 - p; uses whichever tail is accurate.
  double quantile(double p, double one_minus_p) const {
    return p <= 0.5 ? quantile(p) : upper_quantile(one_minus_p);
  }

  double mean() const {
    return std::visit(Overload{[](const Uniform& u) { return 0.5 * (u.lower + u.upper); },
                               [](const Exponential& e) { return 1.0 / e.rate; },
                               [](const Normal& n) { return n.mean; }},
                      family_);
  }

  double variance() const {
    return std::visit(
        Overload{[](const Uniform& u) { return (u.upper - u.lower) * (u.upper - u.lower) / 12.0; },
                 [](const Exponential& e) { return 1.0 / (e.rate * e.rate); },
                 [](const Normal& n) { return n.sd * n.sd; }},
        family_);
  }

  Interval support() const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return std::visit(Overload{[](const Uniform& u) { return Interval{u.lower, u.upper}; },
                               [&](const Exponential&) { return Interval{0.0, inf}; },
                               [&](const Normal&) { return Interval{-inf, inf}; }},
                      family_);
  }

  /// Support with infinite ends replaced by the 1e-12 tail quantiles.
  Interval truncated_support() const {
    Interval s = support();
    if (!std::isfinite(s.lower)) s.lower = quantile(kTailTruncation);
    if (!std::isfinite(s.upper)) s.upper = upper_quantile(kTailTruncation);
    return s;
  }

  double draw(RandomState& rng) const { return quantile(rng.uniform()); }

  std::vector<double> sample(RandomState& rng, std::size_t n) const {
    std::vector<double> out(n);
    for (auto& x : out) x = draw(rng);
    return out;
  }

 private:
  Family family_;
};

}  // namespace condpred

#endif  // CONDPRED_MARGINALS_HPP
