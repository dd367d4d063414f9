// condexp.hpp
//
// Conditional-expectation engines. A BivariateModel couples two marginals
// through a copula; phi() and psi() build its regression functions
//   phi(y) = E(X | Y = y),   psi(x) = E(Y | X = x)
// either in closed form (Gaussian copula with normal marginals) or by
// quadrature tabulated on Chebyshev nodes with monotone cubic interpolation.
// Also here: generalized inverses, predictor quantiles, Nadaraya-Watson and
// k-nearest-neighbour regression, and Gaussian-vector conditioning.

#ifndef CONDPRED_CONDEXP_HPP
#define CONDPRED_CONDEXP_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "condpred/copulas.hpp"
#include "condpred/error.hpp"
#include "condpred/marginals.hpp"
#include "condpred/quadrature.hpp"
#include "condpred/random.hpp"
#include "condpred/stats.hpp"

namespace condpred {

struct BivariateModel {
  Copula copula;
  Marginal marginal_x;
  Marginal marginal_y;

  /// Swapping coordinates leaves the joint law unchanged.
  bool is_exchangeable() const { return copula.is_symmetric() && marginal_x == marginal_y; }

  double joint_cdf(double x, double y) const {
    return copula.cdf(marginal_x.cdf(x), marginal_y.cdf(y));
  }

  std::pair<double, double> draw(RandomState& rng) const {
    const CopulaDraw d = copula.draw(rng);
    return {marginal_x.quantile(d.u.p, d.u.q), marginal_y.quantile(d.v.p, d.v.q)};
  }

  std::string name() const {
    return copula.name() + " x=" + marginal_x.name() + " y=" + marginal_y.name();
  }
};

enum class Monotonicity { Increasing, Decreasing, NonMonotone };

inline const char* to_string(Monotonicity m) {
  switch (m) {
    case Monotonicity::Increasing:
      return "increasing";
    case Monotonicity::Decreasing:
      return "decreasing";
    default:
      return "non-monotone";
  }
}

inline constexpr std::size_t kRegressionNodes = 513;

/// Real function on an interval with a monotonicity flag. Either an exact
/// affine map or a tabulated piecewise-cubic Hermite interpolant (PCHIP).
/// Tabulated functions clamp their argument to the domain.
class RegressionFunction {
 public:
  static RegressionFunction affine(double slope, double intercept, Interval domain) {
    RegressionFunction f;
    f.domain_ = domain;
    f.affine_ = Affine{slope, intercept};
    f.flag_ = slope > 0.0 ? Monotonicity::Increasing
                          : (slope < 0.0 ? Monotonicity::Decreasing : Monotonicity::NonMonotone);
    return f;
  }

  /// Tabulates fn on Chebyshev-Lobatto nodes of a finite domain.
  template <class Fn>
  static RegressionFunction tabulate(const Fn& fn, Interval domain, std::size_t nodes = kRegressionNodes) {
    if (!(std::isfinite(domain.lower) && std::isfinite(domain.upper) && domain.lower < domain.upper)) {
      throw DomainError("tabulate: domain must be a finite nonempty interval");
    }
    if (nodes < 3) throw DomainError("tabulate: need at least 3 nodes");
    std::vector<double> xs(nodes);
    std::vector<double> ys(nodes);
    const double mid = 0.5 * (domain.lower + domain.upper);
    const double half = 0.5 * (domain.upper - domain.lower);
    for (std::size_t k = 0; k < nodes; ++k) {
      const double angle = std::numbers::pi * static_cast<double>(k) / static_cast<double>(nodes - 1);
      xs[k] = mid - half * std::cos(angle);
    }
    xs.front() = domain.lower;
    xs.back() = domain.upper;
    for (std::size_t k = 0; k < nodes; ++k) ys[k] = fn(xs[k]);
    return from_table(std::move(xs), std::move(ys));
  }

  /// Builds from tabulated (x, y); x strictly increasing.
  static RegressionFunction from_table(std::vector<double> xs, std::vector<double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2) throw DomainError("from_table: need >= 2 matching nodes");
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
      if (!(xs[k] < xs[k + 1])) throw DomainError("from_table: nodes must be strictly increasing");
    }
    for (const double y : ys) {
      if (!std::isfinite(y)) throw NumericalError("from_table: non-finite tabulated value");
    }
    RegressionFunction f;
    f.domain_ = Interval{xs.front(), xs.back()};
    f.flag_ = classify(ys);
    // Absorb sub-tolerance wiggles so the interpolant is monotone.
    if (f.flag_ == Monotonicity::Increasing) {
      for (std::size_t k = 1; k < ys.size(); ++k) ys[k] = std::max(ys[k], ys[k - 1]);
    } else if (f.flag_ == Monotonicity::Decreasing) {
      for (std::size_t k = 1; k < ys.size(); ++k) ys[k] = std::min(ys[k], ys[k - 1]);
    }
    f.table_ = Table{std::move(xs), std::move(ys), {}};
    f.table_->slopes = pchip_slopes(f.table_->xs, f.table_->ys);
    return f;
  }

  double operator()(double x) const {
    if (affine_) return affine_->slope * x + affine_->intercept;
    const Table& t = *table_;
    x = std::clamp(x, domain_.lower, domain_.upper);
    auto it = std::upper_bound(t.xs.begin(), t.xs.end(), x);
    std::size_t k = (it == t.xs.begin()) ? 0 : static_cast<std::size_t>(it - t.xs.begin()) - 1;
    k = std::min(k, t.xs.size() - 2);
    return hermite(t, k, x);
  }

  Interval domain() const { return domain_; }
  Monotonicity monotonicity() const { return flag_; }
  bool is_affine() const { return affine_.has_value(); }
  std::optional<std::pair<double, double>> affine_coefficients() const {
    if (!affine_) return std::nullopt;
    return std::make_pair(affine_->slope, affine_->intercept);
  }
  const std::vector<double>& nodes() const { return table_->xs; }
  const std::vector<double>& values() const { return table_->ys; }

  /// Increasing: inf{x : f(x) >= t}. Decreasing: inf{x : f(x) <= t}.
  /// Targets beyond the range map to the matching domain endpoint.
  double generalized_inverse(double t) const {
    if (flag_ == Monotonicity::NonMonotone) {
      throw UnsupportedInput("generalized_inverse: regression function is not monotone");
    }
    const bool increasing = flag_ == Monotonicity::Increasing;
    if (affine_) {
      const double x = (t - affine_->intercept) / affine_->slope;
      return std::clamp(x, domain_.lower, domain_.upper);
    }
    const Table& tab = *table_;
    const std::vector<double>& ys = tab.ys;
    if (increasing) {
      if (t <= ys.front()) return domain_.lower;
      if (t > ys.back()) return domain_.upper;
    } else {
      if (t >= ys.front()) return domain_.lower;
      if (t < ys.back()) return domain_.upper;
    }
    // First node index whose value reaches t.
    std::size_t hi = 0;
    if (increasing) {
      hi = static_cast<std::size_t>(std::lower_bound(ys.begin(), ys.end(), t) - ys.begin());
    } else {
      hi = static_cast<std::size_t>(
          std::lower_bound(ys.begin(), ys.end(), t, [](double a, double b) { return a > b; }) - ys.begin());
    }
    const std::size_t k = hi - 1;
    auto reached = [&](double x) {
      const double y = hermite(tab, k, x);
      return increasing ? y >= t : y <= t;
    };
    double lo_x = tab.xs[k];
    double hi_x = tab.xs[hi];
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (lo_x + hi_x);
      if (mid <= lo_x || mid >= hi_x) break;
      if (reached(mid)) {
        hi_x = mid;
      } else {
        lo_x = mid;
      }
    }
    return hi_x;
  }

 private:
  struct Affine {
    double slope;
    double intercept;
  };
  struct Table {
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> slopes;
  };

  static Monotonicity classify(const std::vector<double>& ys) {
    constexpr double diff_tol = 1e-9;
    const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
    const double scale = 1.0 + std::max(std::abs(*lo), std::abs(*hi));
    if (*hi - *lo <= 1e-7 * scale) return Monotonicity::NonMonotone;
    bool up = true;
    bool down = true;
    for (std::size_t k = 0; k + 1 < ys.size(); ++k) {
      const double d = ys[k + 1] - ys[k];
      if (d < -diff_tol) up = false;
      if (d > diff_tol) down = false;
    }
    if (up) return Monotonicity::Increasing;
    if (down) return Monotonicity::Decreasing;
    return Monotonicity::NonMonotone;
  }

  static std::vector<double> pchip_slopes(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::vector<double> h(n - 1);
    std::vector<double> delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      h[k] = x[k + 1] - x[k];
      delta[k] = (y[k + 1] - y[k]) / h[k];
    }
    std::vector<double> d(n, 0.0);
    if (n == 2) {
      d[0] = d[1] = delta[0];
      return d;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (delta[k - 1] * delta[k] <= 0.0) continue;
      const double w1 = 2.0 * h[k] + h[k - 1];
      const double w2 = h[k] + 2.0 * h[k - 1];
      d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
    }
    auto edge = [](double h0, double h1, double m0, double m1) {
      double s = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
      if ((s > 0.0) != (m0 > 0.0) || s == 0.0 || m0 == 0.0) {
        s = 0.0;
      } else if ((m0 > 0.0) != (m1 > 0.0) && std::abs(s) > 3.0 * std::abs(m0)) {
        s = 3.0 * m0;
      }
      return s;
    };
    d[0] = edge(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    return d;
  }

  static double hermite(const Table& t, std::size_t k, double x) {
    const double h = t.xs[k + 1] - t.xs[k];
    const double s = (x - t.xs[k]) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    return h00 * t.ys[k] + h10 * h * t.slopes[k] + h01 * t.ys[k + 1] + h11 * h * t.slopes[k + 1];
  }

  Interval domain_{0.0, 1.0};
  Monotonicity flag_ = Monotonicity::NonMonotone;
  std::optional<Affine> affine_;
  std::optional<Table> table_;
};

inline double generalized_inverse(const RegressionFunction& f, double t) { return f.generalized_inverse(t); }

namespace detail {

// E(target | conditioning coordinate at probability level u) as the
// integral over w in (0, 1) of the target quantile at the copula's
// conditional quantile. Every supported copula is symmetric, so the same
// map serves both directions.
inline double copula_conditional_mean(const Copula& c, const Marginal& target, SplitProbability u,
                                      double conditioning_value) {
  // Cut the w-range where the conditional quantile crosses fixed levels.
  static constexpr double levels[] = {1e-12, 1e-9,     1e-6,     1e-4,     1e-2,     0.1,      0.25,
                                      0.5,   0.75,     0.9,      1 - 1e-2, 1 - 1e-4, 1 - 1e-6, 1 - 1e-9};
  double cuts[std::size(levels)];
  for (std::size_t k = 0; k < std::size(levels); ++k) cuts[k] = c.conditional_cdf(levels[k], u.p);
  try {
    return integrate_probability(
        [&](double w, double one_minus_w) {
          const SplitProbability v = c.conditional_quantile(SplitProbability{w, one_minus_w}, u);
          return target.quantile(v.p, v.q);
        },
        cuts, kTailTruncation);
  } catch (const NumericalError& e) {
    std::ostringstream os;
    os << "conditional expectation quadrature failed at conditioning value " << conditioning_value << ": "
       << e.what();
    throw NumericalError(os.str());
  }
}

inline bool gaussian_normal_closed_form(const BivariateModel& m, double& rho, Normal& nx, Normal& ny) {
  const auto* g = std::get_if<GaussianCopula>(&m.copula.family());
  const auto* px = std::get_if<Normal>(&m.marginal_x.family());
  const auto* py = std::get_if<Normal>(&m.marginal_y.family());
  if (!g || !px || !py) return false;
  rho = g->rho;
  nx = *px;
  ny = *py;
  return true;
}

inline SplitProbability marginal_level(const Marginal& m, double x) {
  SplitProbability s{m.cdf(x), m.survival(x)};
  constexpr double tiny = 1e-300;
  s.p = std::max(s.p, tiny);
  s.q = std::max(s.q, tiny);
  return s;
}

}  // namespace detail

/// phi(y) = E(X | Y = y).
inline RegressionFunction phi(const BivariateModel& model, std::size_t nodes = kRegressionNodes) {
  double rho;
  Normal nx;
  Normal ny;
  if (detail::gaussian_normal_closed_form(model, rho, nx, ny)) {
    const double slope = rho * nx.sd / ny.sd;
    constexpr double inf = std::numeric_limits<double>::infinity();
    return RegressionFunction::affine(slope, nx.mean - slope * ny.mean, Interval{-inf, inf});
  }
  const Copula& c = model.copula;
  return RegressionFunction::tabulate(
      [&](double y) {
        return detail::copula_conditional_mean(c, model.marginal_x, detail::marginal_level(model.marginal_y, y), y);
      },
      model.marginal_y.truncated_support(), nodes);
}

/// psi(x) = E(Y | X = x).
inline RegressionFunction psi(const BivariateModel& model, std::size_t nodes = kRegressionNodes) {
  double rho;
  Normal nx;
  Normal ny;
  if (detail::gaussian_normal_closed_form(model, rho, nx, ny)) {
    const double slope = rho * ny.sd / nx.sd;
    constexpr double inf = std::numeric_limits<double>::infinity();
    return RegressionFunction::affine(slope, ny.mean - slope * nx.mean, Interval{-inf, inf});
  }
  const Copula& c = model.copula;
  return RegressionFunction::tabulate(
      [&](double x) {
        return detail::copula_conditional_mean(c, model.marginal_y, detail::marginal_level(model.marginal_x, x), x);
      },
      model.marginal_x.truncated_support(), nodes);
}

enum class Predictor { Z1, Z2 };

/// F^{-1}_Z(t) for Z = f(W), W ~ conditioning; requires f increasing.
inline double predictor_quantile(const RegressionFunction& f, const Marginal& conditioning, double t) {
  if (!(t > 0.0 && t < 1.0)) throw DomainError("predictor_quantile: t must lie in (0, 1)");
  if (f.monotonicity() != Monotonicity::Increasing) {
    throw UnsupportedInput(std::string("predictor_quantile: regression function is ") +
                           to_string(f.monotonicity()) + ", increasing required");
  }
  return f(conditioning.quantile(t));
}

/// F_Z(z) = F_W(f^{-1}(z)) for increasing f.
inline double predictor_cdf(const RegressionFunction& f, const Marginal& conditioning, double z) {
  if (f.monotonicity() != Monotonicity::Increasing) {
    throw UnsupportedInput("predictor_cdf: regression function must be increasing");
  }
  return conditioning.cdf(f.generalized_inverse(z));
}

/// Z1 = phi(Y) quantile is phi(F_Y^{-1}(t)); Z2 = psi(X) quantile is psi(F_X^{-1}(t)).
inline double predictor_quantile(const BivariateModel& model, Predictor which, double t) {
  if (which == Predictor::Z1) return predictor_quantile(phi(model), model.marginal_y, t);
  return predictor_quantile(psi(model), model.marginal_x, t);
}

/// Nadaraya-Watson regression with a Gaussian kernel and Silverman's
/// bandwidth 1.06 * sd * N^(-1/5). Trusted only between the 5th and 95th
/// percentiles of the conditioning sample.
class KernelRegressor {
 public:
  KernelRegressor(std::span<const double> xs, std::span<const double> ys) : xs_(xs.begin(), xs.end()), ys_(ys.begin(), ys.end()) {
    if (xs.size() != ys.size()) throw DomainError("kernel_regress: coordinate lengths differ");
    if (xs.size() < 50) throw DomainError("kernel_regress: sample size must be >= 50");
    const double sd = std::sqrt(variance(xs_));
    bandwidth_ = 1.06 * sd * std::pow(static_cast<double>(xs_.size()), -0.2);
    if (!(bandwidth_ > 0.0)) throw DomainError("kernel_regress: conditioning sample is constant");
    band_ = Interval{percentile(xs_, 0.05), percentile(xs_, 0.95)};
  }

  double bandwidth() const { return bandwidth_; }
  Interval trusted_band() const { return band_; }

  double operator()(double x0) const {
    if (!band_.contains(x0)) {
      std::ostringstream os;
      os << "kernel_regress: x0 = " << x0 << " outside [" << band_.lower << ", " << band_.upper << "]";
      throw ExtrapolationError(os.str());
    }
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      const double z = (xs_[i] - x0) / bandwidth_;
      if (std::abs(z) > 38.0) continue;
      const double w = std::exp(-0.5 * z * z);
      num += w * ys_[i];
      den += w;
    }
    return num / den;
  }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
  double bandwidth_ = 0.0;
  Interval band_{0.0, 0.0};
};

inline double kernel_regress(std::span<const double> xs, std::span<const double> ys, double x0) {
  return KernelRegressor(xs, ys)(x0);
}

/// k-nearest-neighbour regression in a standardized conditioning space,
/// k = min(ceil(N^(2/3)), N / 10).
class KnnRegressor {
 public:
  KnnRegressor(std::span<const double> target, std::vector<std::span<const double>> conditioning)
      : target_(target.begin(), target.end()) {
    const std::size_t n = target.size();
    if (n < 1000) throw DomainError("knn_regress: sample size must be >= 1000");
    if (conditioning.empty()) throw DomainError("knn_regress: need at least one conditioning coordinate");
    for (const auto& col : conditioning) {
      if (col.size() != n) throw DomainError("knn_regress: coordinate lengths differ");
      const double sd = std::sqrt(variance(col));
      const double scale = sd > 0.0 ? 1.0 / sd : 1.0;
      columns_.emplace_back(col.begin(), col.end());
      scales_.push_back(scale);
    }
    const auto k_rate = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), 2.0 / 3.0)));
    k_ = std::max<std::size_t>(1, std::min(k_rate, n / 10));
  }

  std::size_t neighbours() const { return k_; }

  double operator()(std::span<const double> point) const {
    if (point.size() != columns_.size()) throw DomainError("knn_regress: point dimension mismatch");
    const std::size_t n = target_.size();
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < columns_.size(); ++c) {
        const double z = (columns_[c][i] - point[c]) * scales_[c];
        d2 += z * z;
      }
      dist[i] = {d2, i};
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_ - 1), dist.end());
    double s = 0.0;
    for (std::size_t j = 0; j < k_; ++j) s += target_[dist[j].second];
    return s / static_cast<double>(k_);
  }

 private:
  std::vector<double> target_;
  std::vector<std::vector<double>> columns_;
  std::vector<double> scales_;
  std::size_t k_ = 1;
};

/// E(target | cond1 = point.first, cond2 = point.second) by kNN.
inline double knn_regress(std::span<const double> target, std::span<const double> cond1,
                          std::span<const double> cond2, std::pair<double, double> point) {
  KnnRegressor knn(target, {cond1, cond2});
  const double p[2] = {point.first, point.second};
  return knn(p);
}

/// Multivariate normal vector with a positive-definite covariance.
class GaussianVector {
 public:
  GaussianVector(Eigen::VectorXd mean, Eigen::MatrixXd cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    const Eigen::Index d = mean_.size();
    if (d < 1 || cov_.rows() != d || cov_.cols() != d) throw ConstructionError("gaussian vector: shape mismatch");
    const double scale = cov_.cwiseAbs().maxCoeff();
    if (!((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(scale, 1.0))) {
      throw ConstructionError("gaussian vector: covariance is not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov_);
    if (llt.info() != Eigen::Success) throw ConstructionError("gaussian vector: covariance is not positive definite");
    chol_ = llt.matrixL();
    for (Eigen::Index i = 0; i < d; ++i) {
      if (!(chol_(i, i) > 1e-12 * std::sqrt(std::max(scale, 1e-300)))) {
        throw ConstructionError("gaussian vector: covariance is not positive definite");
      }
    }
  }

  static GaussianVector bivariate(double mean1, double mean2, double sd1, double sd2, double rho) {
    Eigen::Vector2d mu(mean1, mean2);
    Eigen::Matrix2d s;
    s << sd1 * sd1, rho * sd1 * sd2, rho * sd1 * sd2, sd2 * sd2;
    return GaussianVector(mu, s);
  }

  static GaussianVector standard_equicorrelated(int d, double rho) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Constant(d, d, rho);
    s.diagonal().setOnes();
    return GaussianVector(Eigen::VectorXd::Zero(d), s);
  }

  /// Stationary AR(1) with unit variance: cov(i, j) = coef^|i-j|.
  static GaussianVector ar1(int d, double coef) {
    Eigen::MatrixXd s(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) s(i, j) = std::pow(coef, std::abs(i - j));
    }
    return GaussianVector(Eigen::VectorXd::Zero(d), s);
  }

  std::size_t dimension() const { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }

  /// Writes mean + L z into out, z from inverse-transform normals.
  void draw(RandomState& rng, std::span<double> out) const {
    const Eigen::Index d = mean_.size();
    Eigen::VectorXd z(d);
    for (Eigen::Index i = 0; i < d; ++i) z(i) = normal_quantile(rng.uniform());
    const Eigen::VectorXd x = mean_ + chol_.triangularView<Eigen::Lower>() * z;
    for (Eigen::Index i = 0; i < d; ++i) out[static_cast<std::size_t>(i)] = x(i);
  }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;
};

/// E(x_target | x_given) as intercept + weights . x_given.
struct LinearPredictor {
  std::size_t target = 0;
  std::vector<std::size_t> given;
  std::vector<double> weights;
  double intercept = 0.0;
  double residual_variance = 0.0;

  /// Prediction from the full coordinate vector.
  double operator()(std::span<const double> row) const {
    double s = intercept;
    for (std::size_t j = 0; j < given.size(); ++j) s += weights[j] * row[given[j]];
    return s;
  }

  /// Prediction from the conditioning values only, in `given` order.
  double from_values(std::span<const double> values) const {
    double s = intercept;
    for (std::size_t j = 0; j < given.size(); ++j) s += weights[j] * values[j];
    return s;
  }
};

/// Normal-equations predictor mu_t + S_tg S_gg^{-1} (x_g - mu_g). An empty
/// conditioning set predicts by the mean.
inline LinearPredictor conditional_predictor(const GaussianVector& v, std::size_t target,
                                             std::span<const std::size_t> given) {
  const std::size_t d = v.dimension();
  if (target >= d) throw DomainError("gaussian_conditional: target index out of range");
  for (const std::size_t g : given) {
    if (g >= d) throw DomainError("gaussian_conditional: conditioning index out of range");
    if (g == target) throw DomainError("gaussian_conditional: target appears in conditioning set");
  }
  LinearPredictor p;
  p.target = target;
  p.given.assign(given.begin(), given.end());
  const auto& mu = v.mean();
  const auto& s = v.covariance();
  const auto t = static_cast<Eigen::Index>(target);
  if (given.empty()) {
    p.intercept = mu(t);
    p.residual_variance = s(t, t);
    return p;
  }
  const auto k = static_cast<Eigen::Index>(given.size());
  Eigen::MatrixXd sgg(k, k);
  Eigen::VectorXd stg(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const auto ga = static_cast<Eigen::Index>(given[static_cast<std::size_t>(a)]);
    stg(a) = s(t, ga);
    for (Eigen::Index b = 0; b < k; ++b) sgg(a, b) = s(ga, static_cast<Eigen::Index>(given[static_cast<std::size_t>(b)]));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sgg);
  if (llt.info() != Eigen::Success) throw NumericalError("gaussian_conditional: singular conditioning covariance");
  const Eigen::VectorXd w = llt.solve(stg);
  p.weights.assign(w.data(), w.data() + k);
  p.intercept = mu(t);
  for (Eigen::Index a = 0; a < k; ++a) {
    p.intercept -= w(a) * mu(static_cast<Eigen::Index>(given[static_cast<std::size_t>(a)]));
  }
  p.residual_variance = s(t, t) - stg.dot(w);
  return p;
}

/// E(x_target | x_given = values); given must be nonempty.
inline double gaussian_conditional(const GaussianVector& v, std::size_t target, std::span<const std::size_t> given,
                                   std::span<const double> values) {
  if (given.empty()) throw DomainError("gaussian_conditional: conditioning set must be nonempty");
  if (values.size() != given.size()) throw DomainError("gaussian_conditional: values/given size mismatch");
  for (const double x : values) {
    if (!std::isfinite(x)) throw DomainError("gaussian_conditional: conditioning values must be finite");
  }
  return conditional_predictor(v, target, given).from_values(values);
}

}  // namespace condpred

#endif  // CONDPRED_CONDEXP_HPP
