// theorems.hpp
//
// Monte Carlo verification of the MSE inequalities and covariance
// identities. Every estimate is paired: both sides of an inequality are
// evaluated on the same draws, and per-chunk accumulators are merged in
// chunk order so a report depends only on (model, n_samples, seed).

#ifndef CONDPRED_THEOREMS_HPP
#define CONDPRED_THEOREMS_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "condpred/condexp.hpp"
#include "condpred/copulas.hpp"
#include "condpred/error.hpp"
#include "condpred/parallel.hpp"
#include "condpred/random.hpp"
#include "condpred/stats.hpp"

namespace condpred {

inline constexpr std::uint64_t kMinSamples = 1000;

inline void require_samples(std::uint64_t n_samples, const char* who) {
  if (n_samples < kMinSamples) {
    throw DomainError(std::string(who) + ": n_samples must be >= 1000");
  }
}

/// Paired estimate of lhs <= rhs with a 3-SE one-sided slack.
struct InequalityReport {
  std::string name;
  double lhs_estimate = 0.0;
  double rhs_estimate = 0.0;
  double paired_diff_se = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;
  bool satisfied = false;
  double margin_sigmas = 0.0;

  static InequalityReport make(std::string name, double lhs, double rhs, double se, std::uint64_t n,
                               std::uint64_t seed) {
    InequalityReport r;
    r.name = std::move(name);
    r.lhs_estimate = lhs;
    r.rhs_estimate = rhs;
    r.paired_diff_se = se;
    r.n_samples = n;
    r.seed = seed;
    r.satisfied = lhs <= rhs + 3.0 * se;
    r.margin_sigmas = se > 0.0 ? (rhs - lhs) / se : 0.0;
    return r;
  }

  static InequalityReport paired(std::string name, const PairedAccumulator& acc, std::uint64_t seed) {
    return make(std::move(name), acc.lhs.mean(), acc.rhs.mean(), acc.diff.standard_error(), acc.diff.count(), seed);
  }

  /// Two-sided identity E(a) = E(b) on paired draws: |mean diff| <= 4 SE.
  static InequalityReport identity(std::string name, const MeanVar& diff, std::uint64_t seed) {
    return make(std::move(name), std::abs(diff.mean()), 4.0 * diff.standard_error(), 0.0, diff.count(), seed);
  }

  /// A deterministic statistic checked against a fixed tolerance.
  static InequalityReport bound(std::string name, double value, double tolerance, std::uint64_t n,
                                std::uint64_t seed) {
    return make(std::move(name), value, tolerance, 0.0, n, seed);
  }
};

namespace detail {

inline std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

template <class Acc>
struct AccVector {
  std::vector<Acc> items;
  void merge(const AccVector& o) {
    if (items.empty()) items.resize(o.items.size());
    for (std::size_t k = 0; k < o.items.size(); ++k) items[k].merge(o.items[k]);
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Joint copies (Y, X_1, ..., X_n).

enum class CopiesConstruction { Equicorrelated, ConditionalIid, Comonotone };

inline const char* to_string(CopiesConstruction c) {
  switch (c) {
    case CopiesConstruction::Equicorrelated:
      return "equicorrelated";
    case CopiesConstruction::ConditionalIid:
      return "conditional_iid";
    default:
      return "comonotone";
  }
}

/// Gaussian target Y and n identically distributed copies X_i with common
/// correlation rho_xy to Y. The copies are either equicorrelated (rho_xx),
/// conditionally iid given Y (X_i = beta Y + eps_i, so rho_xx = rho_xy^2),
/// or all equal to one X.
class JointCopiesModel {
 public:
  struct Params {
    int n = 1;
    double rho_xx = 0.0;
    double rho_xy = 0.0;
    double mean_x = 0.0;
    double sd_x = 1.0;
    double mean_y = 0.0;
    double sd_y = 1.0;
    CopiesConstruction construction = CopiesConstruction::Equicorrelated;
  };

  explicit JointCopiesModel(Params p) : p_(p) {
    if (p_.n < 1) throw ConstructionError("copies model: n must be >= 1");
    if (!(p_.sd_x > 0.0) || !(p_.sd_y > 0.0)) throw ConstructionError("copies model: sd must be > 0");
    if (!(std::abs(p_.rho_xy) <= 1.0)) throw ConstructionError("copies model: rho_xy must lie in [-1, 1]");
    switch (p_.construction) {
      case CopiesConstruction::Equicorrelated: {
        if (!(std::abs(p_.rho_xx) <= 1.0)) throw ConstructionError("copies model: rho_xx must lie in [-1, 1]");
        const int d = p_.n + 1;
        Eigen::MatrixXd s(d, d);
        for (int i = 0; i < d; ++i) {
          for (int j = 0; j < d; ++j) {
            if (i == j) {
              s(i, j) = i == 0 ? p_.sd_y * p_.sd_y : p_.sd_x * p_.sd_x;
            } else if (i == 0 || j == 0) {
              s(i, j) = p_.rho_xy * p_.sd_x * p_.sd_y;
            } else {
              s(i, j) = p_.rho_xx * p_.sd_x * p_.sd_x;
            }
          }
        }
        Eigen::VectorXd mu = Eigen::VectorXd::Constant(d, p_.mean_x);
        mu(0) = p_.mean_y;
        try {
          vector_.emplace(mu, s);
        } catch (const ConstructionError&) {
          std::ostringstream os;
          os << "copies model: covariance for n=" << p_.n << ", rho_xx=" << p_.rho_xx << ", rho_xy=" << p_.rho_xy
             << " is not positive definite";
          throw ConstructionError(os.str());
        }
        break;
      }
      case CopiesConstruction::ConditionalIid:
        p_.rho_xx = p_.rho_xy * p_.rho_xy;
        break;
      case CopiesConstruction::Comonotone:
        p_.rho_xx = 1.0;
        break;
    }
  }

  static JointCopiesModel equicorrelated(int n, double rho_xx, double rho_xy) {
    return JointCopiesModel(Params{n, rho_xx, rho_xy, 0.0, 1.0, 0.0, 1.0, CopiesConstruction::Equicorrelated});
  }
  static JointCopiesModel conditional_iid(int n, double rho_xy) {
    return JointCopiesModel(Params{n, 0.0, rho_xy, 0.0, 1.0, 0.0, 1.0, CopiesConstruction::ConditionalIid});
  }
  static JointCopiesModel comonotone(int n, double rho_xy) {
    return JointCopiesModel(Params{n, 1.0, rho_xy, 0.0, 1.0, 0.0, 1.0, CopiesConstruction::Comonotone});
  }

  const Params& params() const { return p_; }
  int copies() const { return p_.n; }

  std::string name() const {
    std::ostringstream os;
    os << "n=" << p_.n << ",rho_xx=" << p_.rho_xx << ",rho_xy=" << p_.rho_xy;
    if (p_.construction != CopiesConstruction::Equicorrelated) os << "," << to_string(p_.construction);
    return os.str();
  }

  /// E(Y | X_i = x), shared by every copy.
  double regression(double x) const {
    return p_.mean_y + p_.rho_xy * p_.sd_y / p_.sd_x * (x - p_.mean_x);
  }

  /// Writes (Y, X_1, ..., X_n) into out.
  void draw(RandomState& rng, std::span<double> out) const {
    switch (p_.construction) {
      case CopiesConstruction::Equicorrelated:
        vector_->draw(rng, out);
        return;
      case CopiesConstruction::ConditionalIid: {
        const double zy = normal_quantile(rng.uniform());
        out[0] = p_.mean_y + p_.sd_y * zy;
        const double noise = std::sqrt(1.0 - p_.rho_xy * p_.rho_xy);
        for (int i = 1; i <= p_.n; ++i) {
          out[static_cast<std::size_t>(i)] = p_.mean_x + p_.sd_x * (p_.rho_xy * zy + noise * normal_quantile(rng.uniform()));
        }
        return;
      }
      case CopiesConstruction::Comonotone: {
        const double zy = normal_quantile(rng.uniform());
        const double zx = p_.rho_xy * zy + std::sqrt(1.0 - p_.rho_xy * p_.rho_xy) * normal_quantile(rng.uniform());
        out[0] = p_.mean_y + p_.sd_y * zy;
        const double x = p_.mean_x + p_.sd_x * zx;
        for (int i = 1; i <= p_.n; ++i) out[static_cast<std::size_t>(i)] = x;
        return;
      }
    }
  }

 private:
  Params p_;
  std::optional<GaussianVector> vector_;
};

namespace detail {

template <class Term>
PairedAccumulator run_copies(const JointCopiesModel& model, std::uint64_t n_samples, std::uint64_t seed,
                             const Executor& exec, const Term& term) {
  const RandomState root(seed);
  const auto parts = map_chunks<PairedAccumulator>(n_samples, root, exec, [&](RandomState& rng, std::size_t,
                                                                             std::size_t count) {
    PairedAccumulator acc;
    std::vector<double> row(static_cast<std::size_t>(model.copies()) + 1);
    std::vector<double> scratch(static_cast<std::size_t>(model.copies()));
    for (std::size_t i = 0; i < count; ++i) {
      model.draw(rng, row);
      const auto [a, b] = term(row, scratch);
      acc.add(a, b);
    }
    return acc;
  });
  return merge_in_order(parts);
}

}  // namespace detail

/// E(Y - mean_i E(Y | X_i))^2 <= E(Y - E(Y | X_1))^2.
inline InequalityReport verify_theorem1(const JointCopiesModel& model, std::uint64_t n_samples, std::uint64_t seed,
                                        const Executor& exec = Executor{}) {
  require_samples(n_samples, "theorem1");
  const auto acc = detail::run_copies(model, n_samples, seed, exec, [&](const std::vector<double>& row,
                                                                        std::vector<double>& preds) {
    const double y = row[0];
    for (std::size_t i = 0; i < preds.size(); ++i) preds[i] = model.regression(row[i + 1]);
    const double avg = anchored_mean(preds);
    return std::pair{(y - avg) * (y - avg), (y - preds[0]) * (y - preds[0])};
  });
  return InequalityReport::paired("theorem1[" + model.name() + "]", acc, seed);
}

/// E(Y - mean_i X_i)^2 <= E(Y - X_1)^2.
inline InequalityReport verify_theorem2(const JointCopiesModel& model, std::uint64_t n_samples, std::uint64_t seed,
                                        const Executor& exec = Executor{}) {
  require_samples(n_samples, "theorem2");
  const auto acc = detail::run_copies(model, n_samples, seed, exec, [&](const std::vector<double>& row,
                                                                        std::vector<double>& xs) {
    const double y = row[0];
    std::copy(row.begin() + 1, row.end(), xs.begin());
    const double avg = anchored_mean(xs);
    return std::pair{(y - avg) * (y - avg), (y - xs[0]) * (y - xs[0])};
  });
  return InequalityReport::paired("theorem2[" + model.name() + "]", acc, seed);
}

// ---------------------------------------------------------------------------
// Nested conditioning for Gaussian vectors.

struct Theorem3Result {
  InequalityReport report;
  MeanVar mse_both;
  MeanVar mse_first;
  MeanVar mse_second;
  double closed_both = 0.0;
  double closed_first = 0.0;
  double closed_second = 0.0;
};

namespace detail {

struct Theorem3Acc {
  MeanVar both, first, second, diff_first, diff_second;
  void merge(const Theorem3Acc& o) {
    both.merge(o.both);
    first.merge(o.first);
    second.merge(o.second);
    diff_first.merge(o.diff_first);
    diff_second.merge(o.diff_second);
  }
};

inline Theorem3Result finish_theorem3(const Theorem3Acc& acc, std::string name, std::uint64_t seed) {
  Theorem3Result r;
  r.mse_both = acc.both;
  r.mse_first = acc.first;
  r.mse_second = acc.second;
  const bool first_is_min = acc.first.mean() <= acc.second.mean();
  const MeanVar& rhs = first_is_min ? acc.first : acc.second;
  const MeanVar& diff = first_is_min ? acc.diff_first : acc.diff_second;
  r.report = InequalityReport::make(std::move(name), acc.both.mean(), rhs.mean(), diff.standard_error(),
                                    acc.both.count(), seed);
  return r;
}

}  // namespace detail

/// E[X - E(X|Y,Z)]^2 <= min(E[X - E(X|Y)]^2, E[X - E(X|Z)]^2) for the
/// coordinates (X, Y, Z) = (0, 1, 2) of a trivariate Gaussian vector.
inline Theorem3Result verify_theorem3(const GaussianVector& v, std::uint64_t n_samples, std::uint64_t seed,
                                      const Executor& exec = Executor{}) {
  require_samples(n_samples, "theorem3");
  if (v.dimension() != 3) throw DomainError("theorem3: need a trivariate Gaussian vector");
  const std::size_t both_idx[] = {1, 2};
  const std::size_t y_idx[] = {1};
  const std::size_t z_idx[] = {2};
  const LinearPredictor p_both = conditional_predictor(v, 0, both_idx);
  const LinearPredictor p_y = conditional_predictor(v, 0, y_idx);
  const LinearPredictor p_z = conditional_predictor(v, 0, z_idx);
  const RandomState root(seed);
  const auto parts = map_chunks<detail::Theorem3Acc>(n_samples, root, exec, [&](RandomState& rng, std::size_t,
                                                                               std::size_t count) {
    detail::Theorem3Acc acc;
    double row[3];
    for (std::size_t i = 0; i < count; ++i) {
      v.draw(rng, row);
      const double eb = row[0] - p_both(row);
      const double ey = row[0] - p_y(row);
      const double ez = row[0] - p_z(row);
      acc.both.add(eb * eb);
      acc.first.add(ey * ey);
      acc.second.add(ez * ez);
      acc.diff_first.add(eb * eb - ey * ey);
      acc.diff_second.add(eb * eb - ez * ez);
    }
    return acc;
  });
  Theorem3Result r = detail::finish_theorem3(merge_in_order(parts), "theorem3", seed);
  r.closed_both = p_both.residual_variance;
  r.closed_first = p_y.residual_variance;
  r.closed_second = p_z.residual_variance;
  return r;
}

/// The Z = Y case on a bivariate (X, Y) vector: conditioning on (Y, Z)
/// reduces to the single distinct value Y.
inline Theorem3Result verify_theorem3_duplicate(const GaussianVector& xy, std::uint64_t n_samples, std::uint64_t seed,
                                                const Executor& exec = Executor{}) {
  require_samples(n_samples, "theorem3");
  if (xy.dimension() != 2) throw DomainError("theorem3: duplicate case needs a bivariate (X, Y) vector");
  const std::size_t y_idx[] = {1};
  const LinearPredictor p_y = conditional_predictor(xy, 0, y_idx);
  const RandomState root(seed);
  const auto parts = map_chunks<detail::Theorem3Acc>(n_samples, root, exec, [&](RandomState& rng, std::size_t,
                                                                               std::size_t count) {
    detail::Theorem3Acc acc;
    double row[2];
    for (std::size_t i = 0; i < count; ++i) {
      xy.draw(rng, row);
      const double e = row[0] - p_y(row);
      acc.both.add(e * e);
      acc.first.add(e * e);
      acc.second.add(e * e);
      acc.diff_first.add(0.0);
      acc.diff_second.add(0.0);
    }
    return acc;
  });
  Theorem3Result r = detail::finish_theorem3(merge_in_order(parts), "theorem3[z=y]", seed);
  r.closed_both = r.closed_first = r.closed_second = p_y.residual_variance;
  return r;
}

struct CorollaryChainResult {
  std::vector<MeanVar> mse;            // per index set
  std::vector<double> closed_form;     // residual variances (Gaussian path)
  std::vector<InequalityReport> reports;  // one per adjacent nested pair
};

namespace detail {

inline void require_nested(const std::vector<std::vector<std::size_t>>& sets, std::size_t target, std::size_t dim) {
  if (sets.empty()) throw DomainError("corollary chain: need at least one index set");
  for (std::size_t k = 0; k < sets.size(); ++k) {
    for (const std::size_t i : sets[k]) {
      if (i >= dim) throw DomainError("corollary chain: index out of range");
      if (i == target) throw DomainError("corollary chain: target index in a conditioning set");
    }
    if (k == 0) continue;
    for (const std::size_t i : sets[k - 1]) {
      if (std::find(sets[k].begin(), sets[k].end(), i) == sets[k].end()) {
        throw DomainError("corollary chain: index sets must be nested (each a superset of the previous)");
      }
    }
  }
}

inline std::string set_label(const std::vector<std::size_t>& s) {
  std::string out = "{";
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k) out += ",";
    out += std::to_string(s[k] + 1);
  }
  return out + "}";
}

inline CorollaryChainResult finish_chain(const AccVector<MeanVar>& acc, const std::vector<std::vector<std::size_t>>& sets,
                                         std::size_t target, std::uint64_t seed, const char* tag) {
  CorollaryChainResult r;
  const std::size_t m = sets.size();
  r.mse.assign(acc.items.begin(), acc.items.begin() + static_cast<std::ptrdiff_t>(m));
  for (std::size_t k = 1; k < m; ++k) {
    const MeanVar& diff = acc.items[m + k - 1];
    const std::string name = std::string(tag) + "[x" + std::to_string(target + 1) + "|" + set_label(sets[k]) +
                             " vs " + set_label(sets[k - 1]) + "]";
    r.reports.push_back(InequalityReport::make(name, r.mse[k].mean(), r.mse[k - 1].mean(), diff.standard_error(),
                                               diff.count(), seed));
  }
  return r;
}

}  // namespace detail

/// MSE of E(x_target | x_S) for nested S_1 subset S_2 subset ...; indices are
/// 0-based. Adjacent pairs must be nonincreasing.
inline CorollaryChainResult verify_corollary_chain(const GaussianVector& v, std::size_t target,
                                                   const std::vector<std::vector<std::size_t>>& index_sets,
                                                   std::uint64_t n_samples, std::uint64_t seed,
                                                   const Executor& exec = Executor{}) {
  require_samples(n_samples, "corollary-chain");
  if (target >= v.dimension()) throw DomainError("corollary chain: target index out of range");
  detail::require_nested(index_sets, target, v.dimension());
  std::vector<LinearPredictor> preds;
  for (const auto& s : index_sets) preds.push_back(conditional_predictor(v, target, s));
  const std::size_t m = index_sets.size();
  const RandomState root(seed);
  const auto parts = map_chunks<detail::AccVector<MeanVar>>(
      n_samples, root, exec, [&](RandomState& rng, std::size_t, std::size_t count) {
        detail::AccVector<MeanVar> acc;
        acc.items.resize(2 * m - 1);
        std::vector<double> row(v.dimension());
        std::vector<double> sq(m);
        for (std::size_t i = 0; i < count; ++i) {
          v.draw(rng, row);
          for (std::size_t k = 0; k < m; ++k) {
            const double e = row[target] - preds[k](row);
            sq[k] = e * e;
            acc.items[k].add(sq[k]);
          }
          for (std::size_t k = 1; k < m; ++k) acc.items[m + k - 1].add(sq[k] - sq[k - 1]);
        }
        return acc;
      });
  CorollaryChainResult r = detail::finish_chain(merge_in_order(parts), index_sets, target, seed, "corollary-chain");
  for (const auto& p : preds) r.closed_form.push_back(p.residual_variance);
  return r;
}

/// Generic sequence model: regression functions are k-nearest-neighbour
/// fits on a training sample drawn from an independent stream, evaluated
/// on n_samples fresh rows. sampler(rng, row) fills one row of length dim.
template <class Sampler>
CorollaryChainResult verify_corollary_chain_knn(const Sampler& sampler, std::size_t dim, std::size_t target,
                                                const std::vector<std::vector<std::size_t>>& index_sets,
                                                std::uint64_t n_samples, std::uint64_t seed,
                                                std::size_t n_train = 5000, const Executor& exec = Executor{}) {
  require_samples(n_samples, "corollary-chain");
  if (target >= dim) throw DomainError("corollary chain: target index out of range");
  detail::require_nested(index_sets, target, dim);
  const RandomState root(seed);
  // Training rows come from a stream disjoint from the evaluation chunks.
  const RandomState train_root = RandomState(seed, 1).split(0x7261696eull);
  std::vector<std::vector<double>> columns(dim, std::vector<double>(n_train));
  fill_rows(n_train, train_root, exec, [&](RandomState& rng, std::size_t i) {
    std::vector<double> row(dim);
    sampler(rng, std::span<double>(row));
    for (std::size_t j = 0; j < dim; ++j) columns[j][i] = row[j];
  });
  const double train_mean = mean(columns[target]);
  std::vector<std::optional<KnnRegressor>> fits;
  for (const auto& s : index_sets) {
    if (s.empty()) {
      fits.emplace_back();
      continue;
    }
    std::vector<std::span<const double>> cond;
    for (const std::size_t j : s) cond.emplace_back(columns[j]);
    fits.emplace_back(KnnRegressor(columns[target], cond));
  }
  const std::size_t m = index_sets.size();
  const auto parts = map_chunks<detail::AccVector<MeanVar>>(
      n_samples, root, exec, [&](RandomState& rng, std::size_t, std::size_t count) {
        detail::AccVector<MeanVar> acc;
        acc.items.resize(2 * m - 1);
        std::vector<double> row(dim);
        std::vector<double> point;
        std::vector<double> sq(m);
        for (std::size_t i = 0; i < count; ++i) {
          sampler(rng, std::span<double>(row));
          for (std::size_t k = 0; k < m; ++k) {
            double pred = train_mean;
            if (fits[k]) {
              point.clear();
              for (const std::size_t j : index_sets[k]) point.push_back(row[j]);
              pred = (*fits[k])(point);
            }
            const double e = row[target] - pred;
            sq[k] = e * e;
            acc.items[k].add(sq[k]);
          }
          for (std::size_t k = 1; k < m; ++k) acc.items[m + k - 1].add(sq[k] - sq[k - 1]);
        }
        return acc;
      });
  return detail::finish_chain(merge_in_order(parts), index_sets, target, seed, "corollary-chain-knn");
}

// ---------------------------------------------------------------------------
// Bivariate-model identities.

struct CovarianceResult {
  MeanVar cov_phi_y;  // Cov(E(X|Y), Y)
  MeanVar cov_psi_x;  // Cov(E(Y|X), X)
  MeanVar cov_xy;     // Cov(X, Y)
  std::vector<InequalityReport> reports;
};

/// Cov(phi(Y), Y) = Cov(psi(X), X) = Cov(X, Y), estimated with the known
/// marginal means so each covariance is a plain sample mean.
inline CovarianceResult verify_covariance_identity(const BivariateModel& model, std::uint64_t n_samples,
                                                   std::uint64_t seed, const Executor& exec = Executor{}) {
  require_samples(n_samples, "covariance");
  const RegressionFunction f_phi = phi(model);
  const RegressionFunction f_psi = psi(model);
  const double mx = model.marginal_x.mean();
  const double my = model.marginal_y.mean();
  const RandomState root(seed);
  const auto parts = map_chunks<detail::AccVector<MeanVar>>(
      n_samples, root, exec, [&](RandomState& rng, std::size_t, std::size_t count) {
        detail::AccVector<MeanVar> acc;
        acc.items.resize(6);
        for (std::size_t i = 0; i < count; ++i) {
          const auto [x, y] = model.draw(rng);
          const double a = (f_phi(y) - mx) * (y - my);
          const double b = (f_psi(x) - my) * (x - mx);
          const double c = (x - mx) * (y - my);
          acc.items[0].add(a);
          acc.items[1].add(b);
          acc.items[2].add(c);
          acc.items[3].add(a - b);
          acc.items[4].add(a - c);
          acc.items[5].add(b - c);
        }
        return acc;
      });
  const auto acc = merge_in_order(parts);
  CovarianceResult r;
  r.cov_phi_y = acc.items[0];
  r.cov_psi_x = acc.items[1];
  r.cov_xy = acc.items[2];
  const std::string tag = "covariance[" + model.name() + "]";
  r.reports.push_back(InequalityReport::identity(tag + " cov(phi(Y),Y)=cov(psi(X),X)", acc.items[3], seed));
  r.reports.push_back(InequalityReport::identity(tag + " cov(phi(Y),Y)=cov(X,Y)", acc.items[4], seed));
  r.reports.push_back(InequalityReport::identity(tag + " cov(psi(X),X)=cov(X,Y)", acc.items[5], seed));
  return r;
}

/// Analytic (Cov(Z1, Z2), Cov(X, Y)) for a bivariate normal with
/// correlation rho: Z1 = phi(Y), Z2 = psi(X) are affine with slopes
/// rho sd1/sd2 and rho sd2/sd1, so Cov(Z1, Z2) = rho^2 Cov(X, Y).
/// Accepts |rho| = 1 symbolically.
inline std::pair<double, double> covariance_counterexample(double rho, double sd1 = 1.0, double sd2 = 1.0) {
  if (!(std::abs(rho) <= 1.0)) throw DomainError("covariance counterexample: |rho| must be <= 1");
  const double cov_xy = rho * sd1 * sd2;
  return {rho * rho * cov_xy, cov_xy};
}

inline std::pair<double, double> covariance_counterexample(const GaussianVector& v) {
  if (v.dimension() != 2) throw DomainError("covariance counterexample: need a bivariate vector");
  const auto& s = v.covariance();
  const double sd1 = std::sqrt(s(0, 0));
  const double sd2 = std::sqrt(s(1, 1));
  return covariance_counterexample(s(0, 1) / (sd1 * sd2), sd1, sd2);
}

struct CopulaSwapResult {
  double distance_swapped = 0.0;               // against C(s, t)
  std::optional<double> distance_direct;       // against C(t, s), exchangeable models only
  std::vector<InequalityReport> reports;
};

/// Empirical copula of (Z1, Z2) = (phi(Y), psi(X)) against C(s, t), and
/// against C(t, s) when (X, Y) is exchangeable.
inline CopulaSwapResult verify_copula_theorem(const BivariateModel& model, std::uint64_t n_samples, std::uint64_t seed,
                                              std::size_t grid = 50, double tolerance = 0.02,
                                              const Executor& exec = Executor{}) {
  require_samples(n_samples, "copula-swap");
  if (grid < 2) throw DomainError("copula-swap: grid must be >= 2");
  const RegressionFunction f_phi = phi(model);
  const RegressionFunction f_psi = psi(model);
  for (const auto* f : {&f_phi, &f_psi}) {
    if (f->monotonicity() != Monotonicity::Increasing) {
      throw UnsupportedInput(std::string("copula-swap: regression function is ") + to_string(f->monotonicity()) +
                             ", strictly increasing required");
    }
  }
  std::vector<double> z1(n_samples);
  std::vector<double> z2(n_samples);
  fill_rows(n_samples, RandomState(seed), exec, [&](RandomState& rng, std::size_t i) {
    const auto [x, y] = model.draw(rng);
    z1[i] = f_phi(y);
    z2[i] = f_psi(x);
  });
  const EmpiricalCopula e(z1, z2);
  CopulaSwapResult r;
  const std::string tag = "copula-swap[" + model.name() + "]";
  r.distance_swapped = sup_distance_swapped(e, model.copula, grid);
  r.reports.push_back(InequalityReport::bound(tag + " vs C(s,t)", r.distance_swapped, tolerance, n_samples, seed));
  if (model.is_exchangeable()) {
    r.distance_direct = sup_distance(e, model.copula, grid);
    r.reports.push_back(InequalityReport::bound(tag + " vs C(t,s)", *r.distance_direct, tolerance, n_samples, seed));
  }
  return r;
}

struct SequenceStatsResult {
  MeanVar mean_y2;   // E(X2 | X1) evaluated at X1
  MeanVar mean_x2;
  MeanVar cov_y;     // (Y1 - m1)(Y2 - m2)
  MeanVar cov_x;     // (X1 - m1)(X2 - m2)
  std::vector<InequalityReport> reports;
};

/// Predicted sequence Y1 = X1, Y2 = E(X2 | X1): E Y2 = E X2 and
/// Cov(Y1, Y2) = Cov(X1, X2). The model's x coordinate is X1.
inline SequenceStatsResult predicted_sequence_stats(const BivariateModel& model, std::uint64_t n_samples,
                                                    std::uint64_t seed, const Executor& exec = Executor{}) {
  require_samples(n_samples, "sequence-stats");
  const RegressionFunction f = psi(model);
  const double m1 = model.marginal_x.mean();
  const double m2 = model.marginal_y.mean();
  const RandomState root(seed);
  const auto parts = map_chunks<detail::AccVector<MeanVar>>(
      n_samples, root, exec, [&](RandomState& rng, std::size_t, std::size_t count) {
        detail::AccVector<MeanVar> acc;
        acc.items.resize(6);
        for (std::size_t i = 0; i < count; ++i) {
          const auto [x1, x2] = model.draw(rng);
          const double y2 = f(x1);
          const double cy = (x1 - m1) * (y2 - m2);
          const double cx = (x1 - m1) * (x2 - m2);
          acc.items[0].add(y2);
          acc.items[1].add(x2);
          acc.items[2].add(cy);
          acc.items[3].add(cx);
          acc.items[4].add(y2 - x2);
          acc.items[5].add(cy - cx);
        }
        return acc;
      });
  const auto acc = merge_in_order(parts);
  SequenceStatsResult r;
  r.mean_y2 = acc.items[0];
  r.mean_x2 = acc.items[1];
  r.cov_y = acc.items[2];
  r.cov_x = acc.items[3];
  const std::string tag = "sequence-stats[" + model.name() + "]";
  r.reports.push_back(InequalityReport::identity(tag + " E(Y2)=E(X2)", acc.items[4], seed));
  r.reports.push_back(InequalityReport::identity(tag + " cov(Y1,Y2)=cov(X1,X2)", acc.items[5], seed));
  return r;
}

// ---------------------------------------------------------------------------
// Martingale: partial sums S_k of a symmetric +-1 walk.

struct MartingaleResult {
  MeanVar full;                 // E[S_{n+1} - S_n]^2
  std::vector<MeanVar> subset;  // E[S_{n+1} - S_{max(subset)}]^2 per subset
  std::vector<double> closed_form;
  std::vector<InequalityReport> reports;
};

/// Subsets are 1-based indices into S_1..S_n. E(S_{n+1} | S_i, i in subset)
/// is S at the largest index, or 0 for the empty subset.
inline MartingaleResult martingale_check(int walk_length, const std::vector<std::vector<int>>& subsets,
                                         std::uint64_t n_samples, std::uint64_t seed,
                                         const Executor& exec = Executor{}) {
  require_samples(n_samples, "martingale");
  if (walk_length < 1) throw DomainError("martingale: walk length must be >= 1");
  std::vector<int> last;
  for (const auto& s : subsets) {
    int hi = 0;
    for (const int k : s) {
      if (k < 1 || k > walk_length) throw DomainError("martingale: subset index outside 1..n");
      hi = std::max(hi, k);
    }
    last.push_back(hi);
  }
  const std::size_t m = subsets.size();
  const RandomState root(seed);
  const auto parts = map_chunks<detail::AccVector<MeanVar>>(
      n_samples, root, exec, [&](RandomState& rng, std::size_t, std::size_t count) {
        detail::AccVector<MeanVar> acc;
        acc.items.resize(1 + 2 * m);
        std::vector<double> s(static_cast<std::size_t>(walk_length) + 2, 0.0);
        for (std::size_t i = 0; i < count; ++i) {
          for (int k = 1; k <= walk_length + 1; ++k) {
            s[static_cast<std::size_t>(k)] = s[static_cast<std::size_t>(k - 1)] + (rng.uniform() < 0.5 ? -1.0 : 1.0);
          }
          const double next = s[static_cast<std::size_t>(walk_length) + 1];
          const double e_full = next - s[static_cast<std::size_t>(walk_length)];
          acc.items[0].add(e_full * e_full);
          for (std::size_t k = 0; k < m; ++k) {
            const double e = next - s[static_cast<std::size_t>(last[k])];
            acc.items[1 + k].add(e * e);
            acc.items[1 + m + k].add(e_full * e_full - e * e);
          }
        }
        return acc;
      });
  const auto acc = merge_in_order(parts);
  MartingaleResult r;
  r.full = acc.items[0];
  for (std::size_t k = 0; k < m; ++k) {
    r.subset.push_back(acc.items[1 + k]);
    r.closed_form.push_back(static_cast<double>(walk_length + 1 - last[k]));
    std::string label = "{";
    for (std::size_t j = 0; j < subsets[k].size(); ++j) label += (j ? "," : "") + std::to_string(subsets[k][j]);
    label += "}";
    const MeanVar& diff = acc.items[1 + m + k];
    r.reports.push_back(InequalityReport::make("martingale[n=" + std::to_string(walk_length) + "," + label + "]",
                                               r.full.mean(), acc.items[1 + k].mean(), diff.standard_error(),
                                               diff.count(), seed));
  }
  return r;
}

}  // namespace condpred

#endif  // CONDPRED_THEOREMS_HPP
