// ordered.hpp
//
// Order statistics and upper records of iid samples: conditional densities
// of the maximum, the predictors E(X_{n:n} | X_{k:n} = x), the Markov check,
// MSE ordering by conditioning rank, record extraction and simulation.

#ifndef CONDPRED_ORDERED_HPP
#define CONDPRED_ORDERED_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "condpred/condexp.hpp"
#include "condpred/error.hpp"
#include "condpred/marginals.hpp"
#include "condpred/parallel.hpp"
#include "condpred/quadrature.hpp"
#include "condpred/stats.hpp"
#include "condpred/theorems.hpp"

namespace condpred {

struct OrderedSample {
  std::vector<double> values;  // X_{1:n} <= ... <= X_{n:n}
  Marginal source;

  static OrderedSample draw(const Marginal& m, std::size_t n, RandomState& rng) {
    OrderedSample s{m.sample(rng, n), m};
    std::sort(s.values.begin(), s.values.end());
    return s;
  }

  std::size_t size() const { return values.size(); }
  /// X_{k:n}, k 1-based.
  double operator[](std::size_t k) const { return values.at(k - 1); }
};

struct RecordSequence {
  std::vector<double> values;
  std::vector<std::uint64_t> times;  // 1-based
};

/// Upper records of a sequence; the first element is always a record.
inline RecordSequence extract_records(std::span<const double> sequence) {
  if (sequence.empty()) throw DomainError("extract_records: empty sequence");
  RecordSequence r;
  r.values.push_back(sequence[0]);
  r.times.push_back(1);
  for (std::size_t j = 1; j < sequence.size(); ++j) {
    if (sequence[j] > r.values.back()) {
      r.values.push_back(sequence[j]);
      r.times.push_back(j + 1);
    }
  }
  return r;
}

/// R(x) = -log(1 - F(x)), defined where 0 < F(x) < 1.
inline double cumulative_hazard(const Marginal& m, double x) {
  const double f = m.cdf(x);
  if (!(f > 0.0 && f < 1.0)) throw DomainError("cumulative_hazard: need 0 < F(x) < 1");
  return -std::log(m.survival(x));
}

/// f(z) / (1 - F(x)) for z > x.
inline double cond_pdf_max_given_next(const Marginal& m, double z, double x) {
  const double s = m.survival(x);
  if (!(s > 0.0)) throw DomainError("cond_pdf_max_given_next: F(x) = 1");
  if (z <= x) return 0.0;
  return m.pdf(z) / s;
}

/// 2 (F(z) - F(x)) f(z) / (1 - F(x))^2 for z > x.
inline double cond_pdf_max_given_second(const Marginal& m, double z, double x) {
  const double s = m.survival(x);
  if (!(s > 0.0)) throw DomainError("cond_pdf_max_given_second: F(x) = 1");
  if (z <= x) return 0.0;
  return 2.0 * (s - m.survival(z)) * m.pdf(z) / (s * s);
}

namespace detail {

inline void require_interior(const Marginal& m, double x, const char* who) {
  const Interval s = m.support();
  if (!(x > s.lower && x < s.upper)) {
    std::ostringstream os;
    os << who << ": x = " << x << " is not strictly inside the support";
    throw DomainError(os.str());
  }
}

inline double harmonic(int m) {
  double h = 0.0;
  for (int k = m; k >= 1; --k) h += 1.0 / k;
  return h;
}

}  // namespace detail

/// E(max of `gap` iid draws from F truncated to (x, inf)) by quadrature:
/// with w = S(Z) / S(x), the minimum of the w's has density
/// gap (1 - w)^(gap - 1) on (0, 1).
inline double conditional_max_mean_quadrature(const Marginal& m, double x, int gap) {
  detail::require_interior(m, x, "conditional_max_mean");
  if (gap < 1) throw DomainError("conditional_max_mean: gap must be >= 1");
  const double s = m.survival(x);
  try {
    return integrate_probability([&](double w, double one_minus_w) {
      const double weight = gap * std::pow(one_minus_w, gap - 1);
      return m.upper_quantile(s * w) * weight;
    });
  } catch (const NumericalError& e) {
    std::ostringstream os;
    os << "conditional_max_mean: quadrature failed at x = " << x << ": " << e.what();
    throw NumericalError(os.str());
  }
}

/// E(X_{n:n} | X_{n-gap:n} = x). Closed forms for the uniform and
/// exponential families, quadrature otherwise.
inline double conditional_max_mean(const Marginal& m, double x, int gap) {
  detail::require_interior(m, x, "conditional_max_mean");
  if (gap < 1) throw DomainError("conditional_max_mean: gap must be >= 1");
  if (const auto* u = std::get_if<Uniform>(&m.family())) {
    return x + (u->upper - x) * gap / (gap + 1.0);
  }
  if (const auto* e = std::get_if<Exponential>(&m.family())) {
    return x + detail::harmonic(gap) / e->rate;
  }
  return conditional_max_mean_quadrature(m, x, gap);
}

/// g1(x) = E(X_{n:n} | X_{n-1:n} = x).
inline double g1(const Marginal& m, double x) { return conditional_max_mean(m, x, 1); }
/// g2(x) = E(X_{n:n} | X_{n-2:n} = x).
inline double g2(const Marginal& m, double x) { return conditional_max_mean(m, x, 2); }

/// The predictor x -> E(X_{n:n} | X_{n-gap:n} = x) as a RegressionFunction:
/// exact affine maps for closed-form families, tabulated otherwise.
inline RegressionFunction max_predictor(const Marginal& m, int gap) {
  if (gap < 1) throw DomainError("max_predictor: gap must be >= 1");
  if (const auto* u = std::get_if<Uniform>(&m.family())) {
    const double slope = 1.0 / (gap + 1.0);
    return RegressionFunction::affine(slope, u->upper * gap / (gap + 1.0), m.support());
  }
  if (const auto* e = std::get_if<Exponential>(&m.family())) {
    return RegressionFunction::affine(1.0, detail::harmonic(gap) / e->rate, m.support());
  }
  return RegressionFunction::tabulate([&](double x) { return conditional_max_mean_quadrature(m, x, gap); },
                                      m.truncated_support());
}

/// Paired MSE of predicting X_{n:n} from X_{l:n} (lhs) versus X_{k:n}
/// (rhs), k <= l <= n - 1.
inline InequalityReport mse_order_inequality(const Marginal& m, int n, int k, int l, std::uint64_t n_samples,
                                             std::uint64_t seed, const Executor& exec = Executor{}) {
  require_samples(n_samples, "order-stats");
  if (!(1 <= k && k <= l && l <= n - 1)) throw DomainError("mse_order_inequality: need 1 <= k <= l <= n - 1");
  const RegressionFunction near = max_predictor(m, n - l);
  const RegressionFunction far = max_predictor(m, n - k);
  const auto parts = map_chunks<PairedAccumulator>(n_samples, RandomState(seed), exec,
                                                   [&](RandomState& rng, std::size_t, std::size_t count) {
                                                     PairedAccumulator acc;
                                                     for (std::size_t i = 0; i < count; ++i) {
                                                       const auto s = OrderedSample::draw(m, n, rng);
                                                       const double top = s[n];
                                                       const double el = top - near(s[l]);
                                                       const double ek = k == l ? el : top - far(s[k]);
                                                       acc.add(el * el, ek * ek);
                                                     }
                                                     return acc;
                                                   });
  std::ostringstream name;
  name << "order-stats[" << m.name() << ",n=" << n << "] X" << n << ":" << n << "|X" << l << ":" << n << " vs |X"
       << k << ":" << n;
  return InequalityReport::paired(name.str(), merge_in_order(parts), seed);
}

/// Samples with X_{k:n} inside [x - h, x + h]: the mean of X_{n:n} and the
/// mean conditioning value.
struct WindowQuery {
  int rank = 1;
  double x = 0.0;
  double half_width = 0.01;
};

struct WindowEstimate {
  WindowQuery query;
  MeanVar target;
  MeanVar conditioning;
};

inline std::vector<WindowEstimate> order_statistic_windows(const Marginal& m, int n,
                                                           const std::vector<WindowQuery>& queries,
                                                           std::uint64_t n_samples, std::uint64_t seed,
                                                           const Executor& exec = Executor{}) {
  require_samples(n_samples, "order-stats");
  for (const auto& q : queries) {
    if (q.rank < 1 || q.rank >= n) throw DomainError("order_statistic_windows: rank must lie in 1..n-1");
  }
  const std::size_t nq = queries.size();
  const auto parts = map_chunks<detail::AccVector<MeanVar>>(
      n_samples, RandomState(seed), exec, [&](RandomState& rng, std::size_t, std::size_t count) {
        detail::AccVector<MeanVar> acc;
        acc.items.resize(2 * nq);
        for (std::size_t i = 0; i < count; ++i) {
          const auto s = OrderedSample::draw(m, n, rng);
          for (std::size_t q = 0; q < nq; ++q) {
            const double c = s[queries[q].rank];
            if (std::abs(c - queries[q].x) <= queries[q].half_width) {
              acc.items[2 * q].add(s[n]);
              acc.items[2 * q + 1].add(c);
            }
          }
        }
        return acc;
      });
  const auto acc = merge_in_order(parts);
  std::vector<WindowEstimate> out;
  for (std::size_t q = 0; q < nq; ++q) {
    out.push_back({queries[q], acc.items.empty() ? MeanVar{} : acc.items[2 * q],
                   acc.items.empty() ? MeanVar{} : acc.items[2 * q + 1]});
  }
  return out;
}

struct MarkovCell {
  std::size_t bin = 0;
  std::size_t sub_bin = 0;
  MeanVar residual;  // X_{n:n} - g1(X_{n-1:n})
};

struct MarkovBin {
  MeanVar conditioning;  // X_{n-1:n}
  MeanVar target;        // X_{n:n}
};

struct MarkovCheckResult {
  std::size_t bins = 0;
  std::size_t sub_bins = 0;
  bool widened = false;
  std::vector<MarkovBin> bin_stats;
  std::vector<MarkovCell> cells;
  double max_abs_z = 0.0;
  InequalityReport report;
};

/// Bins samples by X_{n-1:n} (equal-count bins) and, within each, by
/// X_{n-2:n}. Under the Markov property the residual X_{n:n} - g1(X_{n-1:n})
/// has mean zero in every cell whatever X_{n-2:n} is; the largest cell
/// |mean| / SE must stay within 4.
inline MarkovCheckResult markov_property_check(const Marginal& m, int n, std::uint64_t n_samples, std::uint64_t seed,
                                               const Executor& exec = Executor{}, std::size_t bins = 10,
                                               std::size_t sub_bins = 3) {
  require_samples(n_samples, "markov");
  if (n < 3) throw DomainError("markov_property_check: n must be >= 3");
  constexpr std::uint64_t min_cell = 200;
  MarkovCheckResult r;
  while (bins * sub_bins > 1 && n_samples / (bins * sub_bins) < min_cell) {
    r.widened = true;
    if (bins > 1) {
      --bins;
    } else {
      --sub_bins;
    }
  }
  r.bins = bins;
  r.sub_bins = sub_bins;
  const RegressionFunction pred = max_predictor(m, 1);
  std::vector<double> top(n_samples), prev(n_samples), prev2(n_samples);
  fill_rows(n_samples, RandomState(seed), exec, [&](RandomState& rng, std::size_t i) {
    const auto s = OrderedSample::draw(m, n, rng);
    top[i] = s[n];
    prev[i] = s[n - 1];
    prev2[i] = s[n - 2];
  });
  // Equal-count binning by sorting indices (stable on ties by index).
  std::vector<std::size_t> order(n_samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return prev[a] < prev[b]; });
  r.bin_stats.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t lo = b * n_samples / bins;
    const std::size_t hi = (b + 1) * n_samples / bins;
    std::vector<std::size_t> members(order.begin() + static_cast<std::ptrdiff_t>(lo),
                                     order.begin() + static_cast<std::ptrdiff_t>(hi));
    std::stable_sort(members.begin(), members.end(),
                     [&](std::size_t a, std::size_t c) { return prev2[a] < prev2[c]; });
    for (std::size_t sb = 0; sb < sub_bins; ++sb) {
      MarkovCell cell{b, sb, {}};
      const std::size_t slo = sb * members.size() / sub_bins;
      const std::size_t shi = (sb + 1) * members.size() / sub_bins;
      for (std::size_t j = slo; j < shi; ++j) {
        const std::size_t i = members[j];
        cell.residual.add(top[i] - pred(prev[i]));
      }
      const double se = cell.residual.standard_error();
      if (se > 0.0) r.max_abs_z = std::max(r.max_abs_z, std::abs(cell.residual.mean()) / se);
      r.cells.push_back(cell);
    }
    for (const std::size_t i : members) {
      r.bin_stats[b].conditioning.add(prev[i]);
      r.bin_stats[b].target.add(top[i]);
    }
  }
  std::ostringstream name;
  name << "markov[" << m.name() << ",n=" << n << "] max cell |z|";
  r.report = InequalityReport::bound(name.str(), r.max_abs_z, 4.0, n_samples, seed);
  return r;
}

// ---------------------------------------------------------------------------
// Records.

inline constexpr std::uint64_t kRecordMaxLength = 1'000'000;

/// The first `depth` upper records of iid sequences, row-major. Sequences
/// that reach the length cap before `depth` records are discarded.
struct RecordSimulation {
  int depth = 0;
  std::uint64_t requested = 0;
  std::uint64_t discarded = 0;
  std::uint64_t max_length = kRecordMaxLength;
  std::vector<double> values;

  std::uint64_t kept() const { return depth > 0 ? values.size() / static_cast<std::size_t>(depth) : 0; }
  /// X_{U(j)} of kept sequence i, j 1-based.
  double value(std::size_t i, int j) const {
    return values[i * static_cast<std::size_t>(depth) + static_cast<std::size_t>(j - 1)];
  }
  std::vector<double> column(int j) const {
    std::vector<double> out(kept());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(i, j);
    return out;
  }
};

namespace detail {

struct RecordChunk {
  std::vector<double> values;
  std::uint64_t discarded = 0;
};

}  // namespace detail

/// Records are tracked on the uniform scale and mapped through the
/// quantile function only when stored.
inline RecordSimulation simulate_records(const Marginal& m, int depth, std::uint64_t n_sequences,
                                         const RandomState& root, const Executor& exec = Executor{},
                                         std::uint64_t max_length = kRecordMaxLength) {
  if (depth < 1) throw DomainError("simulate_records: depth must be >= 1");
  if (max_length < static_cast<std::uint64_t>(depth)) throw DomainError("simulate_records: cap below depth");
  const auto parts = map_chunks<detail::RecordChunk>(
      n_sequences, root, exec, [&](RandomState& rng, std::size_t, std::size_t count) {
        detail::RecordChunk chunk;
        std::vector<double> rec(static_cast<std::size_t>(depth));
        for (std::size_t s = 0; s < count; ++s) {
          int found = 0;
          double best = -1.0;
          for (std::uint64_t j = 0; j < max_length && found < depth; ++j) {
            const double u = rng.uniform();
            if (u > best) {
              best = u;
              rec[static_cast<std::size_t>(found++)] = u;
            }
          }
          if (found < depth) {
            ++chunk.discarded;
            continue;
          }
          for (const double u : rec) chunk.values.push_back(m.quantile(u, 1.0 - u));
        }
        return chunk;
      });
  RecordSimulation sim;
  sim.depth = depth;
  sim.requested = n_sequences;
  sim.max_length = max_length;
  for (const auto& p : parts) {
    sim.values.insert(sim.values.end(), p.values.begin(), p.values.end());
    sim.discarded += p.discarded;
  }
  return sim;
}

inline RecordSimulation simulate_records(const Marginal& m, int depth, std::uint64_t n_sequences, std::uint64_t seed,
                                         const Executor& exec = Executor{},
                                         std::uint64_t max_length = kRecordMaxLength) {
  return simulate_records(m, depth, n_sequences, RandomState(seed), exec, max_length);
}

/// Piecewise-linear regression through equal-count bin means over the
/// central `interior` fraction of x, extrapolated linearly beyond.
class BinnedRegression {
 public:
  BinnedRegression(std::span<const double> xs, std::span<const double> ys, std::size_t bins = 40,
                   double interior = 0.9) {
    if (xs.size() != ys.size()) throw DomainError("binned regression: length mismatch");
    if (bins < 2) throw DomainError("binned regression: need at least 2 bins");
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    const double tail = 0.5 * (1.0 - interior);
    const auto lo = static_cast<std::size_t>(std::floor(tail * static_cast<double>(xs.size())));
    const auto hi = xs.size() - lo;
    const std::size_t inside = hi - lo;
    if (inside < bins * 25) {
      std::ostringstream os;
      os << "binned regression: " << inside << " interior points for " << bins
         << " bins; raise n_samples to at least " << (bins * 25) * xs.size() / std::max<std::size_t>(inside, 1);
      throw SampleSizeError(os.str());
    }
    for (std::size_t b = 0; b < bins; ++b) {
      MeanVar mx;
      MeanVar my;
      for (std::size_t j = lo + b * inside / bins; j < lo + (b + 1) * inside / bins; ++j) {
        mx.add(xs[order[j]]);
        my.add(ys[order[j]]);
      }
      centers_.push_back(mx.mean());
      means_.push_back(my.mean());
      errors_.push_back(my.standard_error());
      counts_.push_back(my.count());
    }
  }

  double operator()(double x) const {
    const std::size_t n = centers_.size();
    std::size_t k = 0;
    if (x >= centers_.back()) {
      k = n - 2;
    } else if (x > centers_.front()) {
      k = static_cast<std::size_t>(std::upper_bound(centers_.begin(), centers_.end(), x) - centers_.begin()) - 1;
    }
    const double dx = centers_[k + 1] - centers_[k];
    const double t = dx > 0.0 ? (x - centers_[k]) / dx : 0.0;
    return means_[k] + t * (means_[k + 1] - means_[k]);
  }

  const std::vector<double>& centers() const { return centers_; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& standard_errors() const { return errors_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

 private:
  std::vector<double> centers_;
  std::vector<double> means_;
  std::vector<double> errors_;
  std::vector<std::uint64_t> counts_;
};

struct RecordPredictorResult {
  RecordSimulation training;
  RecordSimulation evaluation;
  InequalityReport report;
  BinnedRegression near_fit;
  BinnedRegression far_fit;
};

/// Paired MSE of predicting X_{U(n)} from X_{U(n - near_lag)} (lhs) versus
/// X_{U(n - far_lag)} (rhs). Regressions are binned fits on a training
/// simulation drawn from a separate stream; MSEs use a fresh simulation.
inline RecordPredictorResult record_predictor_mse(const Marginal& m, int depth, int near_lag, int far_lag,
                                                  std::uint64_t n_sequences, std::uint64_t seed,
                                                  const Executor& exec = Executor{}, std::size_t bins = 40,
                                                  std::uint64_t max_length = kRecordMaxLength) {
  require_samples(n_sequences, "records");
  if (depth < 2) throw DomainError("record_predictor_mse: depth must be >= 2");
  if (!(1 <= near_lag && near_lag <= far_lag && far_lag < depth)) {
    throw DomainError("record_predictor_mse: need 1 <= near_lag <= far_lag < depth");
  }
  RecordSimulation train = simulate_records(m, depth, n_sequences, RandomState(seed, 1), exec, max_length);
  RecordSimulation eval = simulate_records(m, depth, n_sequences, RandomState(seed), exec, max_length);
  for (const auto* s : {&train, &eval}) {
    if (s->kept() < kMinSamples) {
      std::ostringstream os;
      os << "records: only " << s->kept() << " of " << s->requested << " sequences reached depth " << depth
         << "; raise n_samples";
      throw SampleSizeError(os.str());
    }
  }
  const auto y_train = train.column(depth);
  BinnedRegression near_fit(train.column(depth - near_lag), y_train, bins);
  BinnedRegression far_fit(train.column(depth - far_lag), y_train, bins);
  PairedAccumulator acc;
  for (std::size_t i = 0; i < eval.kept(); ++i) {
    const double y = eval.value(i, depth);
    const double en = y - near_fit(eval.value(i, depth - near_lag));
    const double ef = near_lag == far_lag ? en : y - far_fit(eval.value(i, depth - far_lag));
    acc.add(en * en, ef * ef);
  }
  std::ostringstream name;
  name << "records[" << m.name() << ",depth=" << depth << "] lag" << near_lag << " vs lag" << far_lag;
  return {std::move(train), std::move(eval), InequalityReport::paired(name.str(), acc, seed), std::move(near_fit),
          std::move(far_fit)};
}

/// Increments R(X_{U(j)}) - R(X_{U(j-1)}) of the cumulative hazard between
/// consecutive records; iid unit exponential for any continuous F.
inline std::vector<double> record_hazard_gaps(const RecordSimulation& sim, const Marginal& m, int j) {
  if (j < 2 || j > sim.depth) throw DomainError("record_hazard_gaps: need 2 <= j <= depth");
  std::vector<double> gaps(sim.kept());
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    gaps[i] = -std::log(m.survival(sim.value(i, j))) + std::log(m.survival(sim.value(i, j - 1)));
  }
  return gaps;
}

/// KS p-value of the hazard gaps against Exp(1).
inline double record_gap_ks_pvalue(const RecordSimulation& sim, const Marginal& m, int j) {
  const auto gaps = record_hazard_gaps(sim, m, j);
  const double d = ks_statistic(gaps, [](double g) { return g <= 0.0 ? 0.0 : -std::expm1(-g); });
  return ks_pvalue(d, gaps.size());
}

}  // namespace condpred

#endif  // CONDPRED_ORDERED_HPP
