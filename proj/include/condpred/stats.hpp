// stats.hpp
//
// Sample statistics: mergeable moment accumulators, correlation measures,
// the Kolmogorov-Smirnov statistic, and sample percentiles.

#ifndef CONDPRED_STATS_HPP
#define CONDPRED_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "condpred/error.hpp"
#include "condpred/special.hpp"

namespace condpred {

/// Count, mean and centered second moment; merge() follows Chan et al.
class MeanVar {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  void merge(const MeanVar& other) {
    if (other.n_ == 0) return;
    if (n_ == 0) {
      *this = other;
      return;
    }
    const double total = static_cast<double>(n_ + other.n_);
    const double delta = other.mean_ - mean_;
    mean_ += delta * static_cast<double>(other.n_) / total;
    m2_ += other.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(other.n_) / total;
    n_ += other.n_;
  }

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double standard_error() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Two squared-error streams evaluated on common draws plus their difference.
struct PairedAccumulator {
  MeanVar lhs;
  MeanVar rhs;
  MeanVar diff;

  void add(double a, double b) {
    lhs.add(a);
    rhs.add(b);
    diff.add(a - b);
  }
  void merge(const PairedAccumulator& o) {
    lhs.merge(o.lhs);
    rhs.merge(o.rhs);
    diff.merge(o.diff);
  }
};

/// Mean of the values as x0 + sum(x - x0) / n. Exact whenever every value
/// equals the first one.
inline double anchored_mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  const double x0 = xs[0];
  double s = 0.0;
  for (const double x : xs) s += x - x0;
  return x0 + s / static_cast<double>(xs.size());
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Unbiased sample covariance.
inline double covariance(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw DomainError("covariance: need >= 2 paired values");
  const double mx = mean(xs);
  const double my = mean(ys);
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (xs[i] - mx) * (ys[i] - my);
  return s / static_cast<double>(xs.size() - 1);
}

inline double variance(std::span<const double> xs) { return covariance(xs, xs); }

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  return covariance(xs, ys) / std::sqrt(variance(xs) * variance(ys));
}

/// 1-based ranks, ties broken by index.
inline std::vector<double> ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> r(xs.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) r[order[pos]] = static_cast<double>(pos + 1);
  return r;
}

inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  const auto rx = ranks(xs);
  const auto ry = ranks(ys);
  return pearson(rx, ry);
}

namespace detail {

inline std::uint64_t merge_count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                                            std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = merge_count_inversions(v, buf, lo, mid) + merge_count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace detail

/// Kendall's tau-a in O(n log n) (Knight's algorithm); assumes no ties.
inline double kendall_tau(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  if (n != ys.size() || n < 2) throw DomainError("kendall_tau: need >= 2 paired values");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = ys[order[i]];
  std::vector<double> buf(n);
  const std::uint64_t inversions = detail::merge_count_inversions(y, buf, 0, n);
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  return 1.0 - 2.0 * static_cast<double>(inversions) / pairs;
}

/// sup_x |F_n(x) - F(x)| for a continuous reference cdf.
template <class Cdf>
double ks_statistic(std::span<const double> sample, const Cdf& cdf) {
  if (sample.empty()) throw DomainError("ks_statistic: empty sample");
  std::vector<double> xs(sample.begin(), sample.end());
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic p-value of a one-sample KS statistic.
inline double ks_pvalue(double statistic, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  // Stephens' small-sample correction.
  return kolmogorov_survival((sn + 0.12 + 0.11 / sn) * statistic);
}

/// Linear-interpolation sample percentile (R type 7), q in [0, 1].
inline double percentile(std::vector<double> xs, double q) {
  if (xs.empty()) throw DomainError("percentile: empty sample");
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(lo), xs.end());
  const double a = xs[lo];
  double b = a;
  if (hi != lo) b = *std::min_element(xs.begin() + static_cast<std::ptrdiff_t>(lo) + 1, xs.end());
  return a + (pos - static_cast<double>(lo)) * (b - a);
}

}  // namespace condpred

#endif  // CONDPRED_STATS_HPP
