// coalition.hpp
//
// Broker market: n coalition brokers bid X_1..X_n, the best outside bid is
// Y, and the traded price is Z = max(X_1, ..., X_n, Y). Compares each
// broker's own predictor E(Z | X_i) with the coalition average.

#ifndef CONDPRED_COALITION_HPP
#define CONDPRED_COALITION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "condpred/condexp.hpp"
#include "condpred/error.hpp"
#include "condpred/marginals.hpp"
#include "condpred/parallel.hpp"
#include "condpred/quadrature.hpp"
#include "condpred/random.hpp"
#include "condpred/special.hpp"
#include "condpred/stats.hpp"
#include "condpred/theorems.hpp"

namespace condpred {

/// Max of `count` iid draws from `base`: cdf F0^count.
struct Outsider {
  Marginal base = Marginal::uniform();
  int count = 1;

  double cdf(double y) const { return std::pow(base.cdf(y), count); }

  double draw(RandomState& rng) const {
    const double u = rng.uniform();
    if (count == 1) return base.quantile(u);
    const double l = std::log(u) / count;
    return base.quantile(std::exp(l), -std::expm1(l));
  }
};

enum class BrokerDependence { Iid, GaussianEquicorrelated };

struct MarketConfig {
  int n_brokers = 1;
  Marginal broker = Marginal::uniform();
  BrokerDependence dependence = BrokerDependence::Iid;
  double rho_xx = 0.0;
  std::optional<Outsider> outsider;
  std::uint64_t n_samples = 100'000;
  std::uint64_t seed = 0;

  bool independent() const { return dependence == BrokerDependence::Iid || rho_xx == 0.0; }

  void validate() const {
    if (n_brokers < 1) throw ConstructionError("market: n_brokers must be >= 1");
    if (outsider && outsider->count < 1) throw ConstructionError("market: outsider count must be >= 1");
    if (dependence == BrokerDependence::GaussianEquicorrelated) {
      const double lower = n_brokers > 1 ? -1.0 / (n_brokers - 1) : -1.0;
      if (!(rho_xx > lower && rho_xx < 1.0)) {
        std::ostringstream os;
        os << "market: rho_xx = " << rho_xx << " must lie in (" << lower << ", 1)";
        throw ConstructionError(os.str());
      }
    }
  }
};

/// Rows of (X_1..X_n, Y, Z); Y is -inf when there is no outsider.
struct MarketSample {
  int n_brokers = 0;
  std::vector<double> values;

  std::size_t width() const { return static_cast<std::size_t>(n_brokers) + 2; }
  std::size_t rows() const { return values.empty() ? 0 : values.size() / width(); }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * width(), width()}; }
  double x(std::size_t r, int i) const { return values[r * width() + static_cast<std::size_t>(i)]; }
  double y(std::size_t r) const { return values[r * width() + static_cast<std::size_t>(n_brokers)]; }
  double z(std::size_t r) const { return values[r * width() + static_cast<std::size_t>(n_brokers) + 1]; }
};

namespace detail {

class BrokerSampler {
 public:
  explicit BrokerSampler(const MarketConfig& cfg) : cfg_(cfg) {
    cfg.validate();
    if (!cfg.independent()) gauss_.emplace(GaussianVector::standard_equicorrelated(cfg.n_brokers, cfg.rho_xx));
  }

  /// Writes X_1..X_n, Y, Z into out.
  void draw(RandomState& rng, std::span<double> out) const {
    const auto n = static_cast<std::size_t>(cfg_.n_brokers);
    if (gauss_) {
      gauss_->draw(rng, out.subspan(0, n));
      for (std::size_t i = 0; i < n; ++i) out[i] = from_score(out[i]);
    } else {
      for (std::size_t i = 0; i < n; ++i) out[i] = cfg_.broker.draw(rng);
    }
    out[n] = cfg_.outsider ? cfg_.outsider->draw(rng) : -std::numeric_limits<double>::infinity();
    double z = out[n];
    for (std::size_t i = 0; i < n; ++i) z = std::max(z, out[i]);
    out[n + 1] = z;
  }

 private:
  double from_score(double s) const {
    if (const auto* nrm = std::get_if<Normal>(&cfg_.broker.family())) return nrm->mean + nrm->sd * s;
    return cfg_.broker.quantile(normal_cdf(s), normal_cdf(-s));
  }

  const MarketConfig& cfg_;
  std::optional<GaussianVector> gauss_;
};

}  // namespace detail

inline MarketSample simulate_market(const MarketConfig& cfg, const Executor& exec = Executor{}) {
  const detail::BrokerSampler sampler(cfg);
  MarketSample s;
  s.n_brokers = cfg.n_brokers;
  s.values.resize(cfg.n_samples * s.width());
  fill_rows(cfg.n_samples, RandomState(cfg.seed), exec, [&](RandomState& rng, std::size_t r) {
    sampler.draw(rng, std::span<double>(s.values.data() + r * s.width(), s.width()));
  });
  return s;
}

/// E(Z | X_i = x). Independent brokers: x + int_x^inf (1 - F_M(w)) dw with
/// F_M = F_X^(n-1) F_Y. Dependent brokers: Nadaraya-Watson of Z on the pooled
/// (X_i, Z) pairs of a separate training sample, tabulated on the trusted band,
/// made nondecreasing, extended linearly, and floored at x.
class CoalitionPredictor {
 public:
  static constexpr std::uint64_t kTrainingRows = 20'000;
  static constexpr std::size_t kTableNodes = 65;

  explicit CoalitionPredictor(const MarketConfig& cfg, const Executor& exec = Executor{}) : cfg_(cfg) {
    cfg_.validate();
    support_ = cfg_.broker.support();
    if (cfg_.independent()) {
      tabulate_tail();
    } else {
      fit(exec);
    }
  }

  const MarketConfig& config() const { return cfg_; }

  double operator()(int i, double x) const {
    if (i < 0 || i >= cfg_.n_brokers) throw DomainError("individual_predictor: broker index out of range");
    if (!(support_.contains(x))) {
      std::ostringstream os;
      os << "individual_predictor: x = " << x << " outside the broker support";
      throw ExtrapolationError(os.str());
    }
    return cfg_.independent() ? exact(x) : fitted(x);
  }

  double average(std::span<const double> prices) const {
    if (prices.size() < static_cast<std::size_t>(cfg_.n_brokers)) {
      throw DomainError("coalition_average_predictor: need one price per broker");
    }
    double sum = 0.0;
    for (int i = 0; i < cfg_.n_brokers; ++i) sum += (*this)(i, prices[static_cast<std::size_t>(i)]);
    return sum / cfg_.n_brokers;
  }

 private:
  double others_cdf(double w) const {
    double f = std::pow(cfg_.broker.cdf(w), cfg_.n_brokers - 1);
    if (cfg_.outsider) f *= cfg_.outsider->cdf(w);
    return f;
  }

  static constexpr std::size_t kTailNodes = 256;

  double integrate_gap(double a, double b) const {
    if (!(b > a)) return 0.0;
    QuadratureOptions opts;
    opts.abs_tol = 1e-12;
    opts.initial_panels = 2;
    return integrate([&](double w) { return 1.0 - others_cdf(w); }, a, b, opts);
  }

  /// tail_[k] = int_{nodes_[k]}^{top} (1 - F_M(w)) dw on a grid that
  /// includes every support endpoint, so each call integrates one piece.
  void tabulate_tail() {
    top_ = cfg_.broker.truncated_support().upper;
    double bottom = cfg_.broker.truncated_support().lower;
    std::vector<double> pts;
    if (cfg_.outsider) {
      const Interval o = cfg_.outsider->base.truncated_support();
      top_ = std::max(top_, o.upper);
      pts.push_back(cfg_.outsider->base.support().lower);
      pts.push_back(cfg_.outsider->base.support().upper);
    }
    pts.push_back(cfg_.broker.support().lower);
    pts.push_back(cfg_.broker.support().upper);
    for (std::size_t k = 0; k <= kTailNodes; ++k) {
      pts.push_back(bottom + (top_ - bottom) * static_cast<double>(k) / kTailNodes);
    }
    pts.push_back(top_);
    std::erase_if(pts, [&](double v) { return !(v >= bottom && v <= top_); });
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    tail_nodes_ = pts;
    tail_.assign(pts.size(), 0.0);
    for (std::size_t k = pts.size() - 1; k-- > 0;) tail_[k] = tail_[k + 1] + integrate_gap(pts[k], pts[k + 1]);
  }

  double exact(double x) const {
    if (cfg_.n_brokers == 1 && !cfg_.outsider) return x;
    if (x >= top_) return x;
    const auto it = std::lower_bound(tail_nodes_.begin(), tail_nodes_.end(), x);
    const auto k = static_cast<std::size_t>(it - tail_nodes_.begin());
    return x + integrate_gap(x, tail_nodes_[k]) + tail_[k];
  }

  void fit(const Executor& exec) {
    MarketConfig train = cfg_;
    train.n_samples = kTrainingRows;
    const detail::BrokerSampler sampler(train);
    const std::size_t w = static_cast<std::size_t>(cfg_.n_brokers) + 2;
    std::vector<double> rows(kTrainingRows * w);
    fill_rows(kTrainingRows, RandomState(cfg_.seed, 1), exec, [&](RandomState& rng, std::size_t r) {
      sampler.draw(rng, std::span<double>(rows.data() + r * w, w));
    });
    std::vector<double> xs;
    std::vector<double> zs;
    xs.reserve(kTrainingRows * static_cast<std::size_t>(cfg_.n_brokers));
    zs.reserve(xs.capacity());
    for (std::size_t r = 0; r < kTrainingRows; ++r) {
      for (int i = 0; i < cfg_.n_brokers; ++i) {
        xs.push_back(rows[r * w + static_cast<std::size_t>(i)]);
        zs.push_back(rows[r * w + w - 1]);
      }
    }
    const KernelRegressor nw(xs, zs);
    const Interval band = nw.trusted_band();
    nodes_.resize(kTableNodes);
    values_.resize(kTableNodes);
    exec.for_each_index(kTableNodes, [&](std::size_t k) {
      nodes_[k] = k + 1 == kTableNodes
                      ? band.upper
                      : band.lower + (band.upper - band.lower) * static_cast<double>(k) / (kTableNodes - 1);
      values_[k] = nw(nodes_[k]);
    });
    for (std::size_t k = 1; k < kTableNodes; ++k) values_[k] = std::max(values_[k], values_[k - 1]);
  }

  double fitted(double x) const {
    const std::size_t last = nodes_.size() - 1;
    double v;
    if (x <= nodes_.front()) {
      const double slope = (values_[1] - values_[0]) / (nodes_[1] - nodes_[0]);
      v = values_[0] + slope * (x - nodes_[0]);
    } else if (x >= nodes_.back()) {
      const double slope = (values_[last] - values_[last - 1]) / (nodes_[last] - nodes_[last - 1]);
      v = values_[last] + slope * (x - nodes_[last]);
    } else {
      const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
      const std::size_t k = static_cast<std::size_t>(it - nodes_.begin()) - 1;
      const double t = (x - nodes_[k]) / (nodes_[k + 1] - nodes_[k]);
      v = values_[k] + t * (values_[k + 1] - values_[k]);
    }
    return std::max(v, x);
  }

  MarketConfig cfg_;
  Interval support_{0.0, 0.0};
  double top_ = 0.0;
  std::vector<double> tail_nodes_;
  std::vector<double> tail_;
  std::vector<double> nodes_;
  std::vector<double> values_;
};

inline double individual_predictor(const MarketConfig& cfg, int i, double x) {
  return CoalitionPredictor(cfg)(i, x);
}

inline double coalition_average_predictor(const MarketConfig& cfg, std::span<const double> prices) {
  return CoalitionPredictor(cfg).average(prices);
}

struct CoalitionReport {
  int n_brokers = 0;
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;
  double coalition_mse = 0.0;
  std::vector<double> individual_mse;
  /// Index n is the outsider.
  std::vector<double> win_probability;
  std::vector<double> win_probability_se;
  double mean_z = 0.0;
  double mean_z_se = 0.0;
  /// One per broker: coalition MSE <= that broker's MSE.
  std::vector<InequalityReport> reports;

  bool satisfied() const {
    return std::all_of(reports.begin(), reports.end(), [](const InequalityReport& r) { return r.satisfied; });
  }
};

/// Paired MSEs on one evaluation sample. The winner of a row is the
/// strict maximum; ties go to the lowest index, the outsider last.
inline CoalitionReport compare_strategies(const MarketConfig& cfg, const Executor& exec = Executor{}) {
  require_samples(cfg.n_samples, "compare_strategies");
  const CoalitionPredictor predictor(cfg, exec);
  const detail::BrokerSampler sampler(cfg);
  const auto n = static_cast<std::size_t>(cfg.n_brokers);

  struct Acc {
    std::vector<PairedAccumulator> paired;
    std::vector<MeanVar> wins;
    MeanVar z;
    void merge(const Acc& o) {
      if (paired.empty()) {
        paired.resize(o.paired.size());
        wins.resize(o.wins.size());
      }
      for (std::size_t k = 0; k < o.paired.size(); ++k) paired[k].merge(o.paired[k]);
      for (std::size_t k = 0; k < o.wins.size(); ++k) wins[k].merge(o.wins[k]);
      z.merge(o.z);
    }
  };

  const auto parts = map_chunks<Acc>(cfg.n_samples, RandomState(cfg.seed), exec,
                                     [&](RandomState& rng, std::size_t, std::size_t count) {
    Acc acc;
    acc.paired.resize(n);
    acc.wins.resize(n + 1);
    std::vector<double> row(n + 2);
    std::vector<double> pred(n);
    for (std::size_t r = 0; r < count; ++r) {
      sampler.draw(rng, row);
      const double z = row[n + 1];
      double avg = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        pred[i] = predictor(static_cast<int>(i), row[i]);
        avg += pred[i];
      }
      avg /= static_cast<double>(n);
      const double coalition_err = (z - avg) * (z - avg);
      for (std::size_t i = 0; i < n; ++i) acc.paired[i].add(coalition_err, (z - pred[i]) * (z - pred[i]));
      std::size_t winner = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (row[i] > row[winner]) winner = i;
      }
      if (cfg.outsider && row[n] > row[winner]) winner = n;
      for (std::size_t k = 0; k <= n; ++k) acc.wins[k].add(k == winner ? 1.0 : 0.0);
      acc.z.add(z);
    }
    return acc;
  });
  const Acc total = merge_in_order(parts);

  CoalitionReport rep;
  rep.n_brokers = cfg.n_brokers;
  rep.n_samples = cfg.n_samples;
  rep.seed = cfg.seed;
  rep.coalition_mse = total.paired[0].lhs.mean();
  for (std::size_t i = 0; i < n; ++i) {
    rep.individual_mse.push_back(total.paired[i].rhs.mean());
    rep.reports.push_back(InequalityReport::paired(
        "coalition_vs_broker[" + std::to_string(i + 1) + "]", total.paired[i], cfg.seed));
  }
  for (const auto& w : total.wins) {
    rep.win_probability.push_back(w.mean());
    rep.win_probability_se.push_back(w.standard_error());
  }
  rep.mean_z = total.z.mean();
  rep.mean_z_se = total.z.standard_error();
  return rep;
}

}  // namespace condpred

#endif  // CONDPRED_COALITION_HPP
