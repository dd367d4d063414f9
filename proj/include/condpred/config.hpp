// config.hpp
//
// JSON scenario configs. Parsing collects every problem as a diagnostic
// (dotted key path plus the violated bound) instead of stopping at the first.
// Nothing here simulates; validation is parsing.

#ifndef CONDPRED_CONFIG_HPP
#define CONDPRED_CONFIG_HPP

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "condpred/coalition.hpp"
#include "condpred/condexp.hpp"
#include "condpred/copulas.hpp"
#include "condpred/error.hpp"
#include "condpred/marginals.hpp"
#include "condpred/ordered.hpp"
#include "condpred/theorems.hpp"

namespace condpred {

using json = nlohmann::json;

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "theorem1", "theorem2",   "theorem3", "corollary-chain", "covariance", "copula-swap",
      "sequence-stats", "martingale", "order-stats", "records", "coalition"};
  return names;
}

struct Diagnostic {
  std::string key;
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, std::vector<Diagnostic> diags)
      : std::runtime_error(render(source, diags)), source_(std::move(source)), diags_(std::move(diags)) {}

  const std::string& source() const { return source_; }
  const std::vector<Diagnostic>& diagnostics() const { return diags_; }

  static std::string render(const std::string& source, const std::vector<Diagnostic>& diags) {
    std::ostringstream os;
    for (std::size_t k = 0; k < diags.size(); ++k) {
      if (k) os << "\n";
      os << source << ": " << (diags[k].key.empty() ? "<root>" : diags[k].key) << ": " << diags[k].message;
    }
    return os.str();
  }

 private:
  std::string source_;
  std::vector<Diagnostic> diags_;
};

/// Numeric interval with open or closed ends, printed as "(-1, 1]".
struct Range {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_open = true;
  bool hi_open = true;

  static Range closed(double lo, double hi) { return {lo, hi, false, false}; }
  static Range open(double lo, double hi) { return {lo, hi, true, true}; }
  static Range positive() { return {0.0, std::numeric_limits<double>::infinity(), true, true}; }
  static Range any() { return {}; }

  bool contains(double x) const {
    if (!std::isfinite(x)) return false;
    const bool above = lo_open ? x > lo : x >= lo;
    const bool below = hi_open ? x < hi : x <= hi;
    return above && below;
  }

  std::string describe() const {
    std::ostringstream os;
    os << (lo_open ? "(" : "[") << lo << ", " << hi << (hi_open ? ")" : "]");
    return os.str();
  }
};

class ConfigReader {
 public:
  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  void error(const std::string& key, const std::string& message) { diags_.push_back({key, message}); }
  bool ok() const { return diags_.empty(); }
  const std::vector<Diagnostic>& diagnostics() const { return diags_; }

  /// obj[key] when present; a diagnostic if required and missing.
  const json* find(const json& obj, const std::string& path, const char* key, bool required) {
    if (!obj.is_object()) return nullptr;
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
      if (required) error(join(path, key), "required key is missing");
      return nullptr;
    }
    return &*it;
  }

  const json* object(const json& obj, const std::string& path, const char* key, bool required = true) {
    const json* v = find(obj, path, key, required);
    if (v && !v->is_object()) {
      error(join(path, key), "must be an object");
      return nullptr;
    }
    return v;
  }

  double real(const json& obj, const std::string& path, const char* key, Range range,
              std::optional<double> fallback = std::nullopt) {
    const json* v = find(obj, path, key, !fallback);
    if (!v) return fallback.value_or(0.0);
    return real_value(*v, join(path, key), range);
  }

  double real_value(const json& v, const std::string& key, Range range) {
    if (!v.is_number()) {
      error(key, "must be a number");
      return 0.0;
    }
    const double x = v.get<double>();
    if (!range.contains(x)) {
      std::ostringstream os;
      os << "value " << x << " outside " << range.describe();
      error(key, os.str());
    }
    return x;
  }

  std::int64_t integer(const json& obj, const std::string& path, const char* key, std::int64_t lo, std::int64_t hi,
                       std::optional<std::int64_t> fallback = std::nullopt) {
    const json* v = find(obj, path, key, !fallback);
    if (!v) return fallback.value_or(lo);
    return integer_value(*v, join(path, key), lo, hi);
  }

  std::int64_t integer_value(const json& v, const std::string& key, std::int64_t lo, std::int64_t hi) {
    if (!v.is_number_integer()) {
      error(key, "must be an integer");
      return lo;
    }
    const std::int64_t x = v.get<std::int64_t>();
    if (x < lo || x > hi) {
      std::ostringstream os;
      os << "value " << x << " outside [" << lo << ", " << hi << "]";
      error(key, os.str());
      return lo;
    }
    return x;
  }

  std::uint64_t unsigned_integer(const json& obj, const std::string& path, const char* key, std::uint64_t lo,
                                 std::optional<std::uint64_t> fallback = std::nullopt) {
    const json* v = find(obj, path, key, !fallback);
    if (!v) return fallback.value_or(lo);
    if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
      error(join(path, key), "must be a nonnegative integer");
      return lo;
    }
    const std::uint64_t x = v->get<std::uint64_t>();
    if (x < lo) {
      std::ostringstream os;
      os << "value " << x << " below minimum " << lo;
      error(join(path, key), os.str());
      return lo;
    }
    return x;
  }

  std::string choice(const json& obj, const std::string& path, const char* key, const std::vector<std::string>& options,
                     std::optional<std::string> fallback = std::nullopt) {
    const json* v = find(obj, path, key, !fallback);
    if (!v) return fallback.value_or(options.front());
    if (!v->is_string()) {
      error(join(path, key), "must be a string");
      return options.front();
    }
    const std::string s = v->get<std::string>();
    if (std::find(options.begin(), options.end(), s) == options.end()) {
      std::string all;
      for (const auto& o : options) all += (all.empty() ? "" : ", ") + o;
      error(join(path, key), "unknown value \"" + s + "\" (expected one of: " + all + ")");
      return options.front();
    }
    return s;
  }

  bool flag(const json& obj, const std::string& path, const char* key, bool fallback) {
    const json* v = find(obj, path, key, false);
    if (!v) return fallback;
    if (!v->is_boolean()) {
      error(join(path, key), "must be true or false");
      return fallback;
    }
    return v->get<bool>();
  }

  /// A list field; returns nullptr (with a diagnostic) if not an array.
  const json* array(const json& obj, const std::string& path, const char* key, bool required = true) {
    const json* v = find(obj, path, key, required);
    if (v && !v->is_array()) {
      error(join(path, key), "must be an array");
      return nullptr;
    }
    return v;
  }

  void unknown_keys(const json& obj, const std::string& path, const std::vector<std::string>& allowed) {
    if (!obj.is_object()) return;
    for (const auto& [k, _] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) error(join(path, k), "unknown key");
    }
  }

 private:
  std::vector<Diagnostic> diags_;
};

// ---------------------------------------------------------------------------
// Shared pieces.

inline Marginal parse_marginal(ConfigReader& rd, const json& obj, const std::string& path) {
  if (!obj.is_object()) {
    rd.error(path, "must be an object with a \"family\" key");
    return Marginal::uniform();
  }
  const std::string family = rd.choice(obj, path, "family", {"uniform", "exponential", "normal"});
  if (family == "uniform") {
    rd.unknown_keys(obj, path, {"family", "lower", "upper"});
    const double lo = rd.real(obj, path, "lower", Range::any(), 0.0);
    const double hi = rd.real(obj, path, "upper", Range::any(), 1.0);
    if (!(lo < hi)) {
      rd.error(ConfigReader::join(path, "upper"), "must exceed lower");
      return Marginal::uniform();
    }
    return Marginal::uniform(lo, hi);
  }
  if (family == "exponential") {
    rd.unknown_keys(obj, path, {"family", "rate"});
    const double rate = rd.real(obj, path, "rate", Range::positive(), 1.0);
    return rate > 0.0 ? Marginal::exponential(rate) : Marginal::exponential();
  }
  rd.unknown_keys(obj, path, {"family", "mean", "sd"});
  const double mean = rd.real(obj, path, "mean", Range::any(), 0.0);
  const double sd = rd.real(obj, path, "sd", Range::positive(), 1.0);
  return sd > 0.0 ? Marginal::normal(mean, sd) : Marginal::normal(mean);
}

inline Copula parse_copula(ConfigReader& rd, const json& obj, const std::string& path) {
  if (!obj.is_object()) {
    rd.error(path, "must be an object with a \"family\" key");
    return Copula::independence();
  }
  const std::string family = rd.choice(obj, path, "family", {"independence", "gaussian", "fgm", "clayton"});
  if (family == "gaussian") {
    rd.unknown_keys(obj, path, {"family", "rho"});
    const double rho = rd.real(obj, path, "rho", Range::open(-1.0, 1.0));
    return Range::open(-1.0, 1.0).contains(rho) ? Copula::gaussian(rho) : Copula::independence();
  }
  if (family == "fgm") {
    rd.unknown_keys(obj, path, {"family", "theta"});
    const double theta = rd.real(obj, path, "theta", Range::closed(-1.0, 1.0));
    return Range::closed(-1.0, 1.0).contains(theta) ? Copula::fgm(theta) : Copula::independence();
  }
  if (family == "clayton") {
    rd.unknown_keys(obj, path, {"family", "alpha"});
    const double alpha = rd.real(obj, path, "alpha", Range::positive());
    return alpha > 0.0 && std::isfinite(alpha) ? Copula::clayton(alpha) : Copula::independence();
  }
  rd.unknown_keys(obj, path, {"family"});
  return Copula::independence();
}

inline BivariateModel parse_bivariate(ConfigReader& rd, const json& model, const std::string& path) {
  BivariateModel m{Copula::independence(), Marginal::uniform(), Marginal::uniform()};
  if (const json* c = rd.object(model, path, "copula")) m.copula = parse_copula(rd, *c, ConfigReader::join(path, "copula"));
  if (const json* x = rd.object(model, path, "x")) m.marginal_x = parse_marginal(rd, *x, ConfigReader::join(path, "x"));
  if (const json* y = rd.object(model, path, "y")) m.marginal_y = parse_marginal(rd, *y, ConfigReader::join(path, "y"));
  return m;
}

/// Square symmetric matrix from nested arrays.
inline std::optional<Eigen::MatrixXd> parse_matrix(ConfigReader& rd, const json& v, const std::string& key) {
  if (!v.is_array() || v.empty()) {
    rd.error(key, "must be a nonempty array of rows");
    return std::nullopt;
  }
  const auto d = static_cast<Eigen::Index>(v.size());
  Eigen::MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d) {
      rd.error(key, "row " + std::to_string(i + 1) + " must have " + std::to_string(d) + " entries");
      return std::nullopt;
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      if (!row[static_cast<std::size_t>(j)].is_number()) {
        rd.error(key, "entries must be numbers");
        return std::nullopt;
      }
      m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
  }
  return m;
}

inline std::optional<GaussianVector> build_gaussian(ConfigReader& rd, const Eigen::MatrixXd& cov,
                                                    const std::string& key) {
  try {
    return GaussianVector(Eigen::VectorXd::Zero(cov.rows()), cov);
  } catch (const ConstructionError& e) {
    rd.error(key, e.what());
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Per-experiment configs.

struct CopiesConfig {
  std::vector<JointCopiesModel::Params> cells;
  bool battery = false;  // infeasible cells are skipped rather than rejected
};

struct Theorem3Config {
  Eigen::MatrixXd covariance;
  bool duplicate = false;
};

struct ChainConfig {
  Eigen::MatrixXd covariance;
  std::size_t target = 0;
  std::vector<std::vector<std::size_t>> sets;
  std::string estimator = "gaussian";
  std::size_t n_train = 5000;
};

struct CounterexampleConfig {
  double rho = 0.5;
  double sd1 = 1.0;
  double sd2 = 1.0;
};

struct CovarianceConfig {
  BivariateModel model;
  std::optional<CounterexampleConfig> counterexample;
};

struct CopulaSwapConfig {
  BivariateModel model;
  std::size_t grid = 50;
  double tolerance = 0.02;
};

struct SequenceStatsConfig {
  BivariateModel model;
};

struct MartingaleConfig {
  int walk_length = 5;
  std::vector<std::vector<int>> subsets;
};

struct WindowCheck {
  WindowQuery query;
  double tolerance = 0.01;
};

struct OrderStatsConfig {
  Marginal marginal = Marginal::uniform();
  int n = 5;
  std::vector<WindowCheck> windows;
  std::vector<std::pair<int, int>> mse_pairs;  // (k, l): lhs conditions on X_{l:n}, rhs on X_{k:n}
  bool markov = true;
};

struct RecordsConfig {
  Marginal marginal = Marginal::exponential();
  int depth = 4;
  int near_lag = 1;
  int far_lag = 2;
  std::size_t bins = 40;
  std::uint64_t max_length = kRecordMaxLength;
  std::size_t check_bins = 5;
  double check_tolerance = 0.03;
  double ks_level = 0.01;
};

struct CoalitionConfig {
  MarketConfig market;
};

using ModelConfig = std::variant<CopiesConfig, Theorem3Config, ChainConfig, CovarianceConfig, CopulaSwapConfig,
                                 SequenceStatsConfig, MartingaleConfig, OrderStatsConfig, RecordsConfig,
                                 CoalitionConfig>;

/// A parsed config: experiment name, typed model, sample size, seed.
struct ExperimentSpec {
  std::string experiment;
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;
  ModelConfig model;
  json source;  // effective config (seed and n_samples after overrides)
};

namespace detail {

inline CopiesConfig parse_copies(ConfigReader& rd, const json& m, const std::string& p) {
  CopiesConfig c;
  rd.unknown_keys(m, p, {"cells", "battery", "construction", "mean_x", "sd_x", "mean_y", "sd_y"});
  JointCopiesModel::Params base;
  base.mean_x = rd.real(m, p, "mean_x", Range::any(), 0.0);
  base.sd_x = rd.real(m, p, "sd_x", Range::positive(), 1.0);
  base.mean_y = rd.real(m, p, "mean_y", Range::any(), 0.0);
  base.sd_y = rd.real(m, p, "sd_y", Range::positive(), 1.0);
  const std::vector<std::string> kinds = {"equicorrelated", "conditional_iid", "comonotone"};
  auto construction = [&](const json& obj, const std::string& path) {
    const std::string s = rd.choice(obj, path, "construction", kinds, "equicorrelated");
    return s == "comonotone" ? CopiesConstruction::Comonotone
                             : (s == "conditional_iid" ? CopiesConstruction::ConditionalIid
                                                       : CopiesConstruction::Equicorrelated);
  };
  const json* cells = rd.array(m, p, "cells", false);
  const json* battery = rd.object(m, p, "battery", false);
  if (!cells && !battery) rd.error(ConfigReader::join(p, "cells"), "need \"cells\" or \"battery\"");
  if (cells) {
    for (std::size_t k = 0; k < cells->size(); ++k) {
      const json& cell = (*cells)[k];
      const std::string cp = ConfigReader::join(p, "cells[" + std::to_string(k) + "]");
      rd.unknown_keys(cell, cp, {"n", "rho_xx", "rho_xy", "construction"});
      JointCopiesModel::Params q = base;
      q.n = static_cast<int>(rd.integer(cell, cp, "n", 1, 1000));
      q.construction = construction(cell, cp);
      q.rho_xy = rd.real(cell, cp, "rho_xy", Range::closed(-1.0, 1.0));
      q.rho_xx = q.construction == CopiesConstruction::Equicorrelated
                     ? rd.real(cell, cp, "rho_xx", Range::closed(-1.0, 1.0))
                     : 0.0;
      c.cells.push_back(q);
    }
  }
  if (battery) {
    c.battery = true;
    const std::string bp = ConfigReader::join(p, "battery");
    rd.unknown_keys(*battery, bp, {"n", "rho_xx", "rho_xy"});
    std::vector<int> ns;
    std::vector<double> rxx;
    std::vector<double> rxy;
    if (const json* a = rd.array(*battery, bp, "n")) {
      for (std::size_t k = 0; k < a->size(); ++k) {
        ns.push_back(static_cast<int>(rd.integer_value((*a)[k], bp + ".n[" + std::to_string(k) + "]", 1, 1000)));
      }
    }
    for (auto [key, out] : {std::pair{"rho_xx", &rxx}, std::pair{"rho_xy", &rxy}}) {
      if (const json* a = rd.array(*battery, bp, key)) {
        for (std::size_t k = 0; k < a->size(); ++k) {
          out->push_back(rd.real_value((*a)[k], bp + "." + key + "[" + std::to_string(k) + "]",
                                       Range::closed(-1.0, 1.0)));
        }
      }
    }
    const CopiesConstruction kind = construction(m, p);
    for (const int n : ns) {
      for (const double a : rxx) {
        for (const double b : rxy) {
          JointCopiesModel::Params q = base;
          q.n = n;
          q.rho_xx = a;
          q.rho_xy = b;
          q.construction = kind;
          c.cells.push_back(q);
        }
      }
    }
  }
  if (rd.ok() && c.cells.empty()) rd.error(p, "no cells to run");
  if (!c.battery) {
    for (std::size_t k = 0; k < c.cells.size(); ++k) {
      try {
        JointCopiesModel model(c.cells[k]);
      } catch (const ConstructionError& e) {
        rd.error(ConfigReader::join(p, "cells[" + std::to_string(k) + "]"), e.what());
      }
    }
  }
  return c;
}

inline Theorem3Config parse_theorem3(ConfigReader& rd, const json& m, const std::string& p) {
  rd.unknown_keys(m, p, {"rho", "covariance", "duplicate"});
  Theorem3Config c;
  c.duplicate = rd.flag(m, p, "duplicate", false);
  const std::size_t dim = c.duplicate ? 2 : 3;
  if (const json* cov = rd.find(m, p, "covariance", false)) {
    if (auto mat = parse_matrix(rd, *cov, ConfigReader::join(p, "covariance"))) {
      if (static_cast<std::size_t>(mat->rows()) != dim) {
        rd.error(ConfigReader::join(p, "covariance"), "must be " + std::to_string(dim) + "x" + std::to_string(dim));
      } else if (build_gaussian(rd, *mat, ConfigReader::join(p, "covariance"))) {
        c.covariance = *mat;
      }
    }
  } else {
    const double rho = rd.real(m, p, "rho", Range::open(-1.0, 1.0));
    Eigen::MatrixXd s = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim), rho);
    s.diagonal().setOnes();
    if (rd.ok() && build_gaussian(rd, s, ConfigReader::join(p, "rho"))) c.covariance = s;
  }
  return c;
}

inline ChainConfig parse_chain(ConfigReader& rd, const json& m, const std::string& p) {
  rd.unknown_keys(m, p, {"covariance", "ar1", "target", "sets", "estimator", "n_train"});
  ChainConfig c;
  if (const json* ar = rd.object(m, p, "ar1", false)) {
    const std::string ap = ConfigReader::join(p, "ar1");
    rd.unknown_keys(*ar, ap, {"dim", "coef"});
    const auto d = static_cast<int>(rd.integer(*ar, ap, "dim", 2, 64));
    const double coef = rd.real(*ar, ap, "coef", Range::open(-1.0, 1.0));
    if (rd.ok()) c.covariance = GaussianVector::ar1(d, coef).covariance();
  } else if (const json* cov = rd.find(m, p, "covariance", false)) {
    if (auto mat = parse_matrix(rd, *cov, ConfigReader::join(p, "covariance"))) {
      if (build_gaussian(rd, *mat, ConfigReader::join(p, "covariance"))) c.covariance = *mat;
    }
  } else {
    rd.error(ConfigReader::join(p, "covariance"), "need \"covariance\" or \"ar1\"");
  }
  const auto dim = static_cast<std::int64_t>(c.covariance.rows());
  c.target = static_cast<std::size_t>(rd.integer(m, p, "target", 1, std::max<std::int64_t>(dim, 1)) - 1);
  c.estimator = rd.choice(m, p, "estimator", {"gaussian", "knn"}, "gaussian");
  c.n_train = static_cast<std::size_t>(rd.integer(m, p, "n_train", 100, 10'000'000, 5000));
  if (const json* sets = rd.array(m, p, "sets")) {
    for (std::size_t k = 0; k < sets->size(); ++k) {
      const std::string sp = ConfigReader::join(p, "sets[" + std::to_string(k) + "]");
      const json& s = (*sets)[k];
      if (!s.is_array()) {
        rd.error(sp, "must be an array of 1-based indices");
        continue;
      }
      std::vector<std::size_t> idx;
      for (std::size_t j = 0; j < s.size(); ++j) {
        idx.push_back(static_cast<std::size_t>(
            rd.integer_value(s[j], sp + "[" + std::to_string(j) + "]", 1, std::max<std::int64_t>(dim, 1)) - 1));
      }
      c.sets.push_back(std::move(idx));
    }
  }
  if (rd.ok()) {
    try {
      detail::require_nested(c.sets, c.target, static_cast<std::size_t>(dim));
    } catch (const DomainError& e) {
      rd.error(ConfigReader::join(p, "sets"), e.what());
    }
  }
  return c;
}

inline MartingaleConfig parse_martingale(ConfigReader& rd, const json& m, const std::string& p) {
  rd.unknown_keys(m, p, {"walk_length", "subsets"});
  MartingaleConfig c;
  c.walk_length = static_cast<int>(rd.integer(m, p, "walk_length", 1, 10'000));
  if (const json* subs = rd.array(m, p, "subsets")) {
    for (std::size_t k = 0; k < subs->size(); ++k) {
      const std::string sp = ConfigReader::join(p, "subsets[" + std::to_string(k) + "]");
      const json& s = (*subs)[k];
      if (!s.is_array() || s.empty()) {
        rd.error(sp, "must be a nonempty array of 1-based indices");
        continue;
      }
      std::vector<int> idx;
      for (std::size_t j = 0; j < s.size(); ++j) {
        idx.push_back(static_cast<int>(rd.integer_value(s[j], sp + "[" + std::to_string(j) + "]", 1, c.walk_length)));
      }
      c.subsets.push_back(std::move(idx));
    }
  }
  return c;
}

inline OrderStatsConfig parse_order_stats(ConfigReader& rd, const json& m, const std::string& p) {
  rd.unknown_keys(m, p, {"marginal", "n", "windows", "mse_pairs", "markov"});
  OrderStatsConfig c;
  if (const json* mg = rd.object(m, p, "marginal")) c.marginal = parse_marginal(rd, *mg, ConfigReader::join(p, "marginal"));
  c.n = static_cast<int>(rd.integer(m, p, "n", 2, 1000));
  c.markov = rd.flag(m, p, "markov", c.n >= 3);
  if (c.markov && c.n < 3) rd.error(ConfigReader::join(p, "markov"), "requires n >= 3");
  if (const json* ws = rd.array(m, p, "windows", false)) {
    for (std::size_t k = 0; k < ws->size(); ++k) {
      const std::string wp = ConfigReader::join(p, "windows[" + std::to_string(k) + "]");
      const json& w = (*ws)[k];
      rd.unknown_keys(w, wp, {"rank", "x", "half_width", "tolerance"});
      WindowCheck wc;
      wc.query.rank = static_cast<int>(rd.integer(w, wp, "rank", 1, std::max(1, c.n - 1)));
      wc.query.x = rd.real(w, wp, "x", Range::any());
      wc.query.half_width = rd.real(w, wp, "half_width", Range::positive(), 0.01);
      wc.tolerance = rd.real(w, wp, "tolerance", Range::positive(), 0.01);
      c.windows.push_back(wc);
    }
  }
  if (const json* ps = rd.array(m, p, "mse_pairs", false)) {
    for (std::size_t k = 0; k < ps->size(); ++k) {
      const std::string pp = ConfigReader::join(p, "mse_pairs[" + std::to_string(k) + "]");
      const json& pr = (*ps)[k];
      if (!pr.is_array() || pr.size() != 2) {
        rd.error(pp, "must be a pair [k, l] with 1 <= k <= l <= n-1");
        continue;
      }
      const int a = static_cast<int>(rd.integer_value(pr[0], pp + "[0]", 1, std::max(1, c.n - 1)));
      const int b = static_cast<int>(rd.integer_value(pr[1], pp + "[1]", 1, std::max(1, c.n - 1)));
      if (a > b) rd.error(pp, "need k <= l");
      c.mse_pairs.emplace_back(a, b);
    }
  }
  return c;
}

inline RecordsConfig parse_records(ConfigReader& rd, const json& m, const std::string& p) {
  rd.unknown_keys(m, p, {"marginal", "depth", "near_lag", "far_lag", "bins", "max_length", "check_bins",
                         "check_tolerance", "ks_level"});
  RecordsConfig c;
  if (const json* mg = rd.object(m, p, "marginal")) c.marginal = parse_marginal(rd, *mg, ConfigReader::join(p, "marginal"));
  c.depth = static_cast<int>(rd.integer(m, p, "depth", 2, 64));
  c.near_lag = static_cast<int>(rd.integer(m, p, "near_lag", 1, std::max(1, c.depth - 1), 1));
  c.far_lag = static_cast<int>(rd.integer(m, p, "far_lag", c.near_lag, std::max(c.near_lag, c.depth - 1), 2));
  c.bins = static_cast<std::size_t>(rd.integer(m, p, "bins", 2, 1000, 40));
  c.max_length = rd.unsigned_integer(m, p, "max_length", 2, kRecordMaxLength);
  c.check_bins = static_cast<std::size_t>(rd.integer(m, p, "check_bins", 1, 1000, 5));
  c.check_tolerance = rd.real(m, p, "check_tolerance", Range::positive(), 0.03);
  c.ks_level = rd.real(m, p, "ks_level", Range::open(0.0, 1.0), 0.01);
  return c;
}

inline CoalitionConfig parse_coalition(ConfigReader& rd, const json& m, const std::string& p) {
  rd.unknown_keys(m, p, {"brokers", "outsider"});
  CoalitionConfig c;
  MarketConfig& mk = c.market;
  if (const json* b = rd.object(m, p, "brokers")) {
    const std::string bp = ConfigReader::join(p, "brokers");
    rd.unknown_keys(*b, bp, {"count", "marginal", "rho_xx"});
    mk.n_brokers = static_cast<int>(rd.integer(*b, bp, "count", 1, 1000));
    if (const json* mg = rd.object(*b, bp, "marginal")) mk.broker = parse_marginal(rd, *mg, ConfigReader::join(bp, "marginal"));
    const double lower = mk.n_brokers > 1 ? -1.0 / (mk.n_brokers - 1) : -1.0;
    mk.rho_xx = rd.real(*b, bp, "rho_xx", Range::open(lower, 1.0), 0.0);
    mk.dependence = mk.rho_xx == 0.0 ? BrokerDependence::Iid : BrokerDependence::GaussianEquicorrelated;
  }
  if (const json* o = rd.find(m, p, "outsider", false)) {
    const std::string op = ConfigReader::join(p, "outsider");
    if (!o->is_object()) {
      rd.error(op, "must be a marginal or {marginal, count}");
    } else if (o->contains("marginal")) {
      rd.unknown_keys(*o, op, {"marginal", "count"});
      Outsider out;
      out.base = parse_marginal(rd, (*o)["marginal"], ConfigReader::join(op, "marginal"));
      out.count = static_cast<int>(rd.integer(*o, op, "count", 1, 100'000, 1));
      mk.outsider = out;
    } else {
      mk.outsider = Outsider{parse_marginal(rd, *o, op), 1};
    }
  }
  return c;
}

}  // namespace detail

/// Parses and validates one config. Throws ConfigError with every
/// diagnostic. seed_override / samples_override replace the config values.
inline ExperimentSpec parse_spec(const json& cfg, const std::string& source,
                                 std::optional<std::uint64_t> seed_override = std::nullopt,
                                 std::optional<std::uint64_t> samples_override = std::nullopt) {
  ConfigReader rd;
  ExperimentSpec spec;
  if (!cfg.is_object()) throw ConfigError(source, {{"", "config must be a JSON object"}});
  rd.unknown_keys(cfg, "", {"experiment", "n_samples", "seed", "model"});
  spec.experiment = rd.choice(cfg, "", "experiment", experiment_names());
  spec.n_samples = samples_override ? *samples_override : rd.unsigned_integer(cfg, "", "n_samples", kMinSamples);
  if (samples_override && *samples_override < kMinSamples) rd.error("n_samples", "value below minimum 1000");
  if (seed_override) {
    spec.seed = *seed_override;
  } else if (!cfg.contains("seed")) {
    rd.error("seed", "required key is missing (seeds are mandatory; pass one in the config or with --seed)");
  } else {
    spec.seed = rd.unsigned_integer(cfg, "", "seed", 0);
  }
  const json* model = rd.object(cfg, "", "model");
  if (model && rd.ok()) {
    const std::string& e = spec.experiment;
    const std::string p = "model";
    if (e == "theorem1" || e == "theorem2") {
      spec.model = detail::parse_copies(rd, *model, p);
    } else if (e == "theorem3") {
      spec.model = detail::parse_theorem3(rd, *model, p);
    } else if (e == "corollary-chain") {
      spec.model = detail::parse_chain(rd, *model, p);
    } else if (e == "covariance") {
      rd.unknown_keys(*model, p, {"copula", "x", "y", "counterexample"});
      CovarianceConfig c{parse_bivariate(rd, *model, p), std::nullopt};
      if (const json* ce = rd.object(*model, p, "counterexample", false)) {
        const std::string cp = ConfigReader::join(p, "counterexample");
        rd.unknown_keys(*ce, cp, {"rho", "sd1", "sd2"});
        c.counterexample = CounterexampleConfig{rd.real(*ce, cp, "rho", Range::open(-1.0, 1.0)),
                                                rd.real(*ce, cp, "sd1", Range::positive(), 1.0),
                                                rd.real(*ce, cp, "sd2", Range::positive(), 1.0)};
      }
      spec.model = c;
    } else if (e == "copula-swap") {
      rd.unknown_keys(*model, p, {"copula", "x", "y", "grid", "tolerance"});
      CopulaSwapConfig c{parse_bivariate(rd, *model, p)};
      c.grid = static_cast<std::size_t>(rd.integer(*model, p, "grid", 2, 2000, 50));
      c.tolerance = rd.real(*model, p, "tolerance", Range::positive(), 0.02);
      spec.model = c;
    } else if (e == "sequence-stats") {
      rd.unknown_keys(*model, p, {"copula", "x", "y"});
      spec.model = SequenceStatsConfig{parse_bivariate(rd, *model, p)};
    } else if (e == "martingale") {
      spec.model = detail::parse_martingale(rd, *model, p);
    } else if (e == "order-stats") {
      spec.model = detail::parse_order_stats(rd, *model, p);
    } else if (e == "records") {
      spec.model = detail::parse_records(rd, *model, p);
    } else {
      spec.model = detail::parse_coalition(rd, *model, p);
    }
  }
  if (!rd.ok()) throw ConfigError(source, rd.diagnostics());
  spec.source = cfg;
  spec.source["seed"] = spec.seed;
  spec.source["n_samples"] = spec.n_samples;
  if (auto* c = std::get_if<CoalitionConfig>(&spec.model)) {
    c->market.n_samples = spec.n_samples;
    c->market.seed = spec.seed;
  }
  return spec;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, {{"", "cannot open file"}});
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, {{"", std::string("invalid JSON: ") + e.what()}});
  }
}

/// Validates without simulating; returns the diagnostics (empty if valid).
inline std::vector<Diagnostic> validate_config(const json& cfg, const std::string& source = "<config>") {
  try {
    parse_spec(cfg, source);
  } catch (const ConfigError& e) {
    return e.diagnostics();
  }
  return {};
}

}  // namespace condpred

#endif  // CONDPRED_CONFIG_HPP
