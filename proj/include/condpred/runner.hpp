// runner.hpp
//
// Dispatches parsed configs to the verification routines and writes
// report files plus a run manifest.

#ifndef CONDPRED_RUNNER_HPP
#define CONDPRED_RUNNER_HPP

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "condpred/coalition.hpp"
#include "condpred/config.hpp"
#include "condpred/ordered.hpp"
#include "condpred/parallel.hpp"
#include "condpred/report.hpp"
#include "condpred/stats.hpp"
#include "condpred/theorems.hpp"

namespace condpred {

inline constexpr const char* kToolVersion = "0.1.0";

struct ExperimentResult {
  std::string experiment;
  std::string config_hash;
  json config;
  std::vector<InequalityReport> reports;
  json details = json::object();
  std::uint64_t discarded = 0;  // record sequences dropped at the length cap

  bool satisfied() const {
    return std::all_of(reports.begin(), reports.end(), [](const InequalityReport& r) { return r.satisfied; });
  }
};

namespace detail {

/// |estimate - closed| <= 4 SE as a report.
inline InequalityReport closed_form_check(const std::string& name, const MeanVar& estimate, double closed,
                                          std::uint64_t seed) {
  return InequalityReport::make(name, std::abs(estimate.mean() - closed), 4.0 * estimate.standard_error(), 0.0,
                                estimate.count(), seed);
}

inline json mean_se(const MeanVar& m) { return {{"mean", m.mean()}, {"se", m.standard_error()}, {"n", m.count()}}; }

inline void run_copies(const CopiesConfig& c, bool second, const ExperimentSpec& s, const Executor& exec,
                       ExperimentResult& out) {
  json cells = json::array();
  json infeasible = json::array();
  for (const auto& p : c.cells) {
    json cell = {{"n", p.n},
                 {"rho_xx", p.rho_xx},
                 {"rho_xy", p.rho_xy},
                 {"construction", to_string(p.construction)}};
    std::optional<JointCopiesModel> model;
    try {
      model.emplace(p);
    } catch (const ConstructionError& e) {
      if (!c.battery) throw;
      cell["reason"] = e.what();
      infeasible.push_back(cell);
      continue;
    }
    const InequalityReport r = second ? verify_theorem2(*model, s.n_samples, s.seed, exec)
                                      : verify_theorem1(*model, s.n_samples, s.seed, exec);
    cell["report"] = r.name;
    cells.push_back(cell);
    out.reports.push_back(r);
  }
  out.details["cells"] = cells;
  out.details["infeasible_cells"] = infeasible;
}

inline void run_theorem3(const Theorem3Config& c, const ExperimentSpec& s, const Executor& exec,
                         ExperimentResult& out) {
  const GaussianVector v(Eigen::VectorXd::Zero(c.covariance.rows()), c.covariance);
  const Theorem3Result r =
      c.duplicate ? verify_theorem3_duplicate(v, s.n_samples, s.seed, exec) : verify_theorem3(v, s.n_samples, s.seed, exec);
  out.reports.push_back(r.report);
  out.reports.push_back(closed_form_check("theorem3 E[X-E(X|Y,Z)]^2 = closed form", r.mse_both, r.closed_both, s.seed));
  out.reports.push_back(closed_form_check("theorem3 E[X-E(X|Y)]^2 = closed form", r.mse_first, r.closed_first, s.seed));
  out.reports.push_back(closed_form_check("theorem3 E[X-E(X|Z)]^2 = closed form", r.mse_second, r.closed_second, s.seed));
  out.details = {{"mse_both", mean_se(r.mse_both)},     {"mse_first", mean_se(r.mse_first)},
                 {"mse_second", mean_se(r.mse_second)}, {"closed_both", r.closed_both},
                 {"closed_first", r.closed_first},      {"closed_second", r.closed_second}};
}

inline void run_chain(const ChainConfig& c, const ExperimentSpec& s, const Executor& exec, ExperimentResult& out) {
  const GaussianVector v(Eigen::VectorXd::Zero(c.covariance.rows()), c.covariance);
  CorollaryChainResult r;
  if (c.estimator == "gaussian") {
    r = verify_corollary_chain(v, c.target, c.sets, s.n_samples, s.seed, exec);
  } else {
    auto sampler = [&](RandomState& rng, std::span<double> row) { v.draw(rng, row); };
    r = verify_corollary_chain_knn(sampler, v.dimension(), c.target, c.sets, s.n_samples, s.seed, c.n_train, exec);
  }
  out.reports = r.reports;
  json sets = json::array();
  for (std::size_t k = 0; k < c.sets.size(); ++k) {
    json entry = {{"set", set_label(c.sets[k])}, {"mse", mean_se(r.mse[k])}};
    if (k < r.closed_form.size()) {
      entry["closed_form"] = r.closed_form[k];
      out.reports.push_back(closed_form_check("corollary-chain mse[x" + std::to_string(c.target + 1) + "|" +
                                                  set_label(c.sets[k]) + "] = closed form",
                                              r.mse[k], r.closed_form[k], s.seed));
    }
    sets.push_back(entry);
  }
  out.details = {{"estimator", c.estimator}, {"sets", sets}};
}

inline void run_martingale(const MartingaleConfig& c, const ExperimentSpec& s, const Executor& exec,
                           ExperimentResult& out) {
  const MartingaleResult r = martingale_check(c.walk_length, c.subsets, s.n_samples, s.seed, exec);
  out.reports = r.reports;
  const std::string tag = "martingale[n=" + std::to_string(c.walk_length) + "]";
  out.reports.push_back(closed_form_check(tag + " E[S(n+1)-S(n)]^2 = 1", r.full, 1.0, s.seed));
  json subsets = json::array();
  for (std::size_t k = 0; k < c.subsets.size(); ++k) {
    std::string label = "{";
    for (std::size_t j = 0; j < c.subsets[k].size(); ++j) label += (j ? "," : "") + std::to_string(c.subsets[k][j]);
    label += "}";
    out.reports.push_back(closed_form_check(tag + " mse" + label + " = closed form", r.subset[k], r.closed_form[k], s.seed));
    subsets.push_back({{"subset", label}, {"mse", mean_se(r.subset[k])}, {"closed_form", r.closed_form[k]}});
  }
  out.details = {{"mse_full", mean_se(r.full)}, {"subsets", subsets}};
}

inline void run_order_stats(const OrderStatsConfig& c, const ExperimentSpec& s, const Executor& exec,
                            ExperimentResult& out) {
  const std::string tag = "order-stats[" + c.marginal.name() + ",n=" + std::to_string(c.n) + "]";
  json windows = json::array();
  if (!c.windows.empty()) {
    std::vector<WindowQuery> queries;
    for (const auto& w : c.windows) queries.push_back(w.query);
    const auto est = order_statistic_windows(c.marginal, c.n, queries, s.n_samples, s.seed, exec);
    for (std::size_t k = 0; k < est.size(); ++k) {
      const auto& q = c.windows[k].query;
      const int gap = c.n - q.rank;
      std::ostringstream name;
      name << tag << " window X" << q.rank << ":" << c.n << " in [" << q.x << "+-" << q.half_width << "] |mean X"
           << c.n << ":" << c.n << " - g" << gap << "|";
      json entry = {{"rank", q.rank}, {"x", q.x}, {"half_width", q.half_width}, {"count", est[k].target.count()}};
      if (est[k].target.count() < 2) {
        out.reports.push_back(InequalityReport::bound(name.str(), INFINITY, c.windows[k].tolerance, 0, s.seed));
      } else {
        const double oracle = conditional_max_mean(c.marginal, est[k].conditioning.mean(), gap);
        const double diff = std::abs(est[k].target.mean() - oracle);
        out.reports.push_back(
            InequalityReport::bound(name.str(), diff, c.windows[k].tolerance, est[k].target.count(), s.seed));
        entry["target"] = mean_se(est[k].target);
        entry["conditioning_mean"] = est[k].conditioning.mean();
        entry["oracle"] = oracle;
      }
      windows.push_back(entry);
    }
  }
  for (const auto& [k, l] : c.mse_pairs) {
    out.reports.push_back(mse_order_inequality(c.marginal, c.n, k, l, s.n_samples, s.seed, exec));
  }
  out.details["windows"] = windows;
  if (c.markov) {
    const MarkovCheckResult m = markov_property_check(c.marginal, c.n, s.n_samples, s.seed, exec);
    out.reports.push_back(m.report);
    json bins = json::array();
    for (const auto& b : m.bin_stats) {
      bins.push_back({{"conditioning_mean", b.conditioning.mean()}, {"target", mean_se(b.target)}});
    }
    out.details["markov"] = {{"bins", m.bins}, {"sub_bins", m.sub_bins}, {"widened", m.widened},
                             {"max_abs_z", m.max_abs_z}, {"bin_stats", bins}};
  }
}

inline void run_records(const RecordsConfig& c, const ExperimentSpec& s, const Executor& exec, ExperimentResult& out) {
  RecordPredictorResult r = record_predictor_mse(c.marginal, c.depth, c.near_lag, c.far_lag, s.n_samples, s.seed,
                                                 exec, c.bins, c.max_length);
  out.reports.push_back(r.report);
  const std::string tag = "records[" + c.marginal.name() + ",depth=" + std::to_string(c.depth) + "]";
  const RecordSimulation& ev = r.evaluation;

  // E(X_U(n) | X_U(n-1) = x) = E(X | X > x): compare coarse equal-count bin
  // means on the central 90% of the conditioning values.
  json bins = json::array();
  {
    const auto xs = ev.column(c.depth - 1);
    const auto ys = ev.column(c.depth);
    const double lo = percentile(xs, 0.05);
    const double hi = percentile(xs, 0.95);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (xs[i] >= lo && xs[i] <= hi) idx.push_back(i);
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    for (std::size_t b = 0; b < c.check_bins; ++b) {
      MeanVar y;
      MeanVar oracle;
      MeanVar x;
      for (std::size_t j = b * idx.size() / c.check_bins; j < (b + 1) * idx.size() / c.check_bins; ++j) {
        y.add(ys[idx[j]]);
        x.add(xs[idx[j]]);
        oracle.add(conditional_max_mean(c.marginal, xs[idx[j]], 1));
      }
      const double diff = std::abs(y.mean() - oracle.mean());
      std::ostringstream name;
      name << tag << " lag-1 regression bin " << (b + 1) << "/" << c.check_bins << " |mean - E(X|X>x)|";
      out.reports.push_back(InequalityReport::bound(name.str(), diff, c.check_tolerance, y.count(), s.seed));
      bins.push_back({{"x_mean", x.mean()}, {"y", mean_se(y)}, {"oracle_mean", oracle.mean()}});
    }
  }

  std::vector<double> gaps;
  for (int j = 2; j <= c.depth; ++j) {
    const auto g = record_hazard_gaps(ev, c.marginal, j);
    gaps.insert(gaps.end(), g.begin(), g.end());
  }
  const double d = ks_statistic(gaps, [](double g) { return g <= 0.0 ? 0.0 : -std::expm1(-g); });
  const double p = ks_pvalue(d, gaps.size());
  std::ostringstream ks_name;
  ks_name << tag << " hazard gaps ~ Exp(1): KS level <= p-value";
  out.reports.push_back(InequalityReport::make(ks_name.str(), c.ks_level, p, 0.0, gaps.size(), s.seed));

  out.discarded = r.training.discarded + r.evaluation.discarded;
  out.details = {{"kept_training", r.training.kept()},
                 {"kept_evaluation", ev.kept()},
                 {"discarded_training", r.training.discarded},
                 {"discarded_evaluation", ev.discarded},
                 {"regression_bins", bins},
                 {"ks_statistic", d},
                 {"ks_pvalue", p}};
}

inline void run_coalition(const CoalitionConfig& c, const Executor& exec, ExperimentResult& out) {
  const CoalitionReport r = compare_strategies(c.market, exec);
  out.reports = r.reports;
  out.details = {{"coalition_mse", r.coalition_mse},
                 {"individual_mse", r.individual_mse},
                 {"win_probability", r.win_probability},
                 {"win_probability_se", r.win_probability_se},
                 {"outsider", c.market.outsider.has_value()},
                 {"mean_z", r.mean_z},
                 {"mean_z_se", r.mean_z_se}};
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentSpec& s, const Executor& exec = Executor{}) {
  ExperimentResult out;
  out.experiment = s.experiment;
  out.config = s.source;
  out.config_hash = config_hash(s.source);
  try {
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, CopiesConfig>) {
            detail::run_copies(c, s.experiment == "theorem2", s, exec, out);
          } else if constexpr (std::is_same_v<T, Theorem3Config>) {
            detail::run_theorem3(c, s, exec, out);
          } else if constexpr (std::is_same_v<T, ChainConfig>) {
            detail::run_chain(c, s, exec, out);
          } else if constexpr (std::is_same_v<T, CovarianceConfig>) {
            const CovarianceResult r = verify_covariance_identity(c.model, s.n_samples, s.seed, exec);
            out.reports = r.reports;
            out.details = {{"cov_phi_y", detail::mean_se(r.cov_phi_y)},
                           {"cov_psi_x", detail::mean_se(r.cov_psi_x)},
                           {"cov_xy", detail::mean_se(r.cov_xy)}};
            if (c.counterexample) {
              const auto [cz, cxy] = covariance_counterexample(c.counterexample->rho, c.counterexample->sd1,
                                                                c.counterexample->sd2);
              out.details["counterexample"] = {{"rho", c.counterexample->rho},
                                               {"sd1", c.counterexample->sd1},
                                               {"sd2", c.counterexample->sd2},
                                               {"cov_z1_z2", cz},
                                               {"cov_x_y", cxy}};
            }
          } else if constexpr (std::is_same_v<T, CopulaSwapConfig>) {
            const CopulaSwapResult r = verify_copula_theorem(c.model, s.n_samples, s.seed, c.grid, c.tolerance, exec);
            out.reports = r.reports;
            out.details = {{"distance_swapped", r.distance_swapped}, {"grid", c.grid}, {"tolerance", c.tolerance}};
            if (r.distance_direct) out.details["distance_direct"] = *r.distance_direct;
          } else if constexpr (std::is_same_v<T, SequenceStatsConfig>) {
            const SequenceStatsResult r = predicted_sequence_stats(c.model, s.n_samples, s.seed, exec);
            out.reports = r.reports;
            out.details = {{"mean_y2", detail::mean_se(r.mean_y2)},
                           {"mean_x2", detail::mean_se(r.mean_x2)},
                           {"cov_y1_y2", detail::mean_se(r.cov_y)},
                           {"cov_x1_x2", detail::mean_se(r.cov_x)}};
          } else if constexpr (std::is_same_v<T, MartingaleConfig>) {
            detail::run_martingale(c, s, exec, out);
          } else if constexpr (std::is_same_v<T, OrderStatsConfig>) {
            detail::run_order_stats(c, s, exec, out);
          } else if constexpr (std::is_same_v<T, RecordsConfig>) {
            detail::run_records(c, s, exec, out);
          } else {
            detail::run_coalition(c, exec, out);
          }
        },
        s.model);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    // Keep the original type's message but name the experiment.
    throw std::runtime_error(s.experiment + ": " + e.what());
  }
  return out;
}

inline json report_json(const ExperimentResult& r) {
  json reports = json::array();
  for (const auto& rep : r.reports) reports.push_back(to_json(rep));
  return {{"schema_version", kSchemaVersion},
          {"experiment", r.experiment},
          {"config_hash", r.config_hash},
          {"config", r.config},
          {"satisfied", r.satisfied()},
          {"reports", reports},
          {"details", r.details}};
}

inline std::string report_json_text(const ExperimentResult& r) { return report_json(r).dump(2) + "\n"; }

inline std::string report_csv_text(const ExperimentResult& r) { return to_csv(r.experiment, r.reports); }

// ---------------------------------------------------------------------------
// Suites.

inline std::vector<json> default_suite() {
  const json uniform = {{"family", "uniform"}, {"lower", 0.0}, {"upper", 1.0}};
  const json exponential = {{"family", "exponential"}, {"rate", 1.0}};
  const json normal = {{"family", "normal"}, {"mean", 0.0}, {"sd", 1.0}};
  const json battery = {{"n", {1, 2, 3, 5}}, {"rho_xx", {0.0, 0.3, 0.9}}, {"rho_xy", {0.2, 0.5}}};
  const json comonotone = json::array({{{"n", 3}, {"rho_xy", 0.5}, {"construction", "comonotone"}}});
  std::vector<json> suite;
  suite.push_back({{"experiment", "theorem1"},
                   {"n_samples", 100000},
                   {"seed", 101},
                   {"model", {{"battery", battery}, {"cells", comonotone}}}});
  suite.push_back({{"experiment", "theorem2"},
                   {"n_samples", 100000},
                   {"seed", 102},
                   {"model", {{"battery", battery}, {"cells", comonotone}}}});
  suite.push_back({{"experiment", "theorem3"}, {"n_samples", 100000}, {"seed", 103}, {"model", {{"rho", 0.5}}}});
  suite.push_back({{"experiment", "corollary-chain"},
                   {"n_samples", 100000},
                   {"seed", 104},
                   {"model",
                    {{"ar1", {{"dim", 5}, {"coef", 0.6}}},
                     {"target", 5},
                     {"sets", json::array({json::array(), {1}, {1, 2}, {1, 2, 3, 4}})}}}});
  suite.push_back({{"experiment", "covariance"},
                   {"n_samples", 100000},
                   {"seed", 105},
                   {"model",
                    {{"copula", {{"family", "gaussian"}, {"rho", 0.5}}},
                     {"x", normal},
                     {"y", normal},
                     {"counterexample", {{"rho", 0.5}, {"sd1", 1.0}, {"sd2", 1.0}}}}}});
  suite.push_back({{"experiment", "copula-swap"},
                   {"n_samples", 100000},
                   {"seed", 106},
                   {"model",
                    {{"copula", {{"family", "gaussian"}, {"rho", 0.5}}},
                     {"x", normal},
                     {"y", normal},
                     {"grid", 50},
                     {"tolerance", 0.02}}}});
  suite.push_back({{"experiment", "sequence-stats"},
                   {"n_samples", 100000},
                   {"seed", 107},
                   {"model", {{"copula", {{"family", "fgm"}, {"theta", 0.8}}}, {"x", exponential}, {"y", uniform}}}});
  suite.push_back({{"experiment", "martingale"},
                   {"n_samples", 100000},
                   {"seed", 108},
                   {"model", {{"walk_length", 5}, {"subsets", json::array({{1}, {3}, {5}, {1, 2, 3}})}}}});
  json windows = json::array();
  for (const int rank : {4, 3}) {
    for (const double x : {0.2, 0.5, 0.8}) {
      windows.push_back({{"rank", rank}, {"x", x}, {"half_width", 0.05}, {"tolerance", 0.01}});
    }
  }
  suite.push_back({{"experiment", "order-stats"},
                   {"n_samples", 1000000},
                   {"seed", 109},
                   {"model",
                    {{"marginal", uniform},
                     {"n", 5},
                     {"windows", windows},
                     {"mse_pairs", json::array({{3, 4}})},
                     {"markov", true}}}});
  suite.push_back({{"experiment", "records"},
                   {"n_samples", 100000},
                   {"seed", 110},
                   {"model", {{"marginal", exponential}, {"depth", 4}, {"near_lag", 1}, {"far_lag", 2}}}});
  suite.push_back({{"experiment", "coalition"},
                   {"n_samples", 100000},
                   {"seed", 111},
                   {"model", {{"brokers", {{"count", 4}, {"marginal", uniform}, {"rho_xx", 0.0}}}, {"outsider", uniform}}}});
  return suite;
}

/// A suite is "default" or a path to a JSON file holding an array of
/// configs (or {"configs": [...]}).
inline std::vector<json> load_suite(const std::string& name) {
  if (name == "default") return default_suite();
  const json doc = read_json_file(name);
  const json* list = &doc;
  if (doc.is_object() && doc.contains("configs")) list = &doc["configs"];
  if (!list->is_array()) throw ConfigError(name, {{"configs", "must be an array of configs"}});
  return std::vector<json>(list->begin(), list->end());
}

inline std::string list_suite() {
  std::ostringstream os;
  os << "experiments:\n";
  for (const auto& n : experiment_names()) os << "  " << n << "\n";
  os << "suite default:\n";
  for (const auto& cfg : default_suite()) {
    os << "  " << cfg["experiment"].get<std::string>() << " n_samples=" << cfg["n_samples"].get<std::uint64_t>()
       << " seed=" << cfg["seed"].get<std::uint64_t>() << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Writing runs.

enum class OutputFormat { Json, Csv, Both };

struct RunEntry {
  ExperimentResult result;
  std::string stem;
  double wall_seconds = 0.0;
};

struct RunManifest {
  unsigned workers = 1;
  std::vector<RunEntry> entries;

  bool satisfied() const {
    return std::all_of(entries.begin(), entries.end(), [](const RunEntry& e) { return e.result.satisfied(); });
  }
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline json manifest_json(const RunManifest& m, OutputFormat format) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    json entry = {{"experiment", e.result.experiment},
                  {"config_hash", e.result.config_hash},
                  {"satisfied", e.result.satisfied()},
                  {"n_reports", e.result.reports.size()},
                  {"wall_seconds", e.wall_seconds},
                  {"discarded_sequences", e.result.discarded}};
    if (format != OutputFormat::Csv) entry["report_json"] = e.stem + ".json";
    if (format != OutputFormat::Json) entry["report_csv"] = e.stem + ".csv";
    entries.push_back(entry);
  }
  return {{"tool_version", kToolVersion},
          {"schema_version", kSchemaVersion},
          {"workers", m.workers},
          {"satisfied", m.satisfied()},
          {"experiments", entries}};
}

/// One row per experiment.
inline std::string suite_summary_csv(const RunManifest& m) {
  std::string out = "experiment,config_hash,n_reports,n_satisfied,satisfied\n";
  for (const auto& e : m.entries) {
    const auto ok = std::count_if(e.result.reports.begin(), e.result.reports.end(),
                                  [](const InequalityReport& r) { return r.satisfied; });
    out += csv_field(e.stem) + "," + e.result.config_hash + "," + std::to_string(e.result.reports.size()) + "," +
           std::to_string(ok) + (e.result.satisfied() ? ",true\n" : ",false\n");
  }
  return out;
}

/// Runs every spec, writing <stem>.json / <stem>.csv into out_dir, then
/// manifest.json (and summary.csv when there is more than one spec).
/// The manifest holds wall-clock timings; the report files do not.
inline RunManifest run_specs(const std::vector<ExperimentSpec>& specs, const std::filesystem::path& out_dir,
                             OutputFormat format, const Executor& exec) {
  std::filesystem::create_directories(out_dir);
  RunManifest m;
  m.workers = exec.workers();
  std::map<std::string, int> seen;
  for (const auto& s : specs) {
    const int k = ++seen[s.experiment];
    RunEntry e;
    e.stem = k == 1 ? s.experiment : s.experiment + "-" + std::to_string(k);
    const auto t0 = std::chrono::steady_clock::now();
    e.result = run_experiment(s, exec);
    e.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (format != OutputFormat::Csv) write_text(out_dir / (e.stem + ".json"), report_json_text(e.result));
    if (format != OutputFormat::Json) write_text(out_dir / (e.stem + ".csv"), report_csv_text(e.result));
    m.entries.push_back(std::move(e));
  }
  if (specs.size() > 1) write_text(out_dir / "summary.csv", suite_summary_csv(m));
  write_text(out_dir / "manifest.json", manifest_json(m, format).dump(2) + "\n");
  return m;
}

}  // namespace condpred

#endif  // CONDPRED_RUNNER_HPP
