// condpred: run verification experiments from JSON configs.
//
//   condpred verify <experiment> --config FILE [--seed N] [--workers K] [--out DIR] [--format json|csv|both]
//   condpred verify all --suite default|FILE [--workers K] [--out DIR] [--format ...]
//   condpred validate --config FILE
//   condpred list
//
// Exit status: 0 all verdicts satisfied, 1 some verdict unsatisfied,
// 2 bad usage or config, 3 runtime failure.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "condpred/condpred.hpp"

namespace {

constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

condpred::OutputFormat parse_format(const std::string& s) {
  if (s == "json") return condpred::OutputFormat::Json;
  if (s == "csv") return condpred::OutputFormat::Csv;
  return condpred::OutputFormat::Both;
}

void print_summary(const condpred::RunManifest& m, const std::string& out_dir) {
  for (const auto& e : m.entries) {
    std::size_t ok = 0;
    for (const auto& r : e.result.reports) ok += r.satisfied ? 1 : 0;
    std::cout << (e.result.satisfied() ? "ok   " : "FAIL ") << e.stem << "  " << ok << "/" << e.result.reports.size()
              << " satisfied  (" << e.wall_seconds << " s)\n";
    for (const auto& r : e.result.reports) {
      if (!r.satisfied) {
        std::cout << "     unsatisfied: " << r.name << "  lhs=" << r.lhs_estimate << " rhs=" << r.rhs_estimate
                  << " se=" << r.paired_diff_se << "\n";
      }
    }
  }
  std::cout << "reports written to " << out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conditional-expectation predictors and Monte Carlo verification of MSE inequalities"};
  app.require_subcommand(1);

  std::string experiment;
  std::string config_path;
  std::string suite;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::string out_dir = "reports";
  std::string format = "both";

  auto* verify = app.add_subcommand("verify", "run one experiment, or `all` with --suite");
  verify->add_option("experiment", experiment, "experiment name or `all`")->required();
  verify->add_option("--config", config_path, "JSON config file");
  verify->add_option("--suite", suite, "suite for `verify all`: default or a JSON file");
  verify->add_option("--seed", seed, "override the config seed");
  verify->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  verify->add_option("--out", out_dir, "output directory");
  verify->add_option("--format", format, "report format")->check(CLI::IsMember({"json", "csv", "both"}));

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("--config", validate_path, "JSON config file")->required();

  auto* list = app.add_subcommand("list", "list experiments and the default suite");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    std::cout << condpred::list_suite();
    return 0;
  }

  if (validate->parsed()) {
    try {
      const auto diags = condpred::validate_config(condpred::read_json_file(validate_path), validate_path);
      if (diags.empty()) {
        std::cout << validate_path << ": ok\n";
        return 0;
      }
      std::cerr << condpred::ConfigError::render(validate_path, diags) << "\n";
    } catch (const condpred::ConfigError& e) {
      std::cerr << e.what() << "\n";
    }
    return kExitConfig;
  }

  std::vector<condpred::ExperimentSpec> specs;
  try {
    if (experiment == "all") {
      if (suite.empty()) {
        std::cerr << "verify all: --suite is required\n";
        return kExitConfig;
      }
      const auto configs = condpred::load_suite(suite);
      for (std::size_t k = 0; k < configs.size(); ++k) {
        specs.push_back(condpred::parse_spec(configs[k], suite + "[" + std::to_string(k) + "]", seed));
      }
    } else {
      if (config_path.empty()) {
        std::cerr << "verify " << experiment << ": --config is required\n";
        return kExitConfig;
      }
      specs.push_back(condpred::parse_spec(condpred::read_json_file(config_path), config_path, seed));
      if (specs.back().experiment != experiment) {
        std::cerr << config_path << ": experiment: config is for \"" << specs.back().experiment
                  << "\", not \"" << experiment << "\"\n";
        return kExitConfig;
      }
    }
  } catch (const condpred::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }

  try {
    const auto manifest = condpred::run_specs(specs, out_dir, parse_format(format), condpred::Executor(workers));
    print_summary(manifest, out_dir);
    return manifest.satisfied() ? 0 : kExitViolation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
