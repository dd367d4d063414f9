// report.hpp
//
// Serialization of verdicts. Numbers are written in shortest round-trip
// form so report bytes depend only on the values.

#ifndef CONDPRED_REPORT_HPP
#define CONDPRED_REPORT_HPP

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "condpred/theorems.hpp"

namespace condpred {

inline constexpr int kSchemaVersion = 1;

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Hash of the canonical dump (object keys sorted, shortest numbers), so
/// key order and whitespace in the source file do not matter.
inline std::string config_hash(const nlohmann::json& cfg) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(fnv1a64(cfg.dump())));
  return buf;
}

inline nlohmann::json to_json(const InequalityReport& r) {
  return {{"name", r.name},
          {"lhs_estimate", r.lhs_estimate},
          {"rhs_estimate", r.rhs_estimate},
          {"paired_diff_se", r.paired_diff_se},
          {"n_samples", r.n_samples},
          {"seed", r.seed},
          {"satisfied", r.satisfied},
          {"margin_sigmas", r.margin_sigmas}};
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline const char* csv_header() {
  return "experiment,name,lhs_estimate,rhs_estimate,paired_diff_se,n_samples,seed,satisfied,margin_sigmas\n";
}

inline std::string csv_row(const std::string& experiment, const InequalityReport& r) {
  std::string row = csv_field(experiment);
  row += "," + csv_field(r.name);
  row += "," + format_number(r.lhs_estimate);
  row += "," + format_number(r.rhs_estimate);
  row += "," + format_number(r.paired_diff_se);
  row += "," + std::to_string(r.n_samples);
  row += "," + std::to_string(r.seed);
  row += r.satisfied ? ",true" : ",false";
  row += "," + format_number(r.margin_sigmas);
  return row + "\n";
}

inline std::string to_csv(const std::string& experiment, const std::vector<InequalityReport>& reports) {
  std::string out = csv_header();
  for (const auto& r : reports) out += csv_row(experiment, r);
  return out;
}

}  // namespace condpred

#endif  // CONDPRED_REPORT_HPP
