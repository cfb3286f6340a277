// Check reports: paired estimates of both sides of an identity with a
// z-score verdict, serialized as JSON records or CSV rows.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "gglab/mc.hpp"

namespace gglab {

struct IdentityReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double se_lhs = 0.0;
  double se_rhs = 0.0;
  double se_diff = 0.0;
  double z = 0.0;
  std::uint64_t n_outer = 0;
  std::uint64_t seed = 0;
  bool pass = false;
  double wall_time_s = 0.0;
};

// Degenerate se_diff (both sides deterministic under pairing) falls back to
// an exact-equality verdict instead of a z-score.
inline IdentityReport finalize_report(std::string name, double lhs, double rhs, double se_lhs,
                                      double se_rhs, double se_diff, std::uint64_t n_outer,
                                      std::uint64_t seed, double z_max) {
  IdentityReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.se_lhs = se_lhs;
  r.se_rhs = se_rhs;
  r.se_diff = se_diff;
  r.n_outer = n_outer;
  r.seed = seed;
  const double diff = lhs - rhs;
  const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
  if (se_diff <= 1e-12 * scale) {
    // both sides deterministic under pairing: exact-equality verdict
    const bool equal = std::abs(diff) <= 1e-12 * scale;
    r.z = equal ? 0.0 : diff / std::max(se_diff, 1e-300);
    r.pass = equal;
  } else {
    r.z = diff / se_diff;
    r.pass = std::abs(r.z) <= z_max;
  }
  return r;
}

inline IdentityReport report_from_paired(std::string name, const PairedStats& s,
                                         const EstimatorConfig& cfg) {
  return finalize_report(std::move(name), s.lhs.mean, s.rhs.mean, s.lhs.se, s.rhs.se, s.diff.se,
                         cfg.n_outer, cfg.seed, cfg.z_max);
}

inline nlohmann::ordered_json to_json(const IdentityReport& r) {
  return nlohmann::ordered_json{
      {"name", r.name},       {"lhs", r.lhs},
      {"rhs", r.rhs},         {"se_lhs", r.se_lhs},
      {"se_rhs", r.se_rhs},   {"se_diff", r.se_diff},
      {"z", r.z},             {"n_outer", r.n_outer},
      {"seed", r.seed},       {"pass", r.pass},
      {"wall_time_s", r.wall_time_s}};
}

inline std::string csv_header() {
  return "name,lhs,rhs,se_lhs,se_rhs,se_diff,z,n_outer,seed,pass,wall_time_s";
}

inline std::string to_csv_row(const IdentityReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%llu,%llu,%d,%.17g",
                r.name.c_str(), r.lhs, r.rhs, r.se_lhs, r.se_rhs, r.se_diff, r.z,
                static_cast<unsigned long long>(r.n_outer),
                static_cast<unsigned long long>(r.seed), r.pass ? 1 : 0, r.wall_time_s);
  return std::string(buf);
}

}  // namespace gglab
