// Flat key = value config files with [section] blocks.
//
//   # target
//   depth = 2
//   zetas = 0.3, 0.7
//   qs = 0, 0.4, 1
//   branching = 64, 64
//   n-outer = 100000
//
//   [f1]
//   breaks = 0.4, 1
//   vals = 0, 0.5, 1
//
//   [b1]
//   set = [0.4, 1]
//
// Section keys are addressed as "section.key". Step functions are given by
// breaks/vals; sets are lists of closed intervals. Command-line flags
// override file values.
#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gglab/cascade.hpp"
#include "gglab/mc.hpp"
#include "gglab/step_function.hpp"

namespace gglab {

class Config {
 public:
  static Config parse(std::istream& in) {
    Config cfg;
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string s = strip(strip_comment(line));
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']')
          throw std::invalid_argument("config line " + std::to_string(lineno) + ": bad section");
        section = strip(s.substr(1, s.size() - 2));
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
      std::string key = strip(s.substr(0, eq));
      const std::string value = strip(s.substr(eq + 1));
      if (key.empty())
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
      if (!section.empty()) key = section + "." + key;
      cfg.kv_[key] = value;
    }
    return cfg;
  }

  static Config parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static Config parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    return parse(in);
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }

  std::string get_string(const std::string& key, const std::string& fallback = "") const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : parse_double(it->second, key);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
      return std::stoull(it->second);
    } catch (const std::exception&) {
      throw std::invalid_argument("config: bad integer for " + key);
    }
  }

  std::vector<double> get_list(const std::string& key,
                               std::vector<double> fallback = {}) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::vector<double> out;
    for (const auto& tok : split(it->second, ',')) out.push_back(parse_double(tok, key));
    return out;
  }

  std::vector<std::size_t> get_size_list(const std::string& key,
                                         std::vector<std::size_t> fallback = {}) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::vector<std::size_t> out;
    for (const auto& tok : split(it->second, ',')) {
      try {
        out.push_back(std::stoull(strip(tok)));
      } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer list for " + key);
      }
    }
    return out;
  }

  std::vector<int> get_int_list(const std::string& key, std::vector<int> fallback = {}) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    std::vector<int> out;
    for (const auto& tok : split(it->second, ','))
      out.push_back(static_cast<int>(std::stol(strip(tok))));
    return out;
  }

  // Step function from "<section>.breaks" / "<section>.vals".
  std::optional<StepFunction> maybe_step(const std::string& section) const {
    if (!has(section + ".vals")) return std::nullopt;
    const auto vals = get_list(section + ".vals");
    const auto breaks = get_list(section + ".breaks");
    return StepFunction(breaks, vals);
  }

  // Indicator of a union of closed intervals from "<key>", e.g.
  // "[0.4, 1] [-1, -0.2]".
  std::optional<StepFunction> maybe_set(const std::string& key) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    return parse_interval_union(it->second, key);
  }

  static StepFunction parse_interval_union(const std::string& text, const std::string& key) {
    std::vector<std::pair<double, double>> intervals;
    std::size_t pos = 0;
    while (pos < text.size()) {
      while (pos < text.size() && (std::isspace(static_cast<unsigned char>(text[pos])) || text[pos] == ','))
        ++pos;
      if (pos >= text.size()) break;
      if (text[pos] != '[') throw std::invalid_argument("config: bad interval list for " + key);
      const auto close = text.find(']', pos);
      if (close == std::string::npos)
        throw std::invalid_argument("config: unterminated interval for " + key);
      const auto body = split(text.substr(pos + 1, close - pos - 1), ',');
      if (body.size() != 2) throw std::invalid_argument("config: interval needs two endpoints: " + key);
      intervals.emplace_back(parse_double(body[0], key), parse_double(body[1], key));
      pos = close + 1;
    }
    if (intervals.empty()) throw std::invalid_argument("config: empty set for " + key);
    std::sort(intervals.begin(), intervals.end());
    std::vector<std::pair<double, double>> merged{intervals.front()};
    for (std::size_t i = 1; i < intervals.size(); ++i) {
      if (intervals[i].first <= merged.back().second) {
        merged.back().second = std::max(merged.back().second, intervals[i].second);
      } else {
        merged.push_back(intervals[i]);
      }
    }
    std::vector<double> cuts;
    std::vector<double> values{0.0};
    for (const auto& [a, b] : merged) {
      cuts.push_back(a);
      values.push_back(1.0);
      cuts.push_back(std::nextafter(b, std::numeric_limits<double>::infinity()));
      values.push_back(0.0);
    }
    return StepFunction(std::move(cuts), std::move(values));
  }

  CascadeSpec get_cascade(const CascadeSpec& fallback) const {
    CascadeSpec spec = fallback;
    spec.zetas = get_list("zetas", fallback.zetas);
    spec.qs = get_list("qs", fallback.qs);
    spec.branching = get_size_list("branching", fallback.branching);
    spec.leaf_budget = get_u64("leaf-budget", fallback.leaf_budget);
    if (has("depth") && get_u64("depth", 0) != spec.zetas.size())
      throw std::invalid_argument("config: depth does not match zetas");
    return spec;
  }

  EstimatorConfig get_estimator(const EstimatorConfig& fallback) const {
    EstimatorConfig cfg = fallback;
    cfg.n_outer = get_u64("n-outer", fallback.n_outer);
    cfg.n_batches = static_cast<std::uint32_t>(get_u64("n-batches", fallback.n_batches));
    cfg.seed = get_u64("seed", fallback.seed);
    cfg.workers = static_cast<std::uint32_t>(get_u64("workers", fallback.workers));
    cfg.z_max = get_double("z-max", fallback.z_max);
    cfg.truncation = get_u64("truncation", fallback.truncation);
    cfg.leaf_budget = get_u64("leaf-budget", fallback.leaf_budget);
    cfg.n_outer -= cfg.n_outer % cfg.n_batches;
    return cfg;
  }

 private:
  static std::string strip_comment(const std::string& s) {
    const auto h = s.find('#');
    return h == std::string::npos ? s : s.substr(0, h);
  }
  static std::string strip(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }
  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == sep) {
        out.push_back(strip(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    out.push_back(strip(cur));
    while (!out.empty() && out.back().empty()) out.pop_back();
    return out;
  }
  static double parse_double(const std::string& s, const std::string& key) {
    try {
      std::size_t used = 0;
      const double v = std::stod(strip(s), &used);
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument("config: bad number for " + key);
    }
  }

  std::map<std::string, std::string> kv_;
};

}  // namespace gglab
