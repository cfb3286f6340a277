// Piecewise-constant bounded functions on [-1, 1].
//
// Representation: strictly increasing cut points c_1 < ... < c_m and m+1
// values, one per cell (-inf, c_1), [c_1, c_2), ..., [c_m, +inf) clipped to
// [-1, 1]. Evaluation is right-continuous: the value at a cut point is the
// value of the cell starting there, so I(x >= q) and I(x < q) are exactly
// complementary.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace gglab {

class StepFunction {
 public:
  StepFunction() : values_{0.0} {}

  StepFunction(std::vector<double> cuts, std::vector<double> values)
      : cuts_(std::move(cuts)), values_(std::move(values)) {
    if (values_.size() != cuts_.size() + 1)
      throw std::invalid_argument("StepFunction: need one value per cell");
    for (std::size_t i = 0; i + 1 < cuts_.size(); ++i)
      if (!(cuts_[i] < cuts_[i + 1]))
        throw std::invalid_argument("StepFunction: cuts must be strictly increasing");
    for (double c : cuts_)
      if (!std::isfinite(c)) throw std::invalid_argument("StepFunction: non-finite cut");
    for (double v : values_)
      if (!std::isfinite(v)) throw std::invalid_argument("StepFunction: non-finite value");
  }

  double operator()(double x) const {
    auto it = std::upper_bound(cuts_.begin(), cuts_.end(), x);
    return values_[static_cast<std::size_t>(it - cuts_.begin())];
  }

  double bound() const {
    double b = 0.0;
    for (double v : values_) b = std::max(b, std::abs(v));
    return b;
  }

  bool is_zero() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
  }

  bool is_indicator() const {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return v == 0.0 || v == 1.0; });
  }

  StepFunction scaled(double t) const {
    std::vector<double> v = values_;
    for (double& x : v) x *= t;
    return StepFunction(cuts_, std::move(v));
  }

  const std::vector<double>& cuts() const { return cuts_; }
  const std::vector<double>& values() const { return values_; }

  static StepFunction constant(double c) { return StepFunction({}, {c}); }
  static StepFunction zero() { return constant(0.0); }

  // I(x >= q)
  static StepFunction indicator_geq(double q) { return StepFunction({q}, {0.0, 1.0}); }
  // I(x < q)
  static StepFunction indicator_lt(double q) { return StepFunction({q}, {1.0, 0.0}); }
  // I(a <= x <= b); the right edge is honored exactly by cutting just past b.
  static StepFunction indicator_closed(double a, double b) {
    if (!(a <= b)) throw std::invalid_argument("indicator_closed: a > b");
    const double after_b = std::nextafter(b, std::numeric_limits<double>::infinity());
    return StepFunction({a, after_b}, {0.0, 1.0, 0.0});
  }

 private:
  std::vector<double> cuts_;
  std::vector<double> values_;  // cuts_.size() + 1 entries
};

// 1 - f, for indicator complements.
inline StepFunction complement_indicator(const StepFunction& f) {
  std::vector<double> v = f.values();
  for (double& x : v) x = 1.0 - x;
  return StepFunction(f.cuts(), std::move(v));
}

// True when inner(x) != 0 implies outer(x) == 1 on [-1, 1]. Both step
// functions, so it is enough to check one representative point per cell of
// the merged cut refinement plus the cut points themselves.
inline bool indicator_subset_of(const StepFunction& inner, const StepFunction& outer) {
  std::vector<double> pts{-1.0, 1.0};
  for (double c : inner.cuts()) pts.push_back(c);
  for (double c : outer.cuts()) pts.push_back(c);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::vector<double> probes;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i] >= -1.0 && pts[i] <= 1.0) probes.push_back(pts[i]);
    if (i + 1 < pts.size()) {
      const double mid = 0.5 * (pts[i] + pts[i + 1]);
      if (mid >= -1.0 && mid <= 1.0) probes.push_back(mid);
    }
  }
  for (double x : probes)
    if (inner(x) != 0.0 && outer(x) != 1.0) return false;
  return true;
}

}  // namespace gglab
