// Small numeric helpers shared across the library.
#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace gglab {

// log(sum_i exp(a[i])). Empty input or all -inf yields -inf.
inline double log_sum_exp(std::span<const double> a) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : a) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : a) s += std::exp(x - m);
  return m + std::log(s);
}

// Compensated accumulator for long deterministic sums.
struct KahanSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) {
    double y = x - carry;
    double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const { return sum; }
};

inline double sq(double x) { return x * x; }

}  // namespace gglab
