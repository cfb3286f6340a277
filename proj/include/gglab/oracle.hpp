// Exact enumeration of Gibbs averages over small explicit measures.
//
// Tuples are enumerated lexicographically and summed with Kahan
// compensation, so results are bit-reproducible. A budget guards the m^n
// blowup.
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "gglab/math.hpp"
#include "gglab/measure.hpp"

namespace gglab {

inline constexpr std::uint64_t kDefaultEnumerationBudget = 10'000'000;

// <h> over G^(x)n: sum over all n-tuples of atoms of the weight product
// times h(tuple).
template <DiscreteMeasureLike M, class H>
double exact_tuple_average(const M& m, int n, H&& h,
                           std::uint64_t budget = kDefaultEnumerationBudget) {
  if (n < 1) throw std::invalid_argument("exact_tuple_average: n must be >= 1");
  const std::size_t atoms = m.atom_count();
  std::uint64_t total = 1;
  for (int i = 0; i < n; ++i) {
    if (total > budget / atoms) throw std::length_error("exact_tuple_average: budget exceeded");
    total *= atoms;
  }

  Tuple tuple(static_cast<std::size_t>(n), 0);
  KahanSum sum;
  for (std::uint64_t it = 0;; ++it) {
    double wp = 1.0;
    for (std::uint32_t a : tuple) wp *= m.weight(a);
    sum.add(wp * h(std::span<const std::uint32_t>(tuple)));
    // lexicographic odometer, last coordinate fastest
    int pos = n - 1;
    while (pos >= 0) {
      if (++tuple[static_cast<std::size_t>(pos)] < atoms) break;
      tuple[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return sum.value();
}

// <functional(R^n)> with the functional reading the tuple's overlap matrix.
template <DiscreteMeasureLike M, class F>
double exact_average(const M& m, int n, F&& functional,
                     std::uint64_t budget = kDefaultEnumerationBudget) {
  return exact_tuple_average(
      m, n,
      [&](std::span<const std::uint32_t> tuple) { return functional(gram_of(m, tuple)); },
      budget);
}

}  // namespace gglab
