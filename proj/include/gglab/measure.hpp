// Discrete random-measure interfaces: overlap matrices, discrete overlap
// laws, and explicit finite measures used by the exact enumeration oracle.
#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gglab/step_function.hpp"

namespace gglab {

using Tuple = std::vector<std::uint32_t>;

// Anything with weighted atoms and pairwise overlaps. The diagonal
// overlap(i, i) is the squared norm of atom i.
template <class M>
concept DiscreteMeasureLike = requires(const M& m, std::uint32_t i, std::uint32_t j) {
  { m.atom_count() } -> std::convertible_to<std::size_t>;
  { m.weight(i) } -> std::convertible_to<double>;
  { m.overlap(i, j) } -> std::convertible_to<double>;
};

// Symmetric n x n overlap matrix of a replica tuple.
class OverlapMatrix {
 public:
  explicit OverlapMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {}

  int n() const { return n_; }
  double at(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }
  void set(int i, int j, double v) {
    a_[static_cast<std::size_t>(i) * n_ + j] = v;
    a_[static_cast<std::size_t>(j) * n_ + i] = v;
  }

 private:
  int n_;
  std::vector<double> a_;
};

template <DiscreteMeasureLike M>
OverlapMatrix gram_of(const M& m, std::span<const std::uint32_t> tuple) {
  OverlapMatrix r(static_cast<int>(tuple.size()));
  for (int i = 0; i < r.n(); ++i)
    for (int j = i; j < r.n(); ++j) r.set(i, j, m.overlap(tuple[i], tuple[j]));
  return r;
}

// Law of a scalar overlap on a finite support: points with masses, plus
// optional standard errors when the masses were estimated.
struct DiscreteLaw {
  std::vector<double> points;
  std::vector<double> masses;
  std::vector<double> ses;  // empty when the law is exact

  double integrate(const StepFunction& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) s += masses[i] * f(points[i]);
    return s;
  }

  double total_mass() const { return std::accumulate(masses.begin(), masses.end(), 0.0); }
};

// Inverse-CDF atom draw from a cumulative weight table whose last entry is 1.
template <class Rng>
std::uint32_t sample_from_cumulative(std::span<const double> cumulative, Rng& rng) {
  const double u = rng.u01();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  auto idx = static_cast<std::size_t>(it - cumulative.begin());
  if (idx >= cumulative.size()) idx = cumulative.size() - 1;
  return static_cast<std::uint32_t>(idx);
}

// An arbitrary explicit measure: atom weights plus a symmetric Gram matrix.
class FiniteMeasure {
 public:
  FiniteMeasure(std::vector<double> weights, std::vector<double> gram)
      : w_(std::move(weights)), gram_(std::move(gram)), m_(w_.size()) {
    if (m_ == 0) throw std::invalid_argument("FiniteMeasure: no atoms");
    if (gram_.size() != m_ * m_)
      throw std::invalid_argument("FiniteMeasure: gram size mismatch");
    double sum = 0.0;
    for (double w : w_) {
      if (!(w > 0.0)) throw std::invalid_argument("FiniteMeasure: weights must be positive");
      sum += w;
    }
    for (double& w : w_) w /= sum;
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < m_; ++j) {
        const double g = gram_[i * m_ + j];
        if (g != gram_[j * m_ + i])
          throw std::invalid_argument("FiniteMeasure: gram not symmetric");
        if (std::abs(g) > 1.0 + 1e-12)
          throw std::invalid_argument("FiniteMeasure: gram entry outside [-1, 1]");
      }
    cum_.resize(m_);
    double c = 0.0;
    for (std::size_t i = 0; i < m_; ++i) {
      c += w_[i];
      cum_[i] = c;
    }
    cum_.back() = 1.0;
  }

  std::size_t atom_count() const { return m_; }
  double weight(std::uint32_t i) const { return w_[i]; }
  double overlap(std::uint32_t i, std::uint32_t j) const { return gram_[std::size_t{i} * m_ + j]; }

  template <class Rng>
  std::uint32_t sample_atom(Rng& rng) const {
    return sample_from_cumulative<Rng>(cum_, rng);
  }

  // Exact law of overlap(a, b) under w (x) w, including the diagonal.
  DiscreteLaw pair_law() const {
    std::vector<double> pts;
    std::vector<double> mass;
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < m_; ++j) {
        const double g = overlap(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
        const double p = w_[i] * w_[j];
        auto it = std::lower_bound(pts.begin(), pts.end(), g);
        if (it != pts.end() && *it == g) {
          mass[static_cast<std::size_t>(it - pts.begin())] += p;
        } else {
          mass.insert(mass.begin() + (it - pts.begin()), p);
          pts.insert(it, g);
        }
      }
    return DiscreteLaw{std::move(pts), std::move(mass), {}};
  }

  // Plain text format: first line the weights, then m gram rows.
  static FiniteMeasure from_stream(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("FiniteMeasure: empty input");
    std::vector<double> w;
    {
      std::istringstream ls(line);
      double x;
      while (ls >> x) w.push_back(x);
    }
    const std::size_t m = w.size();
    std::vector<double> gram;
    gram.reserve(m * m);
    for (std::size_t i = 0; i < m; ++i) {
      if (!std::getline(in, line))
        throw std::invalid_argument("FiniteMeasure: missing gram row");
      std::istringstream ls(line);
      double x;
      std::size_t count = 0;
      while (ls >> x) {
        gram.push_back(x);
        ++count;
      }
      if (count != m) throw std::invalid_argument("FiniteMeasure: bad gram row length");
    }
    return FiniteMeasure(std::move(w), std::move(gram));
  }

  static FiniteMeasure from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("FiniteMeasure: cannot open " + path);
    return from_stream(in);
  }

 private:
  std::vector<double> w_;
  std::vector<double> gram_;
  std::size_t m_;
  std::vector<double> cum_;
};

}  // namespace gglab
