// The functionals the identities are built from.
//
// For n replicas (sigma^1, ..., sigma^n) and bounded step functions f_l of
// one overlap:
//   F(sigma | tuple)   = sum_l f_l(sigma . sigma^l)
//   F_l(sigma | tuple) = F - f_l(sigma . sigma^l) + integral of f_l d(mu)
//                        for l < n, and F itself for l >= n (0-based l)
//   Fbar(sigma)        = F(sigma) - (1/n) sum_l F_l(sigma^l)
// Inner averages over sigma are exact sums over the measure's atoms, done in
// log space. Partitions (B_alpha) are indexed by subsets alpha of the
// coordinates, encoded as bitmasks: atom in B_alpha iff for every l,
// (overlap with sigma^l not in B_l) <=> bit l of alpha is set.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "gglab/math.hpp"
#include "gglab/measure.hpp"
#include "gglab/step_function.hpp"

namespace gglab {

// n step functions plus their cached mu-integrals.
struct FunctionFamily {
  std::vector<StepFunction> f;
  std::vector<double> mu_integral;

  int n() const { return static_cast<int>(f.size()); }

  static FunctionFamily zero(int n) {
    FunctionFamily fam;
    fam.f.assign(static_cast<std::size_t>(n), StepFunction::zero());
    fam.mu_integral.assign(static_cast<std::size_t>(n), 0.0);
    return fam;
  }

  static FunctionFamily with_mu(std::vector<StepFunction> fs, const DiscreteLaw& mu) {
    FunctionFamily fam;
    fam.mu_integral.reserve(fs.size());
    for (const auto& g : fs) fam.mu_integral.push_back(mu.integrate(g));
    fam.f = std::move(fs);
    return fam;
  }

  void recompute_integrals(const DiscreteLaw& mu) {
    for (std::size_t l = 0; l < f.size(); ++l) mu_integral[l] = mu.integrate(f[l]);
  }
};

template <DiscreteMeasureLike M>
double eval_F(const FunctionFamily& fam, const M& m, std::uint32_t atom,
              std::span<const std::uint32_t> tuple) {
  if (tuple.size() != fam.f.size())
    throw std::invalid_argument("eval_F: tuple length must equal family size");
  double s = 0.0;
  for (std::size_t l = 0; l < tuple.size(); ++l) s += fam.f[l](m.overlap(atom, tuple[l]));
  return s;
}

// 0-based l; l >= n falls back to F per the extended definition.
template <DiscreteMeasureLike M>
double eval_F_l(const FunctionFamily& fam, const M& m, int l, std::uint32_t atom,
                std::span<const std::uint32_t> tuple) {
  double s = eval_F(fam, m, atom, tuple);
  if (l >= 0 && l < fam.n())
    s += fam.mu_integral[static_cast<std::size_t>(l)] -
         fam.f[static_cast<std::size_t>(l)](m.overlap(atom, tuple[static_cast<std::size_t>(l)]));
  return s;
}

// sum_{l < n} F_l(sigma^l | tuple), the numerator exponent of the change of
// density.
template <DiscreteMeasureLike M>
double sum_F_l_at_replicas(const FunctionFamily& fam, const M& m,
                           std::span<const std::uint32_t> tuple) {
  double s = 0.0;
  for (std::size_t l = 0; l < tuple.size(); ++l)
    s += eval_F_l(fam, m, static_cast<int>(l), tuple[l], tuple);
  return s;
}

template <DiscreteMeasureLike M>
double eval_Fbar(const FunctionFamily& fam, const M& m, std::uint32_t atom,
                 std::span<const std::uint32_t> tuple) {
  const double n = static_cast<double>(tuple.size());
  return eval_F(fam, m, atom, tuple) - sum_F_l_at_replicas(fam, m, tuple) / n;
}

struct InnerAverage {
  double log_value;
  double value() const { return std::exp(log_value); }
};

// <exp F(sigma | tuple)>_ summed exactly over atoms, log-sum-exp.
template <DiscreteMeasureLike M>
InnerAverage inner_exp_average(const FunctionFamily& fam, const M& m,
                               std::span<const std::uint32_t> tuple) {
  const std::size_t atoms = m.atom_count();
  std::vector<double> terms(atoms);
  for (std::size_t a = 0; a < atoms; ++a)
    terms[a] =
        std::log(m.weight(static_cast<std::uint32_t>(a))) + eval_F(fam, m, static_cast<std::uint32_t>(a), tuple);
  return InnerAverage{log_sum_exp(terms)};
}

// Partition of the atom space indexed by subsets of {1..n}: per-coordinate
// indicator sets B_l, with alpha collecting the coordinates whose set the
// atom's overlap misses.
struct PartitionSpec {
  std::vector<StepFunction> b;  // indicator of B_l, one per coordinate

  int n() const { return static_cast<int>(b.size()); }
  std::size_t set_count() const { return std::size_t{1} << b.size(); }

  void validate() const {
    if (b.empty() || b.size() > 16)
      throw std::invalid_argument("PartitionSpec: need 1..16 coordinate sets");
    for (const auto& g : b)
      if (!g.is_indicator())
        throw std::invalid_argument("PartitionSpec: B_l must be 0/1-valued");
  }
};

template <DiscreteMeasureLike M>
std::uint32_t classify_atom(const PartitionSpec& part, const M& m, std::uint32_t atom,
                            std::span<const std::uint32_t> tuple) {
  std::uint32_t alpha = 0;
  for (std::size_t l = 0; l < part.b.size(); ++l)
    if (part.b[l](m.overlap(atom, tuple[l])) == 0.0) alpha |= (1u << l);
  return alpha;
}

// W_alpha = G(B_alpha); sums to 1 over the 2^n masks.
template <DiscreteMeasureLike M>
std::vector<double> partition_weights(const PartitionSpec& part, const M& m,
                                      std::span<const std::uint32_t> tuple) {
  if (tuple.size() != part.b.size())
    throw std::invalid_argument("partition_weights: tuple length must equal partition arity");
  std::vector<double> w(part.set_count(), 0.0);
  for (std::size_t a = 0; a < m.atom_count(); ++a)
    w[classify_atom(part, m, static_cast<std::uint32_t>(a), tuple)] +=
        m.weight(static_cast<std::uint32_t>(a));
  return w;
}

// General-path map T: T(W)_alpha = <I_{B_alpha} exp F>_ / <exp F>_, computed
// with one shared log-sum-exp pass over atoms.
template <DiscreteMeasureLike M>
std::vector<double> apply_T(const PartitionSpec& part, const FunctionFamily& fam, const M& m,
                            std::span<const std::uint32_t> tuple) {
  const std::size_t atoms = m.atom_count();
  const std::size_t sets = part.set_count();
  std::vector<double> terms(atoms);
  std::vector<std::uint32_t> mask(atoms);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < atoms; ++a) {
    const auto atom = static_cast<std::uint32_t>(a);
    terms[a] = std::log(m.weight(atom)) + eval_F(fam, m, atom, tuple);
    mask[a] = classify_atom(part, m, atom, tuple);
    top = std::max(top, terms[a]);
  }
  std::vector<double> numer(sets, 0.0);
  double denom = 0.0;
  for (std::size_t a = 0; a < atoms; ++a) {
    const double e = std::exp(terms[a] - top);
    numer[mask[a]] += e;
    denom += e;
  }
  for (double& x : numer) x /= denom;
  return numer;
}

inline double t_of_alpha(std::uint32_t alpha, std::span<const double> t) {
  double s = 0.0;
  for (std::size_t l = 0; l < t.size(); ++l)
    if (alpha & (1u << l)) s += t[l];
  return s;
}

// Delta_t = sum_alpha W_alpha exp(t_alpha).
inline double delta_t(std::span<const double> w, std::span<const double> t) {
  double s = 0.0;
  for (std::uint32_t alpha = 0; alpha < w.size(); ++alpha)
    s += w[alpha] * std::exp(t_of_alpha(alpha, t));
  return s;
}

// Closed-form map for f_l = t_l I(x not in B_l): T_t(W)_alpha = W_alpha
// exp(t_alpha) / Delta_t.
inline std::vector<double> apply_T_closed(std::span<const double> w, std::span<const double> t) {
  const double d = delta_t(w, t);
  std::vector<double> out(w.size());
  for (std::uint32_t alpha = 0; alpha < w.size(); ++alpha)
    out[alpha] = w[alpha] * std::exp(t_of_alpha(alpha, t)) / d;
  return out;
}

// gamma_t = sum_l t_l mu(B_l^c).
inline double gamma_t(std::span<const double> t, const PartitionSpec& part,
                      const DiscreteLaw& mu) {
  if (t.size() != part.b.size()) throw std::invalid_argument("gamma_t: arity mismatch");
  double s = 0.0;
  for (std::size_t l = 0; l < t.size(); ++l) s += t[l] * (1.0 - mu.integrate(part.b[l]));
  return s;
}

// The family f_l = t_l I(x not in B_l) whose closed forms are T_t / Delta_t.
inline FunctionFamily family_from_partition(const PartitionSpec& part, std::span<const double> t,
                                            const DiscreteLaw& mu) {
  if (t.size() != part.b.size())
    throw std::invalid_argument("family_from_partition: arity mismatch");
  std::vector<StepFunction> fs;
  fs.reserve(t.size());
  for (std::size_t l = 0; l < t.size(); ++l)
    fs.push_back(complement_indicator(part.b[l]).scaled(t[l]));
  return FunctionFamily::with_mu(std::move(fs), mu);
}

// Grouped functions for the iterated identity: coordinates {1..n_r} split
// into groups I_p = {n_{p-1}+1, ..., n_p}. F^p uses all functions up to n_p.
struct GroupedFamily {
  std::vector<StepFunction> f;   // n_r functions, flat
  std::vector<double> mu_integral;
  std::vector<int> group_end;    // n_1 < n_2 < ... < n_r (1-based ends)

  int groups() const { return static_cast<int>(group_end.size()); }
  int n_total() const { return group_end.empty() ? 0 : group_end.back(); }
  int group_begin(int p) const { return p == 0 ? 0 : group_end[static_cast<std::size_t>(p) - 1]; }

  void validate() const {
    if (group_end.empty()) throw std::invalid_argument("GroupedFamily: no groups");
    int prev = 0;
    for (int e : group_end) {
      if (e <= prev) throw std::invalid_argument("GroupedFamily: group ends must increase");
      prev = e;
    }
    if (static_cast<int>(f.size()) != n_total() || f.size() != mu_integral.size())
      throw std::invalid_argument("GroupedFamily: function count must equal n_r");
  }

  static GroupedFamily with_mu(std::vector<StepFunction> fs, std::vector<int> ends,
                               const DiscreteLaw& mu) {
    GroupedFamily g;
    g.mu_integral.reserve(fs.size());
    for (const auto& fn : fs) g.mu_integral.push_back(mu.integrate(fn));
    g.f = std::move(fs);
    g.group_end = std::move(ends);
    g.validate();
    return g;
  }

  // The group-p family truncated at n_p, as a flat FunctionFamily.
  FunctionFamily prefix_family(int p) const {
    FunctionFamily fam;
    const auto np = static_cast<std::size_t>(group_end[static_cast<std::size_t>(p)]);
    fam.f.assign(f.begin(), f.begin() + static_cast<std::ptrdiff_t>(np));
    fam.mu_integral.assign(mu_integral.begin(), mu_integral.begin() + static_cast<std::ptrdiff_t>(np));
    return fam;
  }
};

// log Z^p = sum_{l in I_p} F_l^p(sigma^l | first n_p replicas)
//           - |I_p| log <exp F^p>_.
template <DiscreteMeasureLike M>
double log_Z_p(const GroupedFamily& grouped, const M& m, std::span<const std::uint32_t> tuple,
               int p) {
  const int np = grouped.group_end[static_cast<std::size_t>(p)];
  const FunctionFamily fam = grouped.prefix_family(p);
  const auto prefix = tuple.subspan(0, static_cast<std::size_t>(np));
  double num = 0.0;
  for (int l = grouped.group_begin(p); l < np; ++l)
    num += eval_F_l(fam, m, l, prefix[static_cast<std::size_t>(l)], prefix);
  const double group_size = static_cast<double>(np - grouped.group_begin(p));
  return num - group_size * inner_exp_average(fam, m, prefix).log_value;
}

template <DiscreteMeasureLike M>
double eval_Z_p(const GroupedFamily& grouped, const M& m, std::span<const std::uint32_t> tuple,
                int p) {
  return std::exp(log_Z_p(grouped, m, tuple, p));
}

template <DiscreteMeasureLike M>
double log_Z_product(const GroupedFamily& grouped, const M& m,
                     std::span<const std::uint32_t> tuple) {
  if (static_cast<int>(tuple.size()) != grouped.n_total())
    throw std::invalid_argument("log_Z_product: tuple length must be n_r");
  double s = 0.0;
  for (int p = 0; p < grouped.groups(); ++p) s += log_Z_p(grouped, m, tuple, p);
  return s;
}

// Bounded function of R^n expressible as a constant times a product of step
// functions of single overlap entries.
class PairProductFunction {
 public:
  struct Term {
    int i, j;  // 0-based replica indices, i < j
    StepFunction f;
  };

  PairProductFunction() = default;
  explicit PairProductFunction(double constant) : constant_(constant) {}

  static PairProductFunction one() { return PairProductFunction(1.0); }

  PairProductFunction& times(int i, int j, StepFunction f) {
    if (i == j || i < 0 || j < 0) throw std::invalid_argument("PairProductFunction: bad pair");
    if (i > j) std::swap(i, j);
    terms_.push_back(Term{i, j, std::move(f)});
    return *this;
  }

  double operator()(const OverlapMatrix& r) const {
    double v = constant_;
    for (const auto& t : terms_) {
      if (t.j >= r.n()) throw std::invalid_argument("PairProductFunction: index out of range");
      v *= t.f(r.at(t.i, t.j));
    }
    return v;
  }

  int min_index() const {
    int m = std::numeric_limits<int>::max();
    for (const auto& t : terms_) m = std::min(m, t.i);
    return m;
  }
  int max_index() const {
    int m = -1;
    for (const auto& t : terms_) m = std::max(m, t.j);
    return m;
  }
  const std::vector<Term>& terms() const { return terms_; }
  double constant() const { return constant_; }

 private:
  std::vector<Term> terms_;
  double constant_ = 1.0;
};

}  // namespace gglab
