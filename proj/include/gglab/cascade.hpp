// Finite-depth Ruelle probability cascades.
//
// Atoms are the leaves of an r-level tree with branching K_p at level p.
// Every internal node at level p-1 carries an independent PD(zeta_p) weight
// vector over its K_p children; a leaf's weight is the product of the
// weights along its path, renormalized over all leaves. Atoms are identified
// by tree paths only, so the overlap of two leaves is q at their common
// prefix depth and the diagonal is q_r. The construction consumes its random
// stream level by level, left to right.
#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "gglab/measure.hpp"
#include "gglab/pd.hpp"

namespace gglab {

struct CascadeSpec {
  std::vector<double> zetas;            // zeta_1 < ... < zeta_r, each in (0, 1)
  std::vector<double> qs;               // 0 <= q_0 < q_1 < ... < q_r <= 1
  std::vector<std::size_t> branching;   // K_p children per node at level p
  std::size_t leaf_budget = 4096;

  std::size_t depth() const { return zetas.size(); }

  std::size_t leaf_count() const {
    std::size_t n = 1;
    for (std::size_t k : branching) n *= k;
    return n;
  }

  void validate() const {
    const std::size_t r = zetas.size();
    if (r == 0) throw std::invalid_argument("CascadeSpec: depth must be >= 1");
    if (qs.size() != r + 1) throw std::invalid_argument("CascadeSpec: need r + 1 overlap levels");
    if (branching.size() != r)
      throw std::invalid_argument("CascadeSpec: need one branching factor per level");
    for (std::size_t p = 0; p < r; ++p) {
      if (!(zetas[p] > 0.0) || !(zetas[p] < 1.0))
        throw std::invalid_argument("CascadeSpec: zetas must lie in (0, 1)");
      if (p > 0 && !(zetas[p - 1] < zetas[p]))
        throw std::invalid_argument("CascadeSpec: zetas must be strictly increasing");
      if (branching[p] < 2) throw std::invalid_argument("CascadeSpec: branching must be >= 2");
    }
    if (!(qs.front() >= 0.0) || !(qs.back() <= 1.0))
      throw std::invalid_argument("CascadeSpec: overlaps must lie in [0, 1]");
    for (std::size_t p = 0; p + 1 < qs.size(); ++p)
      if (!(qs[p] < qs[p + 1]))
        throw std::invalid_argument("CascadeSpec: overlaps must be strictly increasing");
    std::size_t leaves = 1;
    for (std::size_t k : branching) {
      if (leaves > leaf_budget / k) {
        leaves = leaf_budget + 1;
        break;
      }
      leaves *= k;
    }
    if (leaves > leaf_budget) throw std::length_error("CascadeSpec: leaf budget exceeded");
  }
};

class CascadeMeasure {
 public:
  CascadeMeasure(CascadeSpec spec, std::vector<double> leaf_weights)
      : spec_(std::move(spec)), w_(std::move(leaf_weights)) {
    const std::size_t r = spec_.depth();
    strides_.resize(r);
    std::size_t s = w_.size();
    for (std::size_t p = 0; p < r; ++p) {
      s /= spec_.branching[p];
      strides_[p] = s;  // leaves per node at level p + 1
    }
    double sum = std::accumulate(w_.begin(), w_.end(), 0.0);
    for (double& w : w_) w /= sum;
    cum_.resize(w_.size());
    double c = 0.0;
    for (std::size_t i = 0; i < w_.size(); ++i) {
      c += w_[i];
      cum_[i] = c;
    }
    cum_.back() = 1.0;
  }

  const CascadeSpec& spec() const { return spec_; }
  std::size_t atom_count() const { return w_.size(); }
  double weight(std::uint32_t i) const { return w_[i]; }

  // Number of leading tree levels shared by leaves i and j, in [0, r].
  std::size_t prefix_depth(std::uint32_t i, std::uint32_t j) const {
    if (i == j) return spec_.depth();
    std::size_t d = 0;
    while (d < strides_.size() && i / strides_[d] == j / strides_[d]) ++d;
    return d;
  }

  double overlap(std::uint32_t i, std::uint32_t j) const {
    return spec_.qs[prefix_depth(i, j)];
  }

  // Tree coordinates of a leaf, one child index per level.
  std::vector<std::uint32_t> leaf_path(std::uint32_t i) const {
    std::vector<std::uint32_t> path(spec_.depth());
    std::size_t rest = i;
    for (std::size_t p = 0; p < path.size(); ++p) {
      path[p] = static_cast<std::uint32_t>(rest / strides_[p]);
      rest %= strides_[p];
    }
    return path;
  }

  template <class Rng>
  std::uint32_t sample_atom(Rng& rng) const {
    return sample_from_cumulative<Rng>(cum_, rng);
  }

  // Exact law of overlap(a, b) for a, b drawn independently from this
  // realization: P(prefix depth >= p) is the sum over level-p nodes of the
  // squared subtree mass.
  DiscreteLaw pair_law() const {
    const std::size_t r = spec_.depth();
    std::vector<double> depth_ge(r + 2, 0.0);
    depth_ge[0] = 1.0;
    for (std::size_t p = 1; p <= r; ++p) {
      const std::size_t stride = strides_[p - 1];
      const std::size_t nodes = w_.size() / stride;
      double s = 0.0;
      for (std::size_t node = 0; node < nodes; ++node) {
        double mass = 0.0;
        for (std::size_t i = node * stride; i < (node + 1) * stride; ++i) mass += w_[i];
        s += mass * mass;
      }
      depth_ge[p] = s;
    }
    depth_ge[r + 1] = 0.0;
    DiscreteLaw law;
    law.points = spec_.qs;
    law.masses.resize(r + 1);
    for (std::size_t p = 0; p <= r; ++p) law.masses[p] = depth_ge[p] - depth_ge[p + 1];
    return law;
  }

 private:
  CascadeSpec spec_;
  std::vector<double> w_;
  std::vector<std::size_t> strides_;
  std::vector<double> cum_;
};

// Leaf weight = product of the raw Poisson points along the path, normalized
// once over all leaves. Normalizing per node instead would change the law:
// the overlap masses would come out as products of the (1 - zeta_p) instead
// of the increments zeta_{p+1} - zeta_p, and the Gram pattern of the top
// atoms would not decouple from the weights.
template <class Rng>
CascadeMeasure build_cascade(const CascadeSpec& spec, Rng& rng) {
  spec.validate();
  std::vector<double> log_mass{0.0};  // log node products at the current level
  for (std::size_t p = 0; p < spec.depth(); ++p) {
    const std::size_t k = spec.branching[p];
    std::vector<double> next(log_mass.size() * k);
    for (std::size_t node = 0; node < log_mass.size(); ++node) {
      const std::vector<double> log_u =
          sample_pd_log_points(ZetaParam(spec.zetas[p]), k, rng);
      for (std::size_t c = 0; c < k; ++c) next[node * k + c] = log_mass[node] + log_u[c];
    }
    log_mass.swap(next);
  }
  const double lse = log_sum_exp(log_mass);
  std::vector<double> mass(log_mass.size());
  for (std::size_t i = 0; i < mass.size(); ++i) mass[i] = std::exp(log_mass[i] - lse);
  return CascadeMeasure(spec, std::move(mass));
}

template <DiscreteMeasureLike M, class Rng>
Tuple sample_replicas(const M& measure, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_replicas: n must be >= 1");
  Tuple t(static_cast<std::size_t>(n));
  for (auto& idx : t) idx = measure.sample_atom(rng);
  return t;
}

// Monte Carlo estimate of mu, the law of R_{1,2} under E G^(x)2: a fresh
// cascade and one replica pair per outer sample.
template <class Rng>
DiscreteLaw overlap_law(const CascadeSpec& spec, std::uint64_t n_samples, Rng& rng,
                        std::uint32_t n_batches = 32) {
  if (n_samples < 1000) throw std::invalid_argument("overlap_law: need n_samples >= 1000");
  const std::size_t levels = spec.depth() + 1;
  const std::uint64_t per = n_samples / n_batches;
  std::vector<std::vector<double>> batch(n_batches, std::vector<double>(levels, 0.0));
  for (std::uint32_t b = 0; b < n_batches; ++b) {
    for (std::uint64_t i = 0; i < per; ++i) {
      const CascadeMeasure g = build_cascade(spec, rng);
      const std::uint32_t a1 = g.sample_atom(rng);
      const std::uint32_t a2 = g.sample_atom(rng);
      batch[b][g.prefix_depth(a1, a2)] += 1.0;
    }
    for (double& x : batch[b]) x /= static_cast<double>(per);
  }
  DiscreteLaw law;
  law.points = spec.qs;
  law.masses.assign(levels, 0.0);
  law.ses.assign(levels, 0.0);
  for (std::size_t p = 0; p < levels; ++p) {
    double mean = 0.0;
    for (std::uint32_t b = 0; b < n_batches; ++b) mean += batch[b][p];
    mean /= n_batches;
    double var = 0.0;
    for (std::uint32_t b = 0; b < n_batches; ++b) var += sq(batch[b][p] - mean);
    var /= (n_batches - 1);
    law.masses[p] = mean;
    law.ses[p] = std::sqrt(var / n_batches);
  }
  return law;
}

// Rao-Blackwellized variant: averages the exact per-realization pair law
// instead of drawing a single pair, cutting the variance of the mass
// estimates. Used to cache mu for identity checks.
template <class Rng>
DiscreteLaw overlap_law_exact_pairs(const CascadeSpec& spec, std::uint64_t n_samples, Rng& rng,
                                    std::uint32_t n_batches = 32) {
  const std::size_t levels = spec.depth() + 1;
  const std::uint64_t per = n_samples / n_batches;
  if (per == 0) throw std::invalid_argument("overlap_law_exact_pairs: too few samples");
  std::vector<std::vector<double>> batch(n_batches, std::vector<double>(levels, 0.0));
  for (std::uint32_t b = 0; b < n_batches; ++b) {
    for (std::uint64_t i = 0; i < per; ++i) {
      const CascadeMeasure g = build_cascade(spec, rng);
      const DiscreteLaw one = g.pair_law();
      for (std::size_t p = 0; p < levels; ++p) batch[b][p] += one.masses[p];
    }
    for (double& x : batch[b]) x /= static_cast<double>(per);
  }
  DiscreteLaw law;
  law.points = spec.qs;
  law.masses.assign(levels, 0.0);
  law.ses.assign(levels, 0.0);
  for (std::size_t p = 0; p < levels; ++p) {
    double mean = 0.0;
    for (std::uint32_t b = 0; b < n_batches; ++b) mean += batch[b][p];
    mean /= n_batches;
    double var = 0.0;
    for (std::uint32_t b = 0; b < n_batches; ++b) var += sq(batch[b][p] - mean);
    var /= (n_batches - 1);
    law.masses[p] = mean;
    law.ses[p] = std::sqrt(var / n_batches);
  }
  return law;
}

}  // namespace gglab
