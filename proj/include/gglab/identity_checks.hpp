// Monte Carlo verification of the invariance identities.
//
// Every check pairs both sides of an identity through common random numbers:
// one outer sample draws a fresh measure realization and one replica tuple,
// evaluates both sides on it (inner averages are exact sums over atoms), and
// the paired batch-means engine turns the stream of (lhs, rhs) values into a
// z-score verdict. Extra replicas a side needs are drawn from the same
// stream, lhs first, so both sides consume identical randomness prefixes.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gglab/cascade.hpp"
#include "gglab/functionals.hpp"
#include "gglab/mc.hpp"
#include "gglab/measure.hpp"
#include "gglab/oracle.hpp"
#include "gglab/pd.hpp"
#include "gglab/report.hpp"

namespace gglab {

// ---------------------------------------------------------------------------
// Targets: where the outer expectation E comes from.

// Fresh Ruelle cascade per outer sample.
struct CascadeTarget {
  CascadeSpec spec;
};

// A fixed explicit measure; the outer expectation degenerates.
struct FiniteTarget {
  FiniteMeasure measure;
};

// I.i.d. uniform weights on orthonormal atoms, redrawn per sample. Does NOT
// satisfy the identities; used as a negative control.
struct UniformRandomTarget {
  std::size_t atoms = 8;
};

template <class Rng>
CascadeMeasure realize(const CascadeTarget& t, Rng& rng) {
  return build_cascade(t.spec, rng);
}

template <class Rng>
const FiniteMeasure& realize(const FiniteTarget& t, Rng&) {
  return t.measure;
}

template <class Rng>
FiniteMeasure realize(const UniformRandomTarget& t, Rng& rng) {
  std::vector<double> w(t.atoms);
  for (double& x : w) {
    do {
      x = rng.u01();
    } while (x == 0.0);
  }
  std::vector<double> gram(t.atoms * t.atoms, 0.0);
  for (std::size_t i = 0; i < t.atoms; ++i) gram[i * t.atoms + i] = 1.0;
  return FiniteMeasure(std::move(w), std::move(gram));
}

// mu = law of R_{1,2} under E G^(x)2 for the target, cached per experiment.
// Cascades use the Rao-Blackwellized estimator on the dedicated mu stream;
// fixed finite measures have an exact pair law.
inline DiscreteLaw estimate_mu(const CascadeTarget& target, const EstimatorConfig& cfg,
                               std::uint64_t n_mu) {
  EstimatorConfig mcfg = cfg;
  mcfg.stream = kStreamMu;
  mcfg.n_outer = std::max<std::uint64_t>(mcfg.n_batches, n_mu - n_mu % mcfg.n_batches);
  const std::size_t levels = target.spec.depth() + 1;
  auto sampler = [&target](Rng& rng, std::span<double> out) {
    const CascadeMeasure g = build_cascade(target.spec, rng);
    const DiscreteLaw law = g.pair_law();
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = law.masses[p];
  };
  const auto series = run_vector(levels, sampler, mcfg);
  DiscreteLaw law;
  law.points = target.spec.qs;
  law.masses.resize(levels);
  law.ses.resize(levels);
  for (std::size_t p = 0; p < levels; ++p) {
    law.masses[p] = series[p].mean;
    law.ses[p] = series[p].se;
  }
  return law;
}

inline DiscreteLaw exact_mu(const FiniteTarget& target) { return target.measure.pair_law(); }

// Monte Carlo mu for targets without an exact pair law (random weights).
inline DiscreteLaw estimate_mu(const UniformRandomTarget& target, const EstimatorConfig& cfg,
                               std::uint64_t n_mu) {
  EstimatorConfig mcfg = cfg;
  mcfg.stream = kStreamMu;
  mcfg.n_outer = std::max<std::uint64_t>(mcfg.n_batches, n_mu - n_mu % mcfg.n_batches);
  // support {0, 1}: off-diagonal pairs overlap 0, the diagonal 1
  auto sampler = [&target](Rng& rng, std::span<double> out) {
    const FiniteMeasure g = realize(target, rng);
    double same = 0.0;
    for (std::uint32_t a = 0; a < g.atom_count(); ++a) same += sq(g.weight(a));
    out[0] = 1.0 - same;
    out[1] = same;
  };
  const auto series = run_vector(2, sampler, mcfg);
  DiscreteLaw law;
  law.points = {0.0, 1.0};
  law.masses = {series[0].mean, series[1].mean};
  law.ses = {series[0].se, series[1].se};
  return law;
}

// ---------------------------------------------------------------------------
// Per-sample evaluators. Each one turns (measure, tuple) into the pair of
// identity sides; the Monte Carlo path and the exact enumeration oracle share
// these, so oracle-equivalence is structural.

// Eq. (GG): lhs = f psi(R_{1,n+1});
// rhs = (1/n)[ f * integral(psi d mu) + sum_{l=2..n} f psi(R_{1,l}) ].
struct GgEvaluator {
  int n;
  const PairProductFunction* f;
  const StepFunction* psi;
  double psi_mu;  // integral of psi against the cached mu

  int replicas() const { return n + 1; }

  template <DiscreteMeasureLike M>
  std::pair<double, double> eval(const M& g, std::span<const std::uint32_t> t) const {
    const double fv = (*f)(gram_of(g, t.subspan(0, static_cast<std::size_t>(n))));
    const double lhs = fv * (*psi)(g.overlap(t[0], t[static_cast<std::size_t>(n)]));
    double rhs = fv * psi_mu;
    for (int l = 1; l < n; ++l) rhs += fv * (*psi)(g.overlap(t[0], t[static_cast<std::size_t>(l)]));
    return {lhs, rhs / n};
  }
};

// Theorem 1 main identity: lhs = Phi(R^n);
// rhs = Phi(R^n) exp(sum_l F_l(sigma^l)) / <exp F>_^n.
struct MainEvaluator {
  const FunctionFamily* fam;
  const PairProductFunction* phi;

  int replicas() const { return fam->n(); }

  template <DiscreteMeasureLike M>
  std::pair<double, double> eval(const M& g, std::span<const std::uint32_t> t) const {
    const double phiv = (*phi)(gram_of(g, t));
    const double num = sum_F_l_at_replicas(*fam, g, t);
    const double logden = inner_exp_average(*fam, g, t).log_value;
    return {phiv, phiv * std::exp(num - fam->n() * logden)};
  }
};

// Iterated identity: lhs = Phi(R^{I_r}); rhs = Z^1...Z^r Phi.
struct IteratedEvaluator {
  const GroupedFamily* grouped;
  const PairProductFunction* phi;  // must touch only the last group

  int replicas() const { return grouped->n_total(); }

  void validate() const {
    grouped->validate();
    const int first = grouped->group_begin(grouped->groups() - 1);
    if (!phi->terms().empty() && phi->min_index() < first)
      throw std::invalid_argument("check_iterated: Phi must depend only on the last group");
  }

  template <DiscreteMeasureLike M>
  std::pair<double, double> eval(const M& g, std::span<const std::uint32_t> t) const {
    const double phiv = (*phi)(gram_of(g, t));
    return {phiv, phiv * std::exp(log_Z_product(*grouped, g, t))};
  }
};

// Theorem 7 weight invariance, general path:
// lhs = phi(R^n, W); rhs = phi(R^n, T(W)) exp(sum F_l) / <exp F>_^n.
template <class PhiRW>
struct WeightInvarianceEvaluator {
  const FunctionFamily* fam;
  const PartitionSpec* part;
  PhiRW phi;  // (OverlapMatrix, span<const double> W) -> double

  int replicas() const { return fam->n(); }

  template <DiscreteMeasureLike M>
  std::pair<double, double> eval(const M& g, std::span<const std::uint32_t> t) const {
    const OverlapMatrix r = gram_of(g, t);
    const std::vector<double> w = partition_weights(*part, g, t);
    const std::vector<double> tw = apply_T(*part, *fam, g, t);
    const double num = sum_F_l_at_replicas(*fam, g, t);
    const double logden = inner_exp_average(*fam, g, t).log_value;
    const double lhs = phi(r, std::span<const double>(w));
    const double rhs =
        phi(r, std::span<const double>(tw)) * std::exp(num - fam->n() * logden);
    return {lhs, rhs};
  }
};

// Theorem 8 closed-form path:
// lhs = I(R^n in B) phi(W); rhs = I(R^n in B) phi(T_t(W)) e^{gamma_t} / Delta_t^n.
template <class PhiW>
struct Th2aEvaluator {
  const PartitionSpec* part;
  std::vector<double> t;
  const PairProductFunction* event;  // indicator of B, a product over all pairs
  PhiW phi;                          // (span<const double> W) -> double
  double gamma = 0.0;

  int replicas() const { return part->n(); }

  void validate() const {
    part->validate();
    const int n = part->n();
    if (static_cast<int>(t.size()) != n) throw std::invalid_argument("check_th2a: t arity mismatch");
    if (event->constant() != 1.0)
      throw std::invalid_argument("check_th2a: event must be a plain indicator product");
    std::vector<std::vector<bool>> seen(static_cast<std::size_t>(n),
                                        std::vector<bool>(static_cast<std::size_t>(n), false));
    for (const auto& term : event->terms()) {
      if (term.j >= n) throw std::invalid_argument("check_th2a: event pair out of range");
      if (seen[term.i][term.j])
        throw std::invalid_argument("check_th2a: duplicate event pair");
      seen[term.i][term.j] = true;
      if (!term.f.is_indicator())
        throw std::invalid_argument("check_th2a: event terms must be indicators");
      if (!indicator_subset_of(term.f, part->b[static_cast<std::size_t>(term.i)]) ||
          !indicator_subset_of(term.f, part->b[static_cast<std::size_t>(term.j)]))
        throw std::invalid_argument(
            "check_th2a: event must be contained in B_l and B_l' for each pair");
    }
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (!seen[i][j])
          throw std::invalid_argument("check_th2a: event must constrain every pair");
  }

  template <DiscreteMeasureLike M>
  std::pair<double, double> eval(const M& g, std::span<const std::uint32_t> tup) const {
    const OverlapMatrix r = gram_of(g, tup);
    const double ind = (*event)(r);
    if (ind == 0.0) return {0.0, 0.0};
    const std::vector<double> w = partition_weights(*part, g, tup);
    const std::vector<double> tw = apply_T_closed(w, t);
    const double lhs = ind * phi(std::span<const double>(w));
    const double rhs = ind * phi(std::span<const double>(tw)) * std::exp(gamma) /
                       std::pow(delta_t(w, t), part->n());
    return {lhs, rhs};
  }
};

// ---------------------------------------------------------------------------
// Check drivers.

template <class Target, class Evaluator>
PairedStats run_check(const Target& target, const Evaluator& ev, const EstimatorConfig& cfg) {
  auto sampler = [&](Rng& rng) {
    decltype(auto) gv = realize(target, rng);
    const auto& g = gv;
    const Tuple t = sample_replicas(g, ev.replicas(), rng);
    return ev.eval(g, std::span<const std::uint32_t>(t));
  };
  return run_paired(sampler, cfg);
}

template <class Target>
IdentityReport check_gg(std::string name, const Target& target, int n,
                        const PairProductFunction& f, const StepFunction& psi,
                        const DiscreteLaw& mu, const EstimatorConfig& cfg) {
  if (n < 2) throw std::invalid_argument("check_gg: n must be >= 2");
  const GgEvaluator ev{n, &f, &psi, mu.integrate(psi)};
  return report_from_paired(std::move(name), run_check(target, ev, cfg), cfg);
}

template <class Target>
IdentityReport check_main(std::string name, const Target& target, const FunctionFamily& fam,
                          const PairProductFunction& phi, const EstimatorConfig& cfg) {
  if (fam.n() < 1) throw std::invalid_argument("check_main: need n >= 1");
  const MainEvaluator ev{&fam, &phi};
  return report_from_paired(std::move(name), run_check(target, ev, cfg), cfg);
}

template <class Target>
IdentityReport check_iterated(std::string name, const Target& target,
                              const GroupedFamily& grouped, const PairProductFunction& phi,
                              const EstimatorConfig& cfg) {
  const IteratedEvaluator ev{&grouped, &phi};
  ev.validate();
  return report_from_paired(std::move(name), run_check(target, ev, cfg), cfg);
}

template <class Target, class PhiRW>
IdentityReport check_weight_invariance(std::string name, const Target& target,
                                       const FunctionFamily& fam, const PartitionSpec& part,
                                       PhiRW phi, const EstimatorConfig& cfg) {
  part.validate();
  if (part.n() != fam.n())
    throw std::invalid_argument("check_weight_invariance: partition arity must match family");
  const WeightInvarianceEvaluator<PhiRW> ev{&fam, &part, std::move(phi)};
  return report_from_paired(std::move(name), run_check(target, ev, cfg), cfg);
}

template <class Target, class PhiW>
IdentityReport check_th2a(std::string name, const Target& target, const PartitionSpec& part,
                          std::vector<double> t, const PairProductFunction& event, PhiW phi,
                          const DiscreteLaw& mu, const EstimatorConfig& cfg) {
  Th2aEvaluator<PhiW> ev{&part, std::move(t), &event, std::move(phi)};
  ev.validate();
  ev.gamma = gamma_t(ev.t, part, mu);
  return report_from_paired(std::move(name), run_check(target, ev, cfg), cfg);
}

// ---------------------------------------------------------------------------
// Poisson-Dirichlet identities, Eq. (PDex): distinct-index sums over the
// truncated weight sequence with a weight-product cutoff.

struct PdIdentitySpec {
  ZetaParam zeta;
  std::vector<int> group_sizes;  // n_p, r = size <= 3
  std::vector<double> t;         // per coordinate, grouped contiguously; s_p = sum over I_p
  double prune_threshold = 1e-12;

  int r() const { return static_cast<int>(group_sizes.size()); }
  int n() const {
    int s = 0;
    for (int k : group_sizes) s += k;
    return s;
  }

  std::vector<double> s_values() const {
    std::vector<double> s(group_sizes.size(), 0.0);
    std::size_t j = 0;
    for (std::size_t p = 0; p < group_sizes.size(); ++p)
      for (int k = 0; k < group_sizes[p]; ++k) s[p] += t[j++];
    return s;
  }

  void validate() const {
    if (group_sizes.empty() || group_sizes.size() > 3)
      throw std::invalid_argument("check_pd_identity: r must be 1..3 (larger r unsupported)");
    for (int k : group_sizes)
      if (k < 1) throw std::invalid_argument("check_pd_identity: group sizes must be >= 1");
    if (static_cast<int>(t.size()) != n())
      throw std::invalid_argument("check_pd_identity: t must have one entry per coordinate");
  }
};

// Both sides of (PDex) on one sampled weight vector. The same tuple set
// (pruned by weight product) feeds both sums.
inline std::pair<double, double> pd_identity_terms(const PdIdentitySpec& spec,
                                                   std::span<const double> v) {
  const auto s = spec.s_values();
  const int r = spec.r();
  const int n = spec.n();
  const double zeta = spec.zeta.zeta;
  double c = 0.0;
  for (int p = 0; p < r; ++p) c += (spec.group_sizes[static_cast<std::size_t>(p)] - zeta) * s[static_cast<std::size_t>(p)];
  const double rhs_scale = std::exp(c);
  std::vector<double> es(s.size());
  for (std::size_t p = 0; p < s.size(); ++p) es[p] = std::exp(s[p]);

  const std::size_t K = v.size();
  double lhs = 0.0, rhs = 0.0;
  auto powi = [](double x, int k) {
    double y = 1.0;
    for (int i = 0; i < k; ++i) y *= x;
    return y;
  };
  const double theta = spec.prune_threshold;

  std::vector<std::size_t> idx(static_cast<std::size_t>(r), 0);
  std::vector<double> prefix(static_cast<std::size_t>(r) + 1, 1.0);
  // remaining_max[p] bounds the contribution of coordinates p..r-1 by v_1^{...}
  std::vector<double> remaining_max(static_cast<std::size_t>(r) + 1, 1.0);
  for (int p = r - 1; p >= 0; --p)
    remaining_max[static_cast<std::size_t>(p)] =
        remaining_max[static_cast<std::size_t>(p) + 1] *
        powi(v[0], spec.group_sizes[static_cast<std::size_t>(p)]);

  // depth-first over distinct (l_1, ..., l_r) with early break on sorted v
  int depth = 0;
  idx[0] = 0;
  while (depth >= 0) {
    auto& l = idx[static_cast<std::size_t>(depth)];
    bool descend = false;
    for (; l < K; ++l) {
      bool dup = false;
      for (int p = 0; p < depth; ++p)
        if (idx[static_cast<std::size_t>(p)] == l) {
          dup = true;
          break;
        }
      if (dup) continue;
      const double contrib =
          prefix[static_cast<std::size_t>(depth)] * powi(v[l], spec.group_sizes[static_cast<std::size_t>(depth)]);
      if (contrib * remaining_max[static_cast<std::size_t>(depth) + 1] < theta) {
        l = K;  // sorted: everything below is smaller
        break;
      }
      if (depth + 1 < r) {
        prefix[static_cast<std::size_t>(depth) + 1] = contrib;
        descend = true;
        break;
      }
      // full tuple
      double vw = 0.0, ve = 0.0;
      for (int p = 0; p < r; ++p) {
        const double vv = v[idx[static_cast<std::size_t>(p)]];
        vw += vv;
        ve += vv * es[static_cast<std::size_t>(p)];
      }
      const double denom = ve + 1.0 - vw;
      lhs += contrib;
      rhs += contrib * rhs_scale / powi(denom, n);
    }
    if (descend) {
      ++depth;
      idx[static_cast<std::size_t>(depth)] = 0;
    } else {
      --depth;
      if (depth >= 0) ++idx[static_cast<std::size_t>(depth)];
    }
  }
  return {lhs, rhs};
}

inline IdentityReport check_pd_identity(std::string name, const PdIdentitySpec& spec,
                                        const EstimatorConfig& cfg) {
  spec.validate();
  auto sampler = [&](Rng& rng) {
    const WeightVector w = sample_pd(spec.zeta, cfg.truncation, rng);
    return pd_identity_terms(spec, w.weights);
  };
  return report_from_paired(std::move(name), run_paired(sampler, cfg), cfg);
}

// ---------------------------------------------------------------------------
// The integral identity behind the ultrametricity reduction:
// E < I(R_{1,2} >= q) / (W_3 + W_4)^2 > should equal mu([q, 1]) on
// ultrametric targets, and the pre-limit sweep over s is monotone there.

struct Prop1Result {
  IdentityReport report;
  std::vector<double> s_values;
  std::vector<double> estimates;
  std::vector<double> ses;
};

template <class Target>
Prop1Result check_prop1_integral(std::string name, const Target& target, double q,
                                 std::vector<double> s_values, const DiscreteLaw& mu,
                                 const EstimatorConfig& cfg) {
  PartitionSpec part;
  part.b = {StepFunction::indicator_geq(q), StepFunction::indicator_geq(q)};
  // bitmask layout: A_3 = mask 0 (in both), A_2 = mask 1, A_1 = mask 2, A_4 = mask 3
  const std::size_t width = 1 + s_values.size();
  auto sampler = [&](Rng& rng, std::span<double> out) {
    decltype(auto) gv = realize(target, rng);
    const auto& g = gv;
    const Tuple t = sample_replicas(g, 2, rng);
    const double r12 = g.overlap(t[0], t[1]);
    if (r12 < q) {
      for (double& x : out) x = 0.0;
      return;
    }
    const std::vector<double> w = partition_weights(part, g, t);
    out[0] = 1.0 / sq(w[0] + w[3]);
    for (std::size_t k = 0; k < s_values.size(); ++k) {
      const double e = std::exp(-s_values[k]);
      out[k + 1] = 1.0 / sq(e * (w[1] + w[2]) + w[0] + w[3]);
    }
  };
  const auto series = run_vector(width, sampler, cfg);

  const double mu_tail = mu.integrate(StepFunction::indicator_geq(q));
  double se_mu = 0.0;
  if (!mu.ses.empty()) {
    for (std::size_t p = 0; p < mu.points.size(); ++p)
      if (mu.points[p] >= q) se_mu += sq(mu.ses[p]);
    se_mu = std::sqrt(se_mu);
  }
  Prop1Result res;
  res.report = finalize_report(std::move(name), series[0].mean, mu_tail, series[0].se, se_mu,
                               std::sqrt(sq(series[0].se) + sq(se_mu)), cfg.n_outer, cfg.seed,
                               cfg.z_max);
  res.s_values = std::move(s_values);
  for (std::size_t k = 1; k < width; ++k) {
    res.estimates.push_back(series[k].mean);
    res.ses.push_back(series[k].se);
  }
  return res;
}

}  // namespace gglab
