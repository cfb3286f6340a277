// Structural consequences of the identities: exact ultrametricity of
// cascades, positivity of the overlap, the positive/zero dichotomy, greedy
// constrained replica sequences, and the exchangeability / weight
// independence of the support's Gram matrix.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gglab/cascade.hpp"
#include "gglab/functionals.hpp"
#include "gglab/identity_checks.hpp"
#include "gglab/mc.hpp"
#include "gglab/report.hpp"
#include "gglab/stats.hpp"

namespace gglab {

// ---------------------------------------------------------------------------
// Ultrametricity: count triples with R12 >= q, R13 >= q, R23 < q.

struct UltraResult {
  std::uint64_t samples = 0;
  std::uint64_t violations = 0;
  IdentityReport report;
};

template <class Target>
UltraResult check_ultrametric(std::string name, const Target& target, double q,
                              const EstimatorConfig& cfg) {
  auto sampler = [&](Rng& rng, std::span<double> out) {
    decltype(auto) gv = realize(target, rng);
    const auto& g = gv;
    const Tuple t = sample_replicas(g, 3, rng);
    const double r12 = g.overlap(t[0], t[1]);
    const double r13 = g.overlap(t[0], t[2]);
    const double r23 = g.overlap(t[1], t[2]);
    out[0] = (r12 >= q && r13 >= q && r23 < q) ? 1.0 : 0.0;
  };
  const auto series = run_vector(1, sampler, cfg);
  UltraResult res;
  res.samples = cfg.n_outer;
  res.violations = static_cast<std::uint64_t>(
      std::llround(series[0].mean * static_cast<double>(cfg.n_outer)));
  res.report = finalize_report(std::move(name), series[0].mean, 0.0, series[0].se, 0.0, 0.0,
                               cfg.n_outer, cfg.seed, cfg.z_max);
  return res;
}

// Exact G^(x)3 mass of the violating triple pattern on an explicit measure.
inline double ultrametric_violation_mass(const FiniteMeasure& g, double q) {
  double mass = 0.0;
  const auto m = static_cast<std::uint32_t>(g.atom_count());
  for (std::uint32_t a = 0; a < m; ++a)
    for (std::uint32_t b = 0; b < m; ++b)
      for (std::uint32_t c = 0; c < m; ++c)
        if (g.overlap(a, b) >= q && g.overlap(a, c) >= q && g.overlap(b, c) < q)
          mass += g.weight(a) * g.weight(b) * g.weight(c);
  return mass;
}

// ---------------------------------------------------------------------------
// Positivity: mass of R_{1,2} below -eps, plus the Gram-sum witness
// sum_{l,l' <= n} R_{l,l'} >= 0 on sampled tuples.

struct PositivityResult {
  double mass_estimate = 0.0;
  double mass_se = 0.0;
  std::uint64_t negative_overlap_count = 0;
  std::uint64_t negative_gram_sum_count = 0;
  IdentityReport report;
};

template <class Target>
PositivityResult check_positivity(std::string name, const Target& target, double eps,
                                  const EstimatorConfig& cfg, int gram_tuple_size = 4) {
  if (!(eps > 0.0)) throw std::invalid_argument("check_positivity: eps must be positive");
  auto sampler = [&](Rng& rng, std::span<double> out) {
    decltype(auto) gv = realize(target, rng);
    const auto& g = gv;
    const Tuple pair = sample_replicas(g, 2, rng);
    out[0] = (g.overlap(pair[0], pair[1]) <= -eps) ? 1.0 : 0.0;
    const Tuple t = sample_replicas(g, gram_tuple_size, rng);
    double s = 0.0;
    for (std::uint32_t a : t)
      for (std::uint32_t b : t) s += g.overlap(a, b);
    out[1] = (s < -1e-9) ? 1.0 : 0.0;
  };
  const auto series = run_vector(2, sampler, cfg);
  PositivityResult res;
  res.mass_estimate = series[0].mean;
  res.mass_se = series[0].se;
  res.negative_overlap_count = static_cast<std::uint64_t>(
      std::llround(series[0].mean * static_cast<double>(cfg.n_outer)));
  res.negative_gram_sum_count = static_cast<std::uint64_t>(
      std::llround(series[1].mean * static_cast<double>(cfg.n_outer)));
  res.report = finalize_report(std::move(name), series[0].mean, 0.0, series[0].se, 0.0, 0.0,
                               cfg.n_outer, cfg.seed, cfg.z_max);
  return res;
}

// ---------------------------------------------------------------------------
// Dichotomy: the sets {Fbar > tau} and {Fbar < -tau} must be both of
// positive measure or both null, for almost every tuple. For a discrete
// measure a set is null exactly when it contains no atom of positive weight,
// so emptiness is tested atomwise; tau only absorbs roundoff in the Fbar
// values. Thresholding the mass sums instead would misfire whenever one
// branch concentrates all but a sliver of the measure, which PD weights do
// with probability ~ delta^zeta.

struct Prop2Result {
  std::uint64_t tuples = 0;
  std::uint64_t violations = 0;
  IdentityReport report;
};

inline constexpr double kFbarZeroThreshold = 1e-10;

template <DiscreteMeasureLike M>
bool prop2_violated(const FunctionFamily& fam, const M& g, std::span<const std::uint32_t> t,
                    double tau = kFbarZeroThreshold) {
  const double shift = sum_F_l_at_replicas(fam, g, t) / fam.n();
  bool has_pos = false, has_neg = false;
  for (std::uint32_t a = 0; a < g.atom_count(); ++a) {
    if (!(g.weight(a) > 0.0)) continue;
    const double fbar = eval_F(fam, g, a, t) - shift;
    if (fbar > tau) has_pos = true;
    if (fbar < -tau) has_neg = true;
    if (has_pos && has_neg) return false;
  }
  return has_pos != has_neg;
}

template <class Target>
Prop2Result check_prop2(std::string name, const Target& target, const FunctionFamily& fam,
                        const EstimatorConfig& cfg, double tau = kFbarZeroThreshold) {
  auto sampler = [&](Rng& rng, std::span<double> out) {
    decltype(auto) gv = realize(target, rng);
    const auto& g = gv;
    const Tuple t = sample_replicas(g, fam.n(), rng);
    out[0] = prop2_violated(fam, g, std::span<const std::uint32_t>(t), tau) ? 1.0 : 0.0;
  };
  const auto series = run_vector(1, sampler, cfg);
  Prop2Result res;
  res.tuples = cfg.n_outer;
  res.violations = static_cast<std::uint64_t>(
      std::llround(series[0].mean * static_cast<double>(cfg.n_outer)));
  res.report = finalize_report(std::move(name), series[0].mean, 0.0, series[0].se, 0.0, 0.0,
                               cfg.n_outer, cfg.seed, cfg.z_max);
  return res;
}

// ---------------------------------------------------------------------------
// Constrained replica sequences: greedy extension keeping all pairwise
// overlaps inside B.

struct SequenceResult {
  std::vector<int> lengths;  // one per trial
  int max_length = 0;
  IdentityReport report;
};

template <DiscreteMeasureLike M, class Rng>
int grow_constrained_sequence(const M& g, const StepFunction& b_indicator, int n_target,
                              Rng& rng) {
  const auto atoms = static_cast<std::uint32_t>(g.atom_count());
  std::vector<std::uint32_t> order(atoms);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return g.weight(a) > g.weight(b);
  });
  std::vector<std::uint32_t> members{g.sample_atom(rng)};
  while (static_cast<int>(members.size()) < n_target) {
    bool extended = false;
    for (std::uint32_t cand : order) {
      bool ok = true;
      for (std::uint32_t mem : members)
        if (b_indicator(g.overlap(cand, mem)) == 0.0) {
          ok = false;
          break;
        }
      if (ok) {
        members.push_back(cand);
        extended = true;
        break;
      }
    }
    if (!extended) break;
  }
  return static_cast<int>(members.size());
}

template <class Target>
SequenceResult find_constrained_sequence(std::string name, const Target& target,
                                         const StepFunction& b_indicator, int n_target,
                                         std::uint64_t trials, const EstimatorConfig& cfg) {
  if (!b_indicator.is_indicator())
    throw std::invalid_argument("find_constrained_sequence: B must be an indicator");
  SequenceResult res;
  res.lengths.reserve(trials);
  for (std::uint64_t i = 0; i < trials; ++i) {
    Rng rng = derive_stream(cfg.seed, cfg.stream, i);
    decltype(auto) gv = realize(target, rng);
    const auto& g = gv;
    const int len = grow_constrained_sequence(g, b_indicator, n_target, rng);
    res.lengths.push_back(len);
    res.max_length = std::max(res.max_length, len);
  }
  res.report = finalize_report(std::move(name), static_cast<double>(res.max_length),
                               static_cast<double>(n_target), 0.0, 0.0, 0.0, trials, cfg.seed,
                               cfg.z_max);
  res.report.pass = true;  // caller interprets lengths against its own bound
  return res;
}

// ---------------------------------------------------------------------------
// Exchangeability and weight independence of the top-m Gram pattern.

// One observation: the m x m prefix-depth pattern of the heaviest atoms and
// their weights.
struct ExchangeSample {
  int m = 0;
  std::vector<int> depth;  // m*m, diagonal unused
  std::vector<double> weights;

  int depth_at(int i, int j) const { return depth[static_cast<std::size_t>(i) * m + j]; }
};

// Top-m atoms of a fresh cascade, heaviest first (ties by atom index).
struct TopAtomSource {
  CascadeSpec spec;
  int m = 3;

  template <class Rng>
  std::optional<ExchangeSample> operator()(Rng& rng) const {
    const CascadeMeasure g = build_cascade(spec, rng);
    if (g.atom_count() < static_cast<std::size_t>(m)) return std::nullopt;
    const std::vector<std::uint32_t> top = top_atoms(g, m);
    ExchangeSample s;
    s.m = m;
    s.depth.assign(static_cast<std::size_t>(m) * m, 0);
    s.weights.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      s.weights[static_cast<std::size_t>(i)] = g.weight(top[static_cast<std::size_t>(i)]);
      for (int j = 0; j < m; ++j)
        if (i != j)
          s.depth[static_cast<std::size_t>(i) * m + j] = static_cast<int>(
              g.prefix_depth(top[static_cast<std::size_t>(i)], top[static_cast<std::size_t>(j)]));
    }
    return s;
  }

  static std::vector<std::uint32_t> top_atoms(const CascadeMeasure& g, int m) {
    std::vector<std::uint32_t> order(g.atom_count());
    std::iota(order.begin(), order.end(), 0u);
    std::partial_sort(order.begin(), order.begin() + m, order.end(),
                      [&](std::uint32_t a, std::uint32_t b) {
                        const double wa = g.weight(a), wb = g.weight(b);
                        if (wa != wb) return wa > wb;
                        return a < b;
                      });
    order.resize(static_cast<std::size_t>(m));
    return order;
  }
};

// Negative control for the independence test: the pattern is a deterministic
// function of the weights (heaviest atoms merged into one branch iff
// w_1 >= ratio * w_2), while staying symmetric under permutations so the
// exchangeability statistic is untouched.
struct IndependenceControlSource {
  CascadeSpec spec;
  int m = 3;
  double ratio = 1.5;

  template <class Rng>
  std::optional<ExchangeSample> operator()(Rng& rng) const {
    auto base = TopAtomSource{spec, m}(rng);
    if (!base) return std::nullopt;
    const int d = (base->weights[0] >= ratio * base->weights[1]) ? 1 : 0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (i != j) base->depth[static_cast<std::size_t>(i) * m + j] = d;
    return base;
  }
};

// Negative control for the exchangeability test: leaf weights are sorted
// into depth-first leaf order before assembly, pinning the heaviest atoms to
// the first branch and freezing an asymmetric pattern.
struct SortedAssemblyControlSource {
  CascadeSpec spec;
  int m = 3;

  template <class Rng>
  std::optional<ExchangeSample> operator()(Rng& rng) const {
    CascadeMeasure g = build_cascade(spec, rng);
    if (g.atom_count() < static_cast<std::size_t>(m)) return std::nullopt;
    std::vector<double> sorted(g.atom_count());
    for (std::uint32_t a = 0; a < g.atom_count(); ++a) sorted[a] = g.weight(a);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    ExchangeSample s;
    s.m = m;
    s.depth.assign(static_cast<std::size_t>(m) * m, 0);
    s.weights.assign(sorted.begin(), sorted.begin() + m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (i != j)
          s.depth[static_cast<std::size_t>(i) * m + j] = static_cast<int>(
              g.prefix_depth(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)));
    return s;
  }
};

struct ExchangeResult {
  std::uint64_t n_used = 0;
  std::uint64_t skipped = 0;
  double chi2 = 0.0;
  double chi2_df = 0.0;
  double chi2_p = 1.0;
  double perm_stat = 0.0;
  double perm_p = 1.0;
  IdentityReport chi2_report;
  IdentityReport perm_report;
};

namespace detail {

inline std::vector<std::vector<int>> fixed_permutations(int m, std::size_t cap = 24) {
  std::vector<int> p(static_cast<std::size_t>(m));
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> perms;
  do {
    perms.push_back(p);
  } while (perms.size() < cap && std::next_permutation(p.begin(), p.end()));
  return perms;
}

inline std::vector<int> pattern_under(const ExchangeSample& s, std::span<const int> perm) {
  std::vector<int> key;
  key.reserve(static_cast<std::size_t>(s.m) * (s.m - 1) / 2);
  for (int i = 0; i < s.m; ++i)
    for (int j = i + 1; j < s.m; ++j)
      key.push_back(s.depth_at(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]));
  return key;
}

}  // namespace detail

// Exchangeability: chi-square homogeneity of the pattern law across a fixed
// set of permutations (samples split round-robin so groups are independent).
// Independence: permutation test of association between the weight vector
// and the identity-order pattern (1000 label shuffles).
template <class Source>
ExchangeResult check_exchangeability(std::string name, Source&& source, int m,
                                     std::uint64_t n_samples, const EstimatorConfig& cfg,
                                     double alpha = 0.01, std::uint32_t resamples = 1000) {
  if (m < 2) throw std::invalid_argument("check_exchangeability: m must be >= 2");
  const auto perms = detail::fixed_permutations(m);
  const auto n_groups = perms.size();

  std::vector<std::vector<int>> group_keys(n_groups ? n_groups : 1);
  std::set<std::vector<int>> key_set;
  std::vector<std::vector<int>> id_patterns;
  std::vector<std::vector<double>> weight_rows;
  std::vector<std::vector<int>> perm_patterns;  // pattern per used sample, grouped
  std::vector<std::size_t> group_of;
  ExchangeResult res;

  for (std::uint64_t i = 0; i < n_samples; ++i) {
    Rng rng = derive_stream(cfg.seed, cfg.stream, i);
    const auto s = source(rng);
    if (!s) {
      ++res.skipped;
      continue;
    }
    const std::size_t g = static_cast<std::size_t>(res.n_used % n_groups);
    perm_patterns.push_back(detail::pattern_under(*s, perms[g]));
    group_of.push_back(g);
    key_set.insert(perm_patterns.back());
    id_patterns.push_back(detail::pattern_under(*s, perms[0]));
    weight_rows.push_back(s->weights);
    ++res.n_used;
  }
  if (res.n_used < 2 * n_groups)
    throw std::invalid_argument("check_exchangeability: too few usable samples");

  // --- chi-square homogeneity across permutation groups
  std::map<std::vector<int>, std::size_t> cat;
  for (const auto& k : key_set) cat.emplace(k, cat.size());
  const std::size_t n_cats = cat.size();
  std::vector<std::vector<double>> counts(n_groups, std::vector<double>(n_cats, 0.0));
  for (std::size_t i = 0; i < perm_patterns.size(); ++i)
    counts[group_of[i]][cat[perm_patterns[i]]] += 1.0;

  // merge sparse categories so expected counts stay reasonable
  std::vector<double> pooled(n_cats, 0.0);
  for (const auto& row : counts)
    for (std::size_t c = 0; c < n_cats; ++c) pooled[c] += row[c];
  std::vector<std::size_t> keep;
  std::vector<double> rare_by_group(n_groups, 0.0);
  double rare_total = 0.0;
  for (std::size_t c = 0; c < n_cats; ++c) {
    if (pooled[c] >= 5.0 * static_cast<double>(n_groups)) {
      keep.push_back(c);
    } else {
      for (std::size_t g = 0; g < n_groups; ++g) rare_by_group[g] += counts[g][c];
      rare_total += pooled[c];
    }
  }
  std::vector<std::vector<double>> table(n_groups);
  for (std::size_t g = 0; g < n_groups; ++g) {
    for (std::size_t c : keep) table[g].push_back(counts[g][c]);
    if (rare_total > 0.0) table[g].push_back(rare_by_group[g]);
  }
  const std::size_t cols = table[0].size();
  if (cols >= 2) {
    std::vector<double> colsum(cols, 0.0), rowsum(n_groups, 0.0);
    double total = 0.0;
    for (std::size_t g = 0; g < n_groups; ++g)
      for (std::size_t c = 0; c < cols; ++c) {
        colsum[c] += table[g][c];
        rowsum[g] += table[g][c];
        total += table[g][c];
      }
    double stat = 0.0;
    for (std::size_t g = 0; g < n_groups; ++g)
      for (std::size_t c = 0; c < cols; ++c) {
        const double expected = rowsum[g] * colsum[c] / total;
        if (expected > 0.0) stat += sq(table[g][c] - expected) / expected;
      }
    res.chi2 = stat;
    res.chi2_df = static_cast<double>((cols - 1) * (n_groups - 1));
    res.chi2_p = chi_square_tail(stat, res.chi2_df);
  } else {
    res.chi2 = 0.0;
    res.chi2_df = 0.0;
    res.chi2_p = 1.0;  // a single symmetric category varies under no permutation
  }

  // --- independence permutation test
  std::map<std::vector<int>, std::size_t> id_cat;
  for (const auto& k : id_patterns) id_cat.emplace(k, id_cat.size());
  std::vector<std::size_t> labels(id_patterns.size());
  for (std::size_t i = 0; i < id_patterns.size(); ++i) labels[i] = id_cat[id_patterns[i]];

  const std::size_t dim = static_cast<std::size_t>(m);
  auto anova_stat = [&](std::span<const std::size_t> lab) {
    std::vector<double> grand(dim, 0.0);
    std::vector<std::vector<double>> mean(id_cat.size(), std::vector<double>(dim, 0.0));
    std::vector<double> count(id_cat.size(), 0.0);
    for (std::size_t i = 0; i < weight_rows.size(); ++i) {
      count[lab[i]] += 1.0;
      for (std::size_t k = 0; k < dim; ++k) {
        mean[lab[i]][k] += weight_rows[i][k];
        grand[k] += weight_rows[i][k];
      }
    }
    for (double& gk : grand) gk /= static_cast<double>(weight_rows.size());
    double stat = 0.0;
    for (std::size_t c = 0; c < id_cat.size(); ++c) {
      if (count[c] == 0.0) continue;
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) d2 += sq(mean[c][k] / count[c] - grand[k]);
      stat += count[c] * d2;
    }
    return stat;
  };

  res.perm_stat = anova_stat(labels);
  std::uint64_t at_least = 0;
  Rng rng = derive_stream(cfg.seed, kStreamResample, 0);
  std::vector<std::size_t> shuffled = labels;
  for (std::uint32_t b = 0; b < resamples; ++b) {
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
    if (anova_stat(shuffled) >= res.perm_stat) ++at_least;
  }
  res.perm_p = static_cast<double>(1 + at_least) / static_cast<double>(1 + resamples);

  res.chi2_report = finalize_report(name + ".exchangeable", res.chi2_p, alpha, 0.0, 0.0, 0.0,
                                    res.n_used, cfg.seed, cfg.z_max);
  res.chi2_report.z = 0.0;
  res.chi2_report.pass = res.chi2_p > alpha;
  res.perm_report = finalize_report(name + ".independent", res.perm_p, alpha, 0.0, 0.0, 0.0,
                                    res.n_used, cfg.seed, cfg.z_max);
  res.perm_report.z = 0.0;
  res.perm_report.pass = res.perm_p > alpha;
  return res;
}

}  // namespace gglab
