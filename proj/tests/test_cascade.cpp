#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "gglab/cascade.hpp"
#include "gglab/rng.hpp"

using namespace gglab;

namespace {

CascadeSpec one_level(std::size_t k, double zeta = 0.5) {
  CascadeSpec s;
  s.zetas = {zeta};
  s.qs = {0.0, 1.0};
  s.branching = {k};
  s.leaf_budget = k;
  return s;
}

CascadeSpec two_level(std::size_t k1, std::size_t k2) {
  CascadeSpec s;
  s.zetas = {0.3, 0.7};
  s.qs = {0.0, 0.4, 1.0};
  s.branching = {k1, k2};
  s.leaf_budget = 4096;
  return s;
}

}  // namespace

TEST_CASE("spec validation rejects malformed cascades") {
  CascadeSpec s = two_level(4, 4);
  s.zetas = {0.7, 0.3};
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
  s = two_level(4, 4);
  s.qs = {0.0, 0.4};
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
  s = two_level(4, 4);
  s.qs = {0.4, 0.4, 1.0};
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
  s = two_level(4, 4);
  s.branching = {4, 1};
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
  s = two_level(128, 64);
  s.leaf_budget = 4096;
  REQUIRE_THROWS_AS(s.validate(), std::length_error);
}

TEST_CASE("gram entries follow common prefix depth") {
  Rng rng = derive_stream(3, 0, 0);
  const CascadeMeasure g = build_cascade(two_level(4, 4), rng);
  REQUIRE(g.atom_count() == 16);
  // same leaf
  REQUIRE(g.overlap(5, 5) == 1.0);
  // same level-1 branch, different leaves
  REQUIRE(g.overlap(0, 1) == 0.4);
  REQUIRE(g.prefix_depth(0, 1) == 1);
  // different branches
  REQUIRE(g.overlap(0, 5) == 0.0);
  REQUIRE(g.prefix_depth(3, 4) == 0);
  const auto path = g.leaf_path(7);
  REQUIRE(path.size() == 2);
  REQUIRE(path[0] == 1);
  REQUIRE(path[1] == 3);

  const Tuple t{2, 2, 2};
  const OverlapMatrix r = gram_of(g, t);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) REQUIRE(r.at(i, j) == 1.0);
}

TEST_CASE("leaf weights are positive and sum to one") {
  Rng rng = derive_stream(4, 0, 0);
  const CascadeMeasure g = build_cascade(two_level(8, 8), rng);
  double sum = 0.0;
  for (std::uint32_t a = 0; a < g.atom_count(); ++a) {
    REQUIRE(g.weight(a) > 0.0);
    sum += g.weight(a);
  }
  REQUIRE(std::abs(sum - 1.0) <= 1e-12);
}

TEST_CASE("one-level cascade reproduces the PD second moment") {
  double mean = 0.0;
  const int reps = 2000;
  for (int i = 0; i < reps; ++i) {
    Rng rng = derive_stream(500, 0, static_cast<std::uint64_t>(i));
    const CascadeMeasure g = build_cascade(one_level(256), rng);
    double m2 = 0.0;
    for (std::uint32_t a = 0; a < g.atom_count(); ++a) m2 += sq(g.weight(a));
    mean += m2;
  }
  mean /= reps;
  REQUIRE(std::abs(mean - 0.5) < 0.02);
}

TEST_CASE("replica sampling matches leaf weights") {
  // single-atom measure: every replica is that atom
  const FiniteMeasure point({1.0}, {1.0});
  Rng rng = derive_stream(6, 0, 0);
  const Tuple t = sample_replicas(point, 5, rng);
  for (auto idx : t) REQUIRE(idx == 0);

  // binomial check on the top leaves of a fixed cascade
  Rng rng2 = derive_stream(7, 0, 0);
  const CascadeMeasure g = build_cascade(one_level(64), rng2);
  const int draws = 100000;
  std::map<std::uint32_t, int> freq;
  for (int i = 0; i < draws; ++i) ++freq[g.sample_atom(rng2)];
  for (std::uint32_t a = 0; a < 10; ++a) {
    const double p = g.weight(a);
    const double se = std::sqrt(p * (1.0 - p) / draws);
    REQUIRE(std::abs(freq[a] / static_cast<double>(draws) - p) <= 4.0 * se + 1e-12);
  }
}

TEST_CASE("pair of replicas lands on the same leaf with probability E sum v^2") {
  int same = 0;
  const int reps = 10000;
  for (int i = 0; i < reps; ++i) {
    Rng rng = derive_stream(900, 0, static_cast<std::uint64_t>(i));
    const CascadeMeasure g = build_cascade(one_level(256), rng);
    const Tuple t = sample_replicas(g, 2, rng);
    if (t[0] == t[1]) ++same;
  }
  const double p = same / static_cast<double>(reps);
  REQUIRE(std::abs(p - 0.5) < 3.0 * std::sqrt(0.25 / reps) + 0.01);
}

TEST_CASE("overlap law masses are a probability vector and match the exact pair law") {
  const CascadeSpec spec = two_level(16, 16);
  Rng rng = derive_stream(41, 0, 0);
  const DiscreteLaw mc = overlap_law(spec, 16000, rng);
  double total = 0.0;
  for (double m : mc.masses) {
    REQUIRE(m >= 0.0);
    total += m;
  }
  REQUIRE(total == Catch::Approx(1.0).margin(1e-12));

  Rng rng2 = derive_stream(42, 0, 0);
  const DiscreteLaw rb = overlap_law_exact_pairs(spec, 4000, rng2);
  REQUIRE(rb.points == spec.qs);
  for (std::size_t p = 0; p < mc.masses.size(); ++p) {
    const double se = std::sqrt(sq(mc.ses[p]) + sq(rb.ses[p]));
    REQUIRE(std::abs(mc.masses[p] - rb.masses[p]) <= 4.0 * se + 1e-9);
  }
}

TEST_CASE("one-level overlap law approaches (zeta, 1 - zeta)") {
  CascadeSpec spec = one_level(1024, 0.3);
  Rng rng = derive_stream(43, 0, 0);
  const DiscreteLaw law = overlap_law_exact_pairs(spec, 2000, rng);
  REQUIRE(std::abs(law.masses[0] - 0.3) < 0.02);
  REQUIRE(std::abs(law.masses[1] - 0.7) < 0.02);
}

TEST_CASE("per-realization pair law sums subtree masses") {
  Rng rng = derive_stream(44, 0, 0);
  const CascadeMeasure g = build_cascade(two_level(4, 4), rng);
  const DiscreteLaw law = g.pair_law();
  double same_leaf = 0.0;
  for (std::uint32_t a = 0; a < g.atom_count(); ++a) same_leaf += sq(g.weight(a));
  REQUIRE(law.masses[2] == Catch::Approx(same_leaf).epsilon(1e-12));
  double brute_q1 = 0.0;
  for (std::uint32_t a = 0; a < g.atom_count(); ++a)
    for (std::uint32_t b = 0; b < g.atom_count(); ++b)
      if (g.prefix_depth(a, b) == 1) brute_q1 += g.weight(a) * g.weight(b);
  REQUIRE(law.masses[1] == Catch::Approx(brute_q1).epsilon(1e-10));
}
