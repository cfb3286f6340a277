#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gglab/cascade.hpp"
#include "gglab/functionals.hpp"
#include "gglab/oracle.hpp"
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

DiscreteLaw exact_one_level_mu(double zeta) {
  return DiscreteLaw{{0.0, 1.0}, {zeta, 1.0 - zeta}, {}};
}

// bitmask weights reordered to the four-set convention (A1, A2, A3, A4)
std::vector<double> four_set_to_mask(double a1, double a2, double a3, double a4) {
  return {a3, a2, a1, a4};
}

}  // namespace

TEST_CASE("eval_F sums the coordinate functions") {
  Rng rng = derive_stream(10, 0, 0);
  const CascadeMeasure g = build_cascade(one_level(32), rng);
  const Tuple t{0, 3};

  FunctionFamily zero = FunctionFamily::zero(2);
  REQUIRE(eval_F(zero, g, 5, t) == 0.0);

  // n = 1, f = t I(x = q*): at atom sigma^1 the diagonal overlap fires
  FunctionFamily fam = FunctionFamily::zero(1);
  fam.f[0] = StepFunction::indicator_geq(1.0).scaled(0.7);
  const Tuple t1{4};
  REQUIRE(eval_F(fam, g, 4, t1) == Catch::Approx(0.7));
  REQUIRE(eval_F(fam, g, 5, t1) == 0.0);
}

TEST_CASE("eval_F_l swaps one summand for its mu integral") {
  Rng rng = derive_stream(11, 0, 0);
  const CascadeMeasure g = build_cascade(one_level(32), rng);

  FunctionFamily zero = FunctionFamily::zero(2);
  const Tuple t{1, 2};
  REQUIRE(eval_F_l(zero, g, 0, 1, t) == 0.0);

  // f_1 = I(x < q*), l = 1, atom = sigma^1: the integral term is all that
  // survives, and it equals zeta for the one-level cascade.
  FunctionFamily fam =
      FunctionFamily::with_mu({StepFunction::indicator_lt(1.0)}, exact_one_level_mu(0.5));
  const Tuple t1{6};
  REQUIRE(eval_F_l(fam, g, 0, 6, t1) == Catch::Approx(0.5).epsilon(1e-12));

  // l beyond the family falls back to F
  FunctionFamily fam2 = FunctionFamily::with_mu(
      {StepFunction::indicator_geq(1.0), StepFunction::indicator_lt(1.0)},
      exact_one_level_mu(0.5));
  REQUIRE(eval_F_l(fam2, g, 2, 4, t) == eval_F(fam2, g, 4, t));
}

TEST_CASE("Fbar reduces to the two-set difference for the C-set family") {
  Rng rng = derive_stream(12, 0, 0);
  const CascadeMeasure g = build_cascade(one_level(64), rng);
  const StepFunction c_ind = StepFunction::indicator_geq(1.0);
  FunctionFamily fam =
      FunctionFamily::with_mu({c_ind, c_ind.scaled(-1.0)}, exact_one_level_mu(0.5));
  const Tuple t{3, 3};
  for (std::uint32_t atom : {0u, 3u, 7u}) {
    const double expected = c_ind(g.overlap(atom, t[0])) - c_ind(g.overlap(atom, t[1]));
    REQUIRE(eval_Fbar(fam, g, atom, t) == Catch::Approx(expected).margin(1e-12));
    // independent recomputation from F and F_l
    const double recomputed =
        eval_F(fam, g, atom, t) -
        0.5 * (eval_F_l(fam, g, 0, t[0], t) + eval_F_l(fam, g, 1, t[1], t));
    REQUIRE(eval_Fbar(fam, g, atom, t) == Catch::Approx(recomputed).margin(1e-14));
  }
}

TEST_CASE("partition weights form a probability vector with the expected support") {
  Rng rng = derive_stream(13, 0, 0);
  const CascadeMeasure g = build_cascade(one_level(64), rng);

  // trivial partition: B_1 = everything
  PartitionSpec full;
  full.b = {StepFunction::constant(1.0)};
  const Tuple t1{9};
  const auto w1 = partition_weights(full, g, t1);
  REQUIRE(w1[0] == Catch::Approx(1.0).epsilon(1e-12));
  REQUIRE(w1[1] == 0.0);

  // four-set case with both replicas on the same atom and B_l = [q*, 1]:
  // A_3 collects exactly that atom, A_1 = A_2 = 0
  PartitionSpec part;
  part.b = {StepFunction::indicator_geq(1.0), StepFunction::indicator_geq(1.0)};
  const Tuple t{5, 5};
  const auto w = partition_weights(part, g, t);
  REQUIRE(w[0] == Catch::Approx(g.weight(5)).epsilon(1e-12));  // A_3
  REQUIRE(w[1] == 0.0);                                        // A_2
  REQUIRE(w[2] == 0.0);                                        // A_1
  REQUIRE(w[3] == Catch::Approx(1.0 - g.weight(5)).epsilon(1e-12));  // A_4
  double sum = 0.0;
  for (double x : w) sum += x;
  REQUIRE(std::abs(sum - 1.0) <= 1e-12);
}

TEST_CASE("delta and gamma closed forms") {
  const std::vector<double> t{std::log(2.0), 0.0};
  const auto w = four_set_to_mask(0.1, 0.2, 0.3, 0.4);
  REQUIRE(delta_t(w, t) == Catch::Approx(1.6).epsilon(1e-12));

  const std::vector<double> t0{0.0, 0.0};
  REQUIRE(delta_t(w, t0) == Catch::Approx(1.0).epsilon(1e-12));

  const auto concentrated = four_set_to_mask(0.0, 0.0, 1.0, 0.0);
  for (double s : {-2.0, 0.0, 1.5})
    REQUIRE(delta_t(concentrated, std::vector<double>{s, -s}) == Catch::Approx(1.0).epsilon(1e-12));

  PartitionSpec part;
  part.b = {StepFunction::indicator_geq(0.4), StepFunction::indicator_geq(0.4)};
  const DiscreteLaw mu{{0.0, 0.4, 1.0}, {0.3, 0.4, 0.3}, {}};
  REQUIRE(gamma_t(t0, part, mu) == 0.0);
  // mu(B_l^c) = mu([-1, 0.4)) = 0.3
  REQUIRE(gamma_t(std::vector<double>{1.0, 2.0}, part, mu) == Catch::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("general T agrees with the closed form and satisfies the group law") {
  Rng rng = derive_stream(14, 0, 0);
  CascadeSpec spec;
  spec.zetas = {0.3, 0.7};
  spec.qs = {0.0, 0.4, 1.0};
  spec.branching = {8, 8};
  spec.leaf_budget = 64;
  const CascadeMeasure g = build_cascade(spec, rng);
  const Tuple t2 = sample_replicas(g, 2, rng);

  PartitionSpec part;
  part.b = {StepFunction::indicator_geq(0.4), StepFunction::indicator_geq(0.4)};
  const DiscreteLaw mu{{0.0, 0.4, 1.0}, {0.3, 0.4, 0.3}, {}};
  const std::vector<double> tv{0.6, -0.9};
  const FunctionFamily fam = family_from_partition(part, tv, mu);

  const auto w = partition_weights(part, g, t2);
  const auto general = apply_T(part, fam, g, t2);
  const auto closed = apply_T_closed(w, tv);
  double sum = 0.0;
  for (std::size_t a = 0; a < general.size(); ++a) {
    REQUIRE(general[a] == Catch::Approx(closed[a]).margin(1e-10));
    REQUIRE(general[a] >= 0.0);
    sum += general[a];
  }
  REQUIRE(std::abs(sum - 1.0) <= 1e-12);

  // F = 0 leaves the weights untouched
  const auto identity = apply_T(part, FunctionFamily::zero(2), g, t2);
  for (std::size_t a = 0; a < identity.size(); ++a)
    REQUIRE(identity[a] == Catch::Approx(w[a]).margin(1e-14));

  // group law and inverse on the closed path
  const std::vector<double> sv{-0.2, 0.4};
  const auto two_step = apply_T_closed(apply_T_closed(w, tv), sv);
  const std::vector<double> tplus{tv[0] + sv[0], tv[1] + sv[1]};
  const auto one_step = apply_T_closed(w, tplus);
  for (std::size_t a = 0; a < w.size(); ++a)
    REQUIRE(two_step[a] == Catch::Approx(one_step[a]).margin(1e-10));
  const std::vector<double> tneg{-tv[0], -tv[1]};
  const auto back = apply_T_closed(apply_T_closed(w, tv), tneg);
  for (std::size_t a = 0; a < w.size(); ++a)
    REQUIRE(back[a] == Catch::Approx(w[a]).margin(1e-10));

  // Delta_t(T_{-t}(W)) = Delta_{-t}(W)^{-1}
  const double lhs = delta_t(apply_T_closed(w, tneg), tv);
  const double rhs = 1.0 / delta_t(w, tneg);
  REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("grouped change of density") {
  const FiniteMeasure m({0.3, 0.3, 0.4},
                        {1.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 1.0});
  const DiscreteLaw mu = m.pair_law();
  const StepFunction f1 = StepFunction::indicator_geq(1.0).scaled(0.4);
  const StepFunction f2 = StepFunction::indicator_geq(0.5).scaled(-0.6);
  const Tuple t{0, 2};

  // all zero functions: every Z^p is 1
  {
    const GroupedFamily zg = GroupedFamily::with_mu(
        {StepFunction::zero(), StepFunction::zero()}, {1, 2}, mu);
    REQUIRE(eval_Z_p(zg, m, t, 0) == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(eval_Z_p(zg, m, t, 1) == Catch::Approx(1.0).epsilon(1e-12));
  }

  // r = 1 degenerates to the Theorem 1 density
  {
    const GroupedFamily g1 = GroupedFamily::with_mu({f1, f2}, {2}, mu);
    FunctionFamily flat = FunctionFamily::with_mu({f1, f2}, mu);
    const double num = sum_F_l_at_replicas(flat, m, t);
    const double logden = inner_exp_average(flat, m, t).log_value;
    REQUIRE(log_Z_product(g1, m, t) == Catch::Approx(num - 2.0 * logden).margin(1e-12));
  }

  // r = 2 with the second-group function zero: Z^1 matches the r = 1 value on
  // the first group, and Z^2 reduces to the extra-coordinate factor
  // exp F^2(sigma^2) / <exp F^2>_ since F^2 still carries the first-group
  // function.
  {
    const GroupedFamily g2 =
        GroupedFamily::with_mu({f1, StepFunction::zero()}, {1, 2}, mu);
    const GroupedFamily g1 = GroupedFamily::with_mu({f1}, {1}, mu);
    const Tuple first{t[0]};
    REQUIRE(log_Z_p(g2, m, t, 0) == Catch::Approx(log_Z_p(g1, m, first, 0)).margin(1e-12));
    FunctionFamily carry = FunctionFamily::with_mu({f1, StepFunction::zero()}, mu);
    const double expected =
        eval_F(carry, m, t[1], t) - inner_exp_average(carry, m, t).log_value;
    REQUIRE(log_Z_p(g2, m, t, 1) == Catch::Approx(expected).margin(1e-12));
  }

  // product form: the factored denominator equals the replica-average form
  {
    const GroupedFamily g = GroupedFamily::with_mu({f1, f2}, {1, 2}, mu);
    FunctionFamily fp1 = g.prefix_family(0);
    FunctionFamily fp2 = g.prefix_family(1);
    const double direct_den = exact_tuple_average(m, 2, [&](std::span<const std::uint32_t> rho) {
      const Tuple prefix1{t[0]};
      double e = eval_F(fp1, m, rho[0], prefix1);
      e += eval_F(fp2, m, rho[1], t);
      return std::exp(e);
    });
    const double factored = std::exp(inner_exp_average(fp1, m, Tuple{t[0]}).log_value +
                                     inner_exp_average(fp2, m, t).log_value);
    REQUIRE(direct_den == Catch::Approx(factored).epsilon(1e-10));
  }
}

TEST_CASE("pair product functions evaluate overlap products") {
  OverlapMatrix r(3);
  r.set(0, 0, 1.0);
  r.set(1, 1, 1.0);
  r.set(2, 2, 1.0);
  r.set(0, 1, 0.5);
  r.set(0, 2, 0.1);
  r.set(1, 2, 0.9);
  const PairProductFunction phi =
      PairProductFunction::one()
          .times(0, 1, StepFunction::indicator_geq(0.4))
          .times(1, 2, StepFunction::indicator_geq(0.8));
  REQUIRE(phi(r) == 1.0);
  const PairProductFunction psi =
      PairProductFunction::one().times(0, 2, StepFunction::indicator_geq(0.4));
  REQUIRE(psi(r) == 0.0);
  REQUIRE(PairProductFunction::one()(r) == 1.0);
  REQUIRE(phi.min_index() == 0);
  REQUIRE(phi.max_index() == 2);
}
