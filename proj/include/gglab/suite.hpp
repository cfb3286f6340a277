// The full verification battery: every acceptance criterion as code, shared
// by the CLI `suite` subcommand and the standalone acceptance runner.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "gglab/cascade.hpp"
#include "gglab/config.hpp"
#include "gglab/identity_checks.hpp"
#include "gglab/oracle.hpp"
#include "gglab/pd.hpp"
#include "gglab/report.hpp"
#include "gglab/structural_checks.hpp"

namespace gglab {

struct SuiteOptions {
  std::uint64_t seed = 7001;
  std::uint32_t workers = 1;
  bool quick = false;   // reduced sizes for smoke runs and CI plumbing tests
  bool timing = false;  // embed wall times in reports (breaks byte reproducibility)
};

struct CriterionOutcome {
  int id = 0;
  std::string description;
  bool pass = false;
  std::vector<IdentityReport> reports;
  std::vector<std::string> notes;
};

struct SuiteResult {
  std::vector<CriterionOutcome> criteria;

  bool all_pass() const {
    for (const auto& c : criteria)
      if (!c.pass) return false;
    return true;
  }

  std::vector<IdentityReport> reports() const {
    std::vector<IdentityReport> out;
    for (const auto& c : criteria) out.insert(out.end(), c.reports.begin(), c.reports.end());
    return out;
  }
};

inline std::string reports_to_json_array(const std::vector<IdentityReport>& reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return arr.dump(2);
}

namespace detail {

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

class SuiteRunner {
 public:
  explicit SuiteRunner(const SuiteOptions& opts) : opts_(opts) {
    e1_.zetas = {0.5};
    e1_.qs = {0.0, 1.0};
    e1_.branching = {opts.quick ? std::size_t{512} : std::size_t{4096}};
    e1_.leaf_budget = e1_.branching[0];

    // The branching split follows the per-level truncation needs: PD tails
    // decay like K^(-(1-zeta)/zeta), so the high-zeta level gets the atoms.
    e2_.zetas = {0.3, 0.7};
    e2_.qs = {0.0, 0.4, 1.0};
    e2_.branching = opts.quick ? std::vector<std::size_t>{16, 64}
                               : std::vector<std::size_t>{16, 256};
    e2_.leaf_budget = 4096;

    e2_narrow_ = e2_;
    e2_narrow_.branching = opts.quick ? std::vector<std::size_t>{16, 2}
                                      : std::vector<std::size_t>{64, 2};

    n_outer_ = opts.quick ? 4000 : 100000;
    n_mu_ = opts.quick ? 20000 : 200000;
  }

  // Per-check seed: stable under reordering and subset runs.
  EstimatorConfig cfg_for(const std::string& name, std::uint64_t n_outer) const {
    EstimatorConfig cfg;
    cfg.seed = mix64(opts_.seed ^ fnv1a64(name));
    cfg.workers = opts_.workers;
    cfg.n_batches = 32;
    cfg.n_outer = n_outer - n_outer % cfg.n_batches;
    return cfg;
  }

  const DiscreteLaw& mu1() {
    if (mu1_.points.empty())
      mu1_ = estimate_mu(CascadeTarget{e1_}, cfg_for("mu.e1", n_mu_), n_mu_);
    return mu1_;
  }
  const DiscreteLaw& mu2() {
    if (mu2_.points.empty())
      mu2_ = estimate_mu(CascadeTarget{e2_}, cfg_for("mu.e2", n_mu_), n_mu_);
    return mu2_;
  }

  SuiteResult run() {
    SuiteResult out;
    out.criteria.push_back(timed(1, [this] { return criterion1(); }));
    out.criteria.push_back(timed(2, [this] { return criterion2(); }));
    out.criteria.push_back(timed(3, [this] { return criterion3(); }));
    out.criteria.push_back(timed(4, [this] { return criterion4(); }));
    out.criteria.push_back(timed(5, [this] { return criterion5(); }));
    out.criteria.push_back(timed(6, [this] { return criterion6(); }));
    out.criteria.push_back(timed(7, [this] { return criterion7(); }));
    out.criteria.push_back(timed(8, [this] { return criterion8(); }));
    out.criteria.push_back(timed(9, [this] { return criterion9(); }));
    out.criteria.push_back(timed(10, [this] { return criterion10(); }));
    out.criteria.push_back(timed(11, [this] { return criterion11(); }));
    out.criteria.push_back(timed(12, [this] { return criterion12(); }));
    out.criteria.push_back(timed(13, [this] { return criterion13(); }));
    return out;
  }

 private:
  template <class F>
  CriterionOutcome timed(int id, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    CriterionOutcome c = f();
    c.id = id;
    if (opts_.timing) {
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      for (auto& r : c.reports)
        if (r.wall_time_s == 0.0) r.wall_time_s = secs / static_cast<double>(c.reports.size());
    }
    return c;
  }

  // -- criterion 1: E sum v_l^2 = 1 - zeta ---------------------------------
  CriterionOutcome criterion1() {
    CriterionOutcome c;
    c.description = "PD second-moment law E sum v^2 = 1 - zeta";
    c.pass = true;
    const std::size_t k = opts_.quick ? 512 : 4096;
    for (double z : {0.2, 0.5, 0.8}) {
      const std::string name = "zeta.second_moment." + fmt(z);
      EstimatorConfig cfg = cfg_for(name, n_outer_);
      auto sampler = [&](Rng& rng, std::span<double> out) {
        const WeightVector w = sample_pd(ZetaParam(z), k, rng);
        double m2 = 0.0;
        for (double v : w.weights) m2 += v * v;
        out[0] = m2 / sq(1.0 + w.tail_mass_estimate);
      };
      const auto series = run_vector(1, sampler, cfg);
      IdentityReport r = finalize_report(name, series[0].mean, 1.0 - z, series[0].se, 0.0,
                                         series[0].se, cfg.n_outer, cfg.seed, cfg.z_max);
      r.pass = std::abs(r.lhs - r.rhs) <= std::max(3.0 * series[0].se, 0.01);
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }
    return c;
  }

  // -- criterion 2: Ghirlanda-Guerra identity ------------------------------
  CriterionOutcome criterion2() {
    CriterionOutcome c;
    c.description = "GG identity on one- and two-level cascades (6 combinations)";
    c.pass = true;
    const StepFunction top1 = StepFunction::indicator_geq(1.0);
    const StepFunction mid = StepFunction::indicator_geq(0.4);
    const StepFunction mixed_psi({0.4, 1.0}, {0.7, 0.0, -0.3});

    struct Case {
      std::string name;
      bool two_level;
      int n;
      PairProductFunction f;
      StepFunction psi;
    };
    std::vector<Case> cases;
    cases.push_back({"gg.e1.n2.f1", false, 2, PairProductFunction::one(), top1});
    cases.push_back(
        {"gg.e1.n2.fpair", false, 2, PairProductFunction::one().times(0, 1, top1), top1});
    cases.push_back({"gg.e1.n3.fmix", false, 3,
                     PairProductFunction::one().times(0, 1, top1).times(0, 2, StepFunction::indicator_lt(1.0)),
                     StepFunction::indicator_lt(1.0)});
    cases.push_back({"gg.e2.n2.fq1", true, 2, PairProductFunction::one().times(0, 1, mid), mid});
    cases.push_back({"gg.e2.n3.fq1q2", true, 3,
                     PairProductFunction::one().times(0, 1, mid).times(1, 2, top1), mid});
    cases.push_back({"gg.e2.n2.mixedpsi", true, 2, PairProductFunction::one(), mixed_psi});

    for (const auto& cs : cases) {
      const auto& target_spec = cs.two_level ? e2_ : e1_;
      const auto& mu = cs.two_level ? mu2() : mu1();
      const EstimatorConfig cfg = cfg_for(cs.name, n_outer_);
      const IdentityReport r =
          check_gg(cs.name, CascadeTarget{target_spec}, cs.n, cs.f, cs.psi, mu, cfg);
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }
    return c;
  }

  // -- criterion 3: Theorem 1 main identity --------------------------------
  CriterionOutcome criterion3() {
    CriterionOutcome c;
    c.description = "main invariance identity (6 families, n in {1,2,3}) plus f=0 exactness";
    c.pass = true;
    const StepFunction top1 = StepFunction::indicator_geq(1.0);
    const StepFunction below1 = StepFunction::indicator_lt(1.0);
    const StepFunction mid = StepFunction::indicator_geq(0.4);

    struct Case {
      std::string name;
      bool two_level;
      std::vector<StepFunction> f;
      PairProductFunction phi;
    };
    std::vector<Case> cases;
    cases.push_back({"main.e1.n1", false, {top1.scaled(0.8)}, PairProductFunction::one()});
    cases.push_back({"main.e1.n2.ind", false, {top1, top1},
                     PairProductFunction::one().times(0, 1, top1)});
    cases.push_back({"main.e1.n2.mixed", false, {top1.scaled(0.8), below1.scaled(-0.5)},
                     PairProductFunction::one().times(0, 1, below1)});
    cases.push_back({"main.e1.n3", false,
                     {top1.scaled(0.5), top1.scaled(0.5), top1.scaled(0.5)},
                     PairProductFunction::one().times(0, 1, top1).times(0, 2, top1)});
    cases.push_back({"main.e2.n2.q1", true, {mid.scaled(0.75), mid.scaled(0.75)},
                     PairProductFunction::one().times(0, 1, mid)});
    cases.push_back({"main.e2.n2.mixed", true, {StepFunction::indicator_geq(1.0), mid.scaled(-1.0)},
                     PairProductFunction::one().times(0, 1, mid)});

    for (const auto& cs : cases) {
      const auto& spec = cs.two_level ? e2_ : e1_;
      const auto& mu = cs.two_level ? mu2() : mu1();
      const EstimatorConfig cfg = cfg_for(cs.name, n_outer_);
      const FunctionFamily fam = FunctionFamily::with_mu(cs.f, mu);
      const IdentityReport r = check_main(cs.name, CascadeTarget{spec}, fam, cs.phi, cfg);
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }

    // f = 0: both sides must agree sample-by-sample to 1e-12.
    const EstimatorConfig cfg = cfg_for("main.f0.exact", opts_.quick ? 2000 : 10000);
    const FunctionFamily zerofam = FunctionFamily::zero(2);
    const PairProductFunction phi = PairProductFunction::one().times(0, 1, top1);
    const MainEvaluator ev{&zerofam, &phi};
    double worst = 0.0;
    for (std::uint64_t i = 0; i < cfg.n_outer; ++i) {
      Rng rng = derive_stream(cfg.seed, kStreamMain, i);
      const CascadeMeasure g = build_cascade(e1_, rng);
      const Tuple t = sample_replicas(g, 2, rng);
      const auto [l, r] = ev.eval(g, std::span<const std::uint32_t>(t));
      worst = std::max(worst, std::abs(l - r));
    }
    IdentityReport r0 = finalize_report("main.f0.exact", worst, 0.0, 0.0, 0.0, 0.0, cfg.n_outer,
                                        cfg.seed, cfg.z_max);
    r0.pass = worst <= 1e-12;
    c.pass = c.pass && r0.pass;
    c.reports.push_back(r0);
    return c;
  }

  // -- criterion 4: iterated identity --------------------------------------
  CriterionOutcome criterion4() {
    CriterionOutcome c;
    c.description = "iterated identity with r = 2 groups, incl. the two-term PD example";
    c.pass = true;
    const StepFunction below1 = StepFunction::indicator_lt(1.0);
    const StepFunction top1 = StepFunction::indicator_geq(1.0);
    const StepFunction mid = StepFunction::indicator_geq(0.4);

    {
      const std::string name = "iterated.e1.pd_two_term";
      const GroupedFamily g = GroupedFamily::with_mu({below1.scaled(0.3), below1.scaled(0.3)},
                                                     {1, 2}, mu1());
      const IdentityReport r = check_iterated(name, CascadeTarget{e1_}, g,
                                              PairProductFunction::one(), cfg_for(name, n_outer_));
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }
    {
      const std::string name = "iterated.e1.groups12";
      const GroupedFamily g = GroupedFamily::with_mu(
          {top1.scaled(0.5), top1.scaled(0.4), below1.scaled(-0.4)}, {1, 3}, mu1());
      const IdentityReport r =
          check_iterated(name, CascadeTarget{e1_}, g,
                         PairProductFunction::one().times(1, 2, top1), cfg_for(name, n_outer_));
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }
    {
      const std::string name = "iterated.e2.groups11";
      const GroupedFamily g =
          GroupedFamily::with_mu({mid.scaled(0.5), mid.scaled(0.5)}, {1, 2}, mu2());
      const IdentityReport r = check_iterated(name, CascadeTarget{e2_}, g,
                                              PairProductFunction::one(), cfg_for(name, n_outer_));
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }
    return c;
  }

  // -- criterion 5: weight invariance, general vs closed form --------------
  CriterionOutcome criterion5() {
    CriterionOutcome c;
    c.description = "T_t closed form agrees with the general path; n = 2 specialization";
    c.pass = true;

    PartitionSpec part;
    part.b = {StepFunction::indicator_geq(0.4), StepFunction::indicator_geq(0.4)};
    const PairProductFunction event =
        PairProductFunction::one().times(0, 1, StepFunction::indicator_geq(0.4));

    // Per-sample agreement of the two code paths.
    {
      const std::string name = "th2a.path_agreement";
      const EstimatorConfig cfg = cfg_for(name, opts_.quick ? 500 : 2000);
      const std::vector<double> t{0.5, -0.5};
      const FunctionFamily fam = family_from_partition(part, t, mu2());
      auto phi_w = [](std::span<const double> w) {
        const double e = std::exp(-0.5);
        return 1.0 / sq(e * (w[1] + w[2]) + w[0] + w[3]);
      };
      Th2aEvaluator<decltype(phi_w)> closed{&part, t, &event, phi_w};
      closed.validate();
      closed.gamma = gamma_t(t, part, mu2());
      auto phi_rw = [&](const OverlapMatrix& r, std::span<const double> w) {
        return event(r) * phi_w(w);
      };
      const WeightInvarianceEvaluator<decltype(phi_rw)> general{&fam, &part, phi_rw};
      double worst = 0.0;
      for (std::uint64_t i = 0; i < cfg.n_outer; ++i) {
        Rng rng = derive_stream(cfg.seed, kStreamMain, i);
        const CascadeMeasure g = build_cascade(e2_, rng);
        const Tuple t2 = sample_replicas(g, 2, rng);
        const auto a = closed.eval(g, std::span<const std::uint32_t>(t2));
        const auto b = general.eval(g, std::span<const std::uint32_t>(t2));
        worst = std::max(worst, std::abs(a.second - b.second) / std::max(1.0, std::abs(a.second)));
        worst = std::max(worst, std::abs(a.first - b.first) / std::max(1.0, std::abs(a.first)));
      }
      IdentityReport r = finalize_report(name, worst, 0.0, 0.0, 0.0, 0.0, cfg.n_outer, cfg.seed,
                                         cfg.z_max);
      r.pass = worst <= 1e-10;
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }

    for (double s : {0.5, 1.0}) {
      const std::string name = "th2a.n2.s" + fmt(s);
      const EstimatorConfig cfg = cfg_for(name, n_outer_);
      auto phi_w = [s](std::span<const double> w) {
        const double e = std::exp(-s);
        return 1.0 / sq(e * (w[1] + w[2]) + w[0] + w[3]);
      };
      const IdentityReport r = check_th2a(name, CascadeTarget{e2_}, part, {s, -s}, event, phi_w,
                                          mu2(), cfg);
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }

    // q_2 < q_1 keeps the map genuinely non-trivial on ultrametric targets
    // (with q_1 = q_2 the exact zero of W_1, W_2 makes both sides coincide).
    {
      const std::string name = "th2a.n2.nested";
      PartitionSpec nested;
      nested.b = {StepFunction::indicator_geq(1.0), StepFunction::indicator_geq(0.4)};
      const PairProductFunction nested_event =
          PairProductFunction::one().times(0, 1, StepFunction::indicator_geq(1.0));
      auto phi_w = [](std::span<const double> w) {
        const double e = std::exp(-0.5);
        return 1.0 / sq(e * (w[1] + w[2]) + w[0] + w[3]);
      };
      const IdentityReport r = check_th2a(name, CascadeTarget{e2_}, nested, {0.5, -0.5},
                                          nested_event, phi_w, mu2(), cfg_for(name, n_outer_));
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }
    return c;
  }

  // -- criterion 6: the ultrametricity integral ----------------------------
  CriterionOutcome criterion6() {
    CriterionOutcome c;
    c.description = "E<I(R >= q1)/(W3+W4)^2> equals mu([q1, 1]) on a two-level cascade";
    const std::string name = "prop1.e2.q1";
    EstimatorConfig cfg = cfg_for(name, n_outer_);
    cfg.z_max = 3.0;
    const Prop1Result res = check_prop1_integral(name, CascadeTarget{e2_}, 0.4,
                                                 {0.0, 0.5, 1.0, 2.0}, mu2(), cfg);
    c.pass = res.report.pass;
    c.reports.push_back(res.report);
    for (std::size_t k = 0; k + 1 < res.estimates.size(); ++k) {
      const double slack = 3.0 * (res.ses[k] + res.ses[k + 1]);
      if (res.estimates[k + 1] > res.estimates[k] + slack) c.pass = false;
    }
    c.notes.push_back("s-sweep estimates: " + join(res.estimates));
    return c;
  }

  // -- criterion 7: Poisson-Dirichlet identities ---------------------------
  CriterionOutcome criterion7() {
    CriterionOutcome c;
    c.description = "PD identities: r=1 n=2 case and the n=2, r=2 display";
    c.pass = true;
    {
      const std::string name = "pd.r1.n2";
      EstimatorConfig cfg = cfg_for(name, n_outer_);
      cfg.truncation = opts_.quick ? 512 : 4096;
      PdIdentitySpec spec{ZetaParam(0.5), {2}, {0.4, 0.4}};
      const IdentityReport r = check_pd_identity(name, spec, cfg);
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }
    {
      const std::string name = "pd.r2.n2";
      EstimatorConfig cfg = cfg_for(name, opts_.quick ? 4000 : 40000);
      cfg.truncation = opts_.quick ? 256 : 512;
      PdIdentitySpec spec{ZetaParam(0.5), {1, 1}, {0.7, -0.7}};
      IdentityReport r = check_pd_identity(name, spec, cfg);
      const bool lhs_matches_zeta = std::abs(r.lhs - 0.5) <= 3.0 * r.se_lhs;
      r.pass = r.pass && lhs_matches_zeta;
      if (!lhs_matches_zeta) c.notes.push_back("pd.r2.n2 lhs deviates from zeta beyond 3 SE");
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }
    return c;
  }

  // -- criterion 8: exact ultrametricity -----------------------------------
  CriterionOutcome criterion8() {
    CriterionOutcome c;
    c.description = "zero ultrametricity violations over sampled triples";
    c.pass = true;
    for (const bool two_level : {false, true}) {
      const std::string name = two_level ? "ultra.e2" : "ultra.e1";
      const auto& spec = two_level ? e2_ : e1_;
      const double q = two_level ? 0.4 : 0.5;
      const UltraResult res =
          check_ultrametric(name, CascadeTarget{spec}, q, cfg_for(name, n_outer_));
      const bool ok = res.violations == 0;
      c.pass = c.pass && ok;
      c.reports.push_back(res.report);
    }
    return c;
  }

  // -- criterion 9: positivity and the packing bound -----------------------
  CriterionOutcome criterion9() {
    CriterionOutcome c;
    c.description = "positivity of the overlap; packing bound on the fuzz corpus";
    c.pass = true;
    for (const bool two_level : {false, true}) {
      const std::string name = two_level ? "positivity.e2" : "positivity.e1";
      const auto& spec = two_level ? e2_ : e1_;
      const PositivityResult res =
          check_positivity(name, CascadeTarget{spec}, 0.1, cfg_for(name, n_outer_));
      const bool ok = res.negative_overlap_count == 0 && res.negative_gram_sum_count == 0 &&
                      res.mass_estimate == 0.0;
      c.pass = c.pass && ok;
      c.reports.push_back(res.report);
    }

    // Detection: a measure with genuinely negative overlap mass is flagged.
    {
      const FiniteMeasure neg({1.0, 1.0, 1.0},
                              {1.0, -0.5, 0.0, -0.5, 1.0, 0.2, 0.0, 0.2, 1.0});
      EstimatorConfig cfg = cfg_for("positivity.negative_control", opts_.quick ? 2000 : 20000);
      const PositivityResult res =
          check_positivity("positivity.negative_control", FiniteTarget{neg}, 0.4, cfg);
      IdentityReport r = res.report;
      r.pass = res.mass_estimate > 0.0;  // detection succeeds
      r.z = 0.0;                         // detection verdict, not a z-test
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }

    // Packing bound: greedy sequences with all overlaps <= -eps never exceed
    // 1 + 1/eps on random PSD measures.
    {
      const std::string name = "positivity.packing_fuzz";
      const EstimatorConfig cfg = cfg_for(name, 2000);
      const std::uint64_t n_measures = opts_.quick ? 40 : 200;
      double worst_ratio = 0.0;  // achieved length over the 1 + 1/eps bound
      for (std::uint64_t i = 0; i < n_measures; ++i) {
        Rng rng = derive_stream(cfg.seed, kStreamMain, i);
        const FiniteMeasure g = random_psd_measure(rng);
        for (double eps : {0.1, 0.2, 0.4}) {
          const int len = grow_constrained_sequence(
              g, StepFunction::indicator_closed(-1.0, -eps), 40, rng);
          worst_ratio = std::max(worst_ratio, static_cast<double>(len) / (1.0 + 1.0 / eps));
        }
      }
      IdentityReport r = finalize_report(name, worst_ratio, 1.0, 0.0, 0.0, 0.0, n_measures,
                                         cfg.seed, cfg.z_max);
      r.pass = worst_ratio <= 1.0;
      r.z = 0.0;  // bound check, not a z-test
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }
    return c;
  }

  // -- criterion 10: the positive/zero dichotomy ---------------------------
  CriterionOutcome criterion10() {
    CriterionOutcome c;
    c.description = "Fbar dichotomy: zero violations on cascades, violation detected on control";
    c.pass = true;
    const StepFunction top1 = StepFunction::indicator_geq(1.0);
    const StepFunction below1 = StepFunction::indicator_lt(1.0);
    const StepFunction cset = StepFunction::indicator_geq(0.4);
    const std::uint64_t tuples = opts_.quick ? 1000 : 10000;

    struct Case {
      std::string name;
      bool two_level;
      std::vector<StepFunction> f;
    };
    std::vector<Case> cases;
    cases.push_back({"prop2.e1.ind", false, {top1, top1}});
    cases.push_back({"prop2.e1.mixed", false, {top1.scaled(0.8), below1.scaled(-0.5)}});
    cases.push_back({"prop2.e2.q1", true, {cset.scaled(0.75), cset.scaled(0.75)}});
    cases.push_back({"prop2.e2.cset", true, {cset, cset.scaled(-1.0)}});
    for (const auto& cs : cases) {
      const auto& spec = cs.two_level ? e2_ : e1_;
      const auto& mu = cs.two_level ? mu2() : mu1();
      const FunctionFamily fam = FunctionFamily::with_mu(cs.f, mu);
      const Prop2Result res =
          check_prop2(cs.name, CascadeTarget{spec}, fam, cfg_for(cs.name, tuples));
      const bool ok = res.violations == 0;
      c.pass = c.pass && ok;
      c.reports.push_back(res.report);
    }

    // Constructed non-GG measure where one set is empty and the other not.
    {
      const FiniteMeasure bad({1.0, 1.0, 1.0},
                              {1.0, 0.9, 0.9, 0.9, 1.0, 0.2, 0.9, 0.2, 1.0});
      const FunctionFamily fam =
          FunctionFamily::with_mu({StepFunction::indicator_geq(0.5)}, bad.pair_law());
      const Prop2Result res = check_prop2("prop2.negative_control", FiniteTarget{bad}, fam,
                                          cfg_for("prop2.negative_control", 2000));
      IdentityReport r = res.report;
      r.pass = res.violations > 0;  // detection succeeds
      r.z = 0.0;                    // detection verdict, not a z-test
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }
    return c;
  }

  // -- criterion 11: exchangeability and weight independence ---------------
  CriterionOutcome criterion11() {
    CriterionOutcome c;
    c.description = "top-m Gram pattern exchangeable and independent of weights";
    c.pass = true;
    const std::uint64_t n = opts_.quick ? 2000 : 10000;
    {
      const ExchangeResult res = check_exchangeability(
          "exchange.e2", TopAtomSource{e2_, 3}, 3, n, cfg_for("exchange.e2", n));
      c.pass = c.pass && res.chi2_report.pass && res.perm_report.pass;
      c.reports.push_back(res.chi2_report);
      c.reports.push_back(res.perm_report);
    }
    {
      const ExchangeResult res =
          check_exchangeability("exchange.dependent_control", IndependenceControlSource{e2_, 3},
                                3, n, cfg_for("exchange.dependent_control", n));
      IdentityReport r = res.perm_report;
      r.pass = res.perm_p < 0.01;  // control must be rejected
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }
    {
      const ExchangeResult res =
          check_exchangeability("exchange.sorted_control", SortedAssemblyControlSource{e2_narrow_, 3},
                                3, n, cfg_for("exchange.sorted_control", n));
      IdentityReport r = res.chi2_report;
      r.pass = res.chi2_p < 0.01;  // control must be rejected
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }
    return c;
  }

  // -- criterion 12: oracle equivalence and the non-GG control -------------
  CriterionOutcome criterion12() {
    CriterionOutcome c;
    c.description = "MC matches exact enumeration on finite measures; non-GG control rejected";
    c.pass = true;

    const FiniteMeasure fm({0.4, 0.3, 0.2, 0.1},
                           {1.0, 0.5, 0.0, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.2, 0.0,
                            0.0, 0.2, 1.0});
    const DiscreteLaw mu = fm.pair_law();
    const StepFunction half = StepFunction::indicator_geq(0.5);
    const FunctionFamily fam = FunctionFamily::with_mu({half.scaled(0.6), half.scaled(-0.4)}, mu);
    const PairProductFunction phi = PairProductFunction::one().times(0, 1, half);
    const MainEvaluator ev{&fam, &phi};

    // Production path vs an independent plain-arithmetic recomputation, on
    // every one of the m^2 tuples.
    {
      double worst = 0.0;
      Tuple t(2);
      for (std::uint32_t a = 0; a < fm.atom_count(); ++a)
        for (std::uint32_t b = 0; b < fm.atom_count(); ++b) {
          t[0] = a;
          t[1] = b;
          const auto got = ev.eval(fm, std::span<const std::uint32_t>(t));
          const auto want = plain_main_eval(fm, fam, phi, t);
          worst = std::max(worst, std::abs(got.first - want.first));
          worst = std::max(worst, std::abs(got.second - want.second));
        }
      IdentityReport r = finalize_report("oracle.per_sample", worst, 0.0, 0.0, 0.0, 0.0,
                                         fm.atom_count() * fm.atom_count(), opts_.seed, 4.0);
      r.pass = worst <= 1e-10;
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }

    // MC outer loop reproduces the exact enumeration averages.
    {
      const std::string name = "oracle.mc_agreement";
      const EstimatorConfig cfg = cfg_for(name, opts_.quick ? 4000 : 50000);
      const auto stats = run_check(FiniteTarget{fm}, ev, cfg);
      const double exact_lhs = exact_tuple_average(fm, 2, [&](std::span<const std::uint32_t> t) {
        return ev.eval(fm, t).first;
      });
      const double exact_rhs = exact_tuple_average(fm, 2, [&](std::span<const std::uint32_t> t) {
        return ev.eval(fm, t).second;
      });
      const bool ok_l = std::abs(stats.lhs.mean - exact_lhs) <= 4.0 * std::max(stats.lhs.se, 1e-15);
      const bool ok_r = std::abs(stats.rhs.mean - exact_rhs) <= 4.0 * std::max(stats.rhs.se, 1e-15);
      IdentityReport r = finalize_report(name, stats.lhs.mean - exact_lhs,
                                         stats.rhs.mean - exact_rhs, stats.lhs.se, stats.rhs.se,
                                         stats.diff.se, cfg.n_outer, cfg.seed, cfg.z_max);
      r.pass = ok_l && ok_r;
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }

    // The i.i.d.-uniform-weight measure does not satisfy (GG).
    {
      const std::string name = "gg.negative_control";
      const UniformRandomTarget target{8};
      const EstimatorConfig cfg = cfg_for(name, n_outer_);
      const DiscreteLaw umu = estimate_mu(target, cfg, opts_.quick ? 20000 : 100000);
      const PairProductFunction f =
          PairProductFunction::one().times(0, 1, StepFunction::indicator_geq(1.0));
      IdentityReport r =
          check_gg(name, target, 2, f, StepFunction::indicator_geq(1.0), umu, cfg);
      r.pass = std::abs(r.z) > 4.0;  // the violation must be detected
      c.pass = c.pass && r.pass;
      c.reports.push_back(r);
    }
    return c;
  }

  // -- criterion 13: byte-identical reproducibility ------------------------
  CriterionOutcome criterion13() {
    CriterionOutcome c;
    c.description = "suite reports byte-identical across reruns and worker counts {1,2,8}";
    const std::string a = mini_battery_json(1);
    const std::string b = mini_battery_json(2);
    const std::string d = mini_battery_json(8);
    const std::string e = mini_battery_json(2);
    c.pass = (a == b) && (b == d) && (b == e);
    IdentityReport r;
    r.name = "repro.mini_battery";
    r.lhs = static_cast<double>(a.size());
    r.rhs = static_cast<double>(b.size());
    r.n_outer = 2000;
    r.seed = opts_.seed;
    r.pass = c.pass;
    c.reports.push_back(r);
    if (!c.pass) c.notes.push_back("mini battery reports differ across runs/worker counts");
    return c;
  }

  std::string mini_battery_json(std::uint32_t workers) {
    std::vector<IdentityReport> reports;
    CascadeSpec small = e1_;
    small.branching = {256};
    small.leaf_budget = 256;

    EstimatorConfig cfg = cfg_for("repro.zeta", 2000);
    cfg.workers = workers;
    auto sampler = [&](Rng& rng, std::span<double> out) {
      const WeightVector w = sample_pd(ZetaParam(0.5), 256, rng);
      double m2 = 0.0;
      for (double v : w.weights) m2 += v * v;
      out[0] = m2;
    };
    const auto series = run_vector(1, sampler, cfg);
    reports.push_back(finalize_report("repro.zeta", series[0].mean, 0.5, series[0].se, 0.0,
                                      series[0].se, cfg.n_outer, cfg.seed, cfg.z_max));

    const StepFunction top1 = StepFunction::indicator_geq(1.0);
    DiscreteLaw law;
    law.points = {0.0, 1.0};
    law.masses = {0.5, 0.5};
    const FunctionFamily fam = FunctionFamily::with_mu({top1, top1}, law);
    const PairProductFunction phi = PairProductFunction::one().times(0, 1, top1);
    EstimatorConfig cfg2 = cfg_for("repro.main", 2000);
    cfg2.workers = workers;
    reports.push_back(check_main("repro.main", CascadeTarget{small}, fam, phi, cfg2));

    EstimatorConfig cfg3 = cfg_for("repro.ultra", 2000);
    cfg3.workers = workers;
    reports.push_back(check_ultrametric("repro.ultra", CascadeTarget{small}, 0.5, cfg3).report);
    return reports_to_json_array(reports);
  }

  // ---------------------------------------------------------------------
  template <DiscreteMeasureLike M>
  static std::pair<double, double> plain_main_eval(const M& g, const FunctionFamily& fam,
                                                   const PairProductFunction& phi,
                                                   const Tuple& t) {
    const int n = fam.n();
    const OverlapMatrix r = gram_of(g, std::span<const std::uint32_t>(t));
    double num = 0.0;
    for (int l = 0; l < n; ++l) {
      double fl = fam.mu_integral[static_cast<std::size_t>(l)];
      for (int j = 0; j < n; ++j)
        fl += fam.f[static_cast<std::size_t>(j)](
            g.overlap(t[static_cast<std::size_t>(l)], t[static_cast<std::size_t>(j)]));
      fl -= fam.f[static_cast<std::size_t>(l)](
          g.overlap(t[static_cast<std::size_t>(l)], t[static_cast<std::size_t>(l)]));
      num += fl;
    }
    double den = 0.0;
    for (std::uint32_t a = 0; a < g.atom_count(); ++a) {
      double fa = 0.0;
      for (int j = 0; j < n; ++j)
        fa += fam.f[static_cast<std::size_t>(j)](g.overlap(a, t[static_cast<std::size_t>(j)]));
      den += g.weight(a) * std::exp(fa);
    }
    const double phiv = phi(r);
    return {phiv, phiv * std::exp(num) / std::pow(den, n)};
  }

  template <class Rng>
  static FiniteMeasure random_psd_measure(Rng& rng) {
    const std::size_t m = 8 + rng.below(13);  // 8..20 atoms
    const std::size_t d = 3 + rng.below(4);   // ambient dimension 3..6
    std::vector<std::vector<double>> x(m, std::vector<double>(d));
    for (auto& row : x) {
      double norm2 = 0.0;
      for (double& v : row) {
        v = rng.normal();
        norm2 += v * v;
      }
      const double radius = std::sqrt(0.3 + 0.7 * rng.u01());  // |xi|^2 in [0.3, 1]
      for (double& v : row) v *= radius / std::sqrt(norm2);
    }
    std::vector<double> gram(m * m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        double dot = 0.0;
        for (std::size_t k = 0; k < d; ++k) dot += x[i][k] * x[j][k];
        gram[i * m + j] = dot;
      }
    // exact symmetry regardless of summation order
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) gram[j * m + i] = gram[i * m + j];
    std::vector<double> w(m, 1.0);
    return FiniteMeasure(std::move(w), std::move(gram));
  }

  static std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  }

  static std::string join(const std::vector<double>& xs) {
    std::ostringstream os;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (i) os << ", ";
      os << xs[i];
    }
    return os.str();
  }

  SuiteOptions opts_;
  CascadeSpec e1_, e2_, e2_narrow_;
  std::uint64_t n_outer_ = 0, n_mu_ = 0;
  DiscreteLaw mu1_, mu2_;
};

}  // namespace detail

inline SuiteResult run_suite(const SuiteOptions& opts) {
  detail::SuiteRunner runner(opts);
  return runner.run();
}

inline void print_outcomes(const SuiteResult& result, std::ostream& os) {
  for (const auto& c : result.criteria) {
    os << (c.pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.description << "\n";
    for (const auto& r : c.reports)
      os << "    " << (r.pass ? "ok  " : "FAIL") << " " << r.name << "  lhs=" << r.lhs
         << " rhs=" << r.rhs << " z=" << r.z << "\n";
    for (const auto& n : c.notes) os << "    note: " << n << "\n";
  }
  os << (result.all_pass() ? "ALL CRITERIA PASS" : "SOME CRITERIA FAILED") << "\n";
}

}  // namespace gglab
