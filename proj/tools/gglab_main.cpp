// Command-line front door: configure targets, run checks, emit reports.
//
// Reports are printed to stdout (and --out) as JSON or CSV; human-readable
// progress and timing go to stderr. Exit code 0 means every requested check
// passed, 1 means a check failed, 2 means a usage error. Report files are
// byte-reproducible for a fixed seed/config/worker count; wall_time_s is
// written as 0.0 unless --timing is given, since real timings would break
// that guarantee.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gglab/cascade.hpp"
#include "gglab/config.hpp"
#include "gglab/identity_checks.hpp"
#include "gglab/oracle.hpp"
#include "gglab/pd.hpp"
#include "gglab/report.hpp"
#include "gglab/structural_checks.hpp"
#include "gglab/suite.hpp"

namespace {

using namespace gglab;

struct CommonFlags {
  std::string config_path;
  std::string out_path;
  std::string format = "json";
  bool timing = false;
  std::map<std::string, std::string> overrides;  // node-stable for CLI11 bindings
};

void add_common(CLI::App* cmd, CommonFlags& fl) {
  cmd->add_option("--config", fl.config_path, "config file (key = value)");
  cmd->add_option("--out", fl.out_path, "write the report to this path as well");
  cmd->add_option("--format", fl.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_flag("--timing", fl.timing, "embed wall times in reports (breaks reproducibility)");

  static const std::vector<std::string> keys = {
      "zeta",       "depth",   "zetas",     "qs",    "branching", "leaf-budget",
      "n",          "n-outer", "n-batches", "seed",  "workers",   "z-max",
      "truncation", "t",       "groups",    "q",     "eps",       "s",
      "s-list",     "m",       "n-target",  "trials", "group-sizes", "control",
      "phi",        "phi-alpha", "head",    "b-set",  "n-mu"};
  for (const auto& k : keys) cmd->add_option("--" + k, fl.overrides[k], "");
}

Config load_config(const CommonFlags& fl) {
  Config cfg = fl.config_path.empty() ? Config{} : Config::parse_file(fl.config_path);
  for (const auto& [k, v] : fl.overrides)
    if (!v.empty()) cfg.set(k, v);
  return cfg;
}

CascadeSpec cascade_from(const Config& cfg) {
  CascadeSpec fallback;
  const double zeta = cfg.get_double("zeta", 0.5);
  fallback.zetas = {zeta};
  fallback.qs = {0.0, 1.0};
  fallback.branching = {cfg.get_u64("leaf-budget", 4096)};
  fallback.leaf_budget = cfg.get_u64("leaf-budget", 4096);
  CascadeSpec spec = cfg.get_cascade(fallback);
  if (spec.zetas.size() > 1 && !cfg.has("qs")) {
    spec.qs.resize(spec.zetas.size() + 1);
    for (std::size_t p = 0; p < spec.qs.size(); ++p)
      spec.qs[p] = static_cast<double>(p) / static_cast<double>(spec.zetas.size());
  }
  if (spec.zetas.size() > 1 && !cfg.has("branching")) {
    const auto k = static_cast<std::size_t>(
        std::llround(std::pow(static_cast<double>(spec.leaf_budget), 1.0 / spec.zetas.size())));
    spec.branching.assign(spec.zetas.size(), std::max<std::size_t>(2, k));
  }
  spec.validate();
  return spec;
}

double top_q(const CascadeSpec& spec) { return spec.qs.back(); }

// family from [f1..fn] blocks, defaulting to scale * I(x >= q_top)
FunctionFamily family_from(const Config& cfg, int n, const CascadeSpec& spec,
                           const DiscreteLaw& mu, const StepFunction& fallback) {
  std::vector<StepFunction> fs;
  for (int l = 1; l <= n; ++l) {
    auto f = cfg.maybe_step("f" + std::to_string(l));
    fs.push_back(f ? *f : fallback);
  }
  (void)spec;
  return FunctionFamily::with_mu(std::move(fs), mu);
}

// product of pair blocks [<prefix>1..], each with pair = i:j plus breaks/vals
PairProductFunction pairs_from(const Config& cfg, const std::string& prefix,
                               const PairProductFunction& fallback) {
  PairProductFunction out = PairProductFunction::one();
  bool any = false;
  for (int i = 1;; ++i) {
    const std::string sec = prefix + std::to_string(i);
    const auto f = cfg.maybe_step(sec);
    if (!f) break;
    const std::string pair = cfg.get_string(sec + ".pair", "1:2");
    const auto colon = pair.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("config: " + sec + ".pair must look like 1:2");
    const int a = std::stoi(pair.substr(0, colon));
    const int b = std::stoi(pair.substr(colon + 1));
    out.times(a - 1, b - 1, *f);
    any = true;
  }
  return any ? out : fallback;
}

int emit(const std::vector<IdentityReport>& reports, const CommonFlags& fl) {
  std::string text;
  if (fl.format == "csv") {
    text = csv_header() + "\n";
    for (const auto& r : reports) text += to_csv_row(r) + "\n";
  } else if (reports.size() == 1) {
    text = to_json(reports[0]).dump(2) + "\n";
  } else {
    text = reports_to_json_array(reports) + "\n";
  }
  std::cout << text;
  if (!fl.out_path.empty()) {
    std::ofstream out(fl.out_path, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot write " << fl.out_path << "\n";
      return 2;
    }
    out << text;
  }
  for (const auto& r : reports)
    if (!r.pass) return 1;
  return 0;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void stamp(std::vector<IdentityReport>& reports, const Timer& timer, bool timing) {
  if (!timing) return;
  const double t = timer.elapsed() / static_cast<double>(reports.size());
  for (auto& r : reports) r.wall_time_s = t;
}

DiscreteLaw mu_for_target(const CascadeSpec& spec, const Config& cfg, const EstimatorConfig& est) {
  const std::uint64_t n_mu = cfg.get_u64("n-mu", std::max<std::uint64_t>(est.n_outer, 100000));
  return estimate_mu(CascadeTarget{spec}, est, n_mu);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete random measure laboratory: cascade construction and identity checks"};
  app.require_subcommand(1);

  auto* pd_sample = app.add_subcommand("pd-sample", "sample one PD(zeta) weight vector");
  CommonFlags fl_pd;
  add_common(pd_sample, fl_pd);

  auto* cascade_info = app.add_subcommand("cascade-info", "build one cascade and describe it");
  CommonFlags fl_ci;
  add_common(cascade_info, fl_ci);

  auto* check = app.add_subcommand("check", "identity checks");
  check->require_subcommand(1);
  std::map<std::string, CommonFlags> fl_check;
  for (const char* name : {"zeta", "gg", "main", "iterated", "weights", "th2a", "pd-identity", "prop1"})
    add_common(check->add_subcommand(name), fl_check[name]);

  auto* strct = app.add_subcommand("struct", "structural checks");
  strct->require_subcommand(1);
  std::map<std::string, CommonFlags> fl_struct;
  for (const char* name : {"ultra", "positivity", "prop2", "sequence", "exchange"})
    add_common(strct->add_subcommand(name), fl_struct[name]);

  auto* suite = app.add_subcommand("suite", "run the full verification battery");
  CommonFlags fl_suite;
  bool quick = false;
  suite->add_flag("--quick", quick, "reduced sample sizes");
  add_common(suite, fl_suite);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    Timer timer;

    if (pd_sample->parsed()) {
      const Config cfg = load_config(fl_pd);
      const double zeta = cfg.get_double("zeta", 0.5);
      const auto k = cfg.get_u64("truncation", 4096);
      const auto seed = cfg.get_u64("seed", 1);
      Rng rng = derive_stream(seed, kStreamMain, 0);
      const WeightVector w = sample_pd(ZetaParam(zeta), k, rng);
      const auto head = std::min<std::uint64_t>(cfg.get_u64("head", 10), w.weights.size());
      nlohmann::ordered_json j{{"zeta", zeta},
                               {"truncation", k},
                               {"seed", seed},
                               {"tail_mass_estimate", w.tail_mass_estimate}};
      j["weights_head"] = std::vector<double>(w.weights.begin(), w.weights.begin() + head);
      double m2 = 0.0;
      for (double v : w.weights) m2 += v * v;
      j["sum_sq"] = m2;
      std::cout << j.dump(2) << "\n";
      if (!fl_pd.out_path.empty()) {
        std::ofstream out(fl_pd.out_path, std::ios::binary);
        for (double v : w.weights) out << std::scientific << v << "\n";
      }
      return 0;
    }

    if (cascade_info->parsed()) {
      const Config cfg = load_config(fl_ci);
      const CascadeSpec spec = cascade_from(cfg);
      const auto seed = cfg.get_u64("seed", 1);
      Rng rng = derive_stream(seed, kStreamMain, 0);
      const CascadeMeasure g = build_cascade(spec, rng);
      const DiscreteLaw law = g.pair_law();
      nlohmann::ordered_json j{{"depth", spec.depth()},
                               {"zetas", spec.zetas},
                               {"qs", spec.qs},
                               {"branching", spec.branching},
                               {"leaves", g.atom_count()},
                               {"seed", seed}};
      j["pair_law_points"] = law.points;
      j["pair_law_masses"] = law.masses;
      std::vector<double> top;
      const auto top_idx = TopAtomSource::top_atoms(g, std::min<int>(10, static_cast<int>(g.atom_count())));
      for (auto i : top_idx) top.push_back(g.weight(i));
      j["top_weights"] = top;
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (check->parsed()) {
      std::string name;
      for (auto* sc : check->get_subcommands())
        if (sc->parsed()) name = sc->get_name();
      const CommonFlags& cf = fl_check[name];
      const Config cfg = load_config(cf);
      EstimatorConfig est = cfg.get_estimator(EstimatorConfig{});
      std::vector<IdentityReport> reports;

      if (name == "zeta") {
        const double zeta = cfg.get_double("zeta", 0.5);
        const auto k = cfg.get_u64("truncation", est.truncation);
        auto sampler = [&](Rng& rng, std::span<double> out) {
          const WeightVector w = sample_pd(ZetaParam(zeta), k, rng);
          double m2 = 0.0;
          for (double v : w.weights) m2 += v * v;
          out[0] = m2 / sq(1.0 + w.tail_mass_estimate);
        };
        const auto series = run_vector(1, sampler, est);
        IdentityReport r = finalize_report("zeta", series[0].mean, 1.0 - zeta, series[0].se, 0.0,
                                           series[0].se, est.n_outer, est.seed, est.z_max);
        r.pass = std::abs(r.lhs - r.rhs) <= std::max(3.0 * series[0].se, 0.01);
        reports.push_back(r);
      } else if (name == "gg") {
        const CascadeSpec spec = cascade_from(cfg);
        const int n = static_cast<int>(cfg.get_u64("n", 2));
        const DiscreteLaw mu = mu_for_target(spec, cfg, est);
        const StepFunction psi_default = StepFunction::indicator_geq(top_q(spec));
        const auto psi = cfg.maybe_step("psi");
        const PairProductFunction f = pairs_from(cfg, "f", PairProductFunction::one());
        reports.push_back(check_gg("gg", CascadeTarget{spec}, n, f, psi ? *psi : psi_default, mu, est));
      } else if (name == "main") {
        const CascadeSpec spec = cascade_from(cfg);
        const int n = static_cast<int>(cfg.get_u64("n", 2));
        const DiscreteLaw mu = mu_for_target(spec, cfg, est);
        const StepFunction fdef = StepFunction::indicator_geq(top_q(spec)).scaled(0.75);
        const FunctionFamily fam = family_from(cfg, n, spec, mu, fdef);
        PairProductFunction phi_def = PairProductFunction::one();
        if (n >= 2) phi_def.times(0, 1, StepFunction::indicator_geq(top_q(spec)));
        const PairProductFunction phi = pairs_from(cfg, "phi", phi_def);
        reports.push_back(check_main("main", CascadeTarget{spec}, fam, phi, est));
      } else if (name == "iterated") {
        const CascadeSpec spec = cascade_from(cfg);
        const DiscreteLaw mu = mu_for_target(spec, cfg, est);
        const auto sizes = cfg.get_int_list("groups", {1, 1});
        std::vector<int> ends;
        int acc = 0;
        for (int s : sizes) ends.push_back(acc += s);
        const int n = acc;
        const StepFunction fdef = StepFunction::indicator_lt(top_q(spec)).scaled(0.3);
        std::vector<StepFunction> fs;
        for (int l = 1; l <= n; ++l) {
          const auto f = cfg.maybe_step("f" + std::to_string(l));
          fs.push_back(f ? *f : fdef);
        }
        const GroupedFamily grouped = GroupedFamily::with_mu(std::move(fs), std::move(ends), mu);
        const PairProductFunction phi = pairs_from(cfg, "phi", PairProductFunction::one());
        reports.push_back(check_iterated("iterated", CascadeTarget{spec}, grouped, phi, est));
      } else if (name == "weights" || name == "th2a") {
        const CascadeSpec spec = cascade_from(cfg);
        const DiscreteLaw mu = mu_for_target(spec, cfg, est);
        const int n = static_cast<int>(cfg.get_u64("n", 2));
        const double q1 = spec.qs.size() > 1 ? spec.qs[1] : spec.qs.back();
        PartitionSpec part;
        for (int l = 1; l <= n; ++l) {
          const auto b = cfg.maybe_set("b" + std::to_string(l) + ".set");
          part.b.push_back(b ? *b : StepFunction::indicator_geq(q1));
        }
        std::vector<double> t = cfg.get_list("t", {0.5, -0.5});
        if (static_cast<int>(t.size()) != n)
          throw std::invalid_argument("t must have one entry per coordinate");
        if (name == "weights") {
          const auto alpha = static_cast<std::uint32_t>(cfg.get_u64("phi-alpha", 0));
          const FunctionFamily fam = family_from_partition(part, t, mu);
          auto phi = [alpha](const OverlapMatrix&, std::span<const double> w) {
            return w[alpha];
          };
          reports.push_back(
              check_weight_invariance("weights", CascadeTarget{spec}, fam, part, phi, est));
        } else {
          if (n != 2) throw std::invalid_argument("check th2a: built-in phi forms need n = 2");
          const auto ev = cfg.maybe_set("event.set");
          PairProductFunction event = PairProductFunction::one();
          event.times(0, 1, ev ? *ev : StepFunction::indicator_geq(q1));
          const std::string phi_kind = cfg.get_string("phi", "inv-square");
          const double s = cfg.get_double("s", 0.5);
          if (phi_kind == "inv-square") {
            auto phi = [s](std::span<const double> w) {
              const double e = std::exp(-s);
              return 1.0 / sq(e * (w[1] + w[2]) + w[0] + w[3]);
            };
            reports.push_back(
                check_th2a("th2a", CascadeTarget{spec}, part, t, event, phi, mu, est));
          } else if (phi_kind == "w-alpha") {
            const auto alpha = static_cast<std::uint32_t>(cfg.get_u64("phi-alpha", 0));
            auto phi = [alpha](std::span<const double> w) { return w[alpha]; };
            reports.push_back(
                check_th2a("th2a", CascadeTarget{spec}, part, t, event, phi, mu, est));
          } else {
            throw std::invalid_argument("unknown phi form: " + phi_kind);
          }
        }
      } else if (name == "pd-identity") {
        const double zeta = cfg.get_double("zeta", 0.5);
        PdIdentitySpec spec{ZetaParam(zeta), cfg.get_int_list("group-sizes", {1, 1}),
                            cfg.get_list("t", {0.7, -0.7})};
        EstimatorConfig est2 = est;
        est2.truncation = cfg.get_u64("truncation", 512);
        reports.push_back(check_pd_identity("pd-identity", spec, est2));
      } else if (name == "prop1") {
        CascadeSpec spec = cascade_from(cfg);
        if (spec.depth() < 2 && !cfg.has("zetas")) {
          spec.zetas = {0.3, 0.7};
          spec.qs = {0.0, 0.4, 1.0};
          spec.branching = {64, 64};
          spec.leaf_budget = 4096;
        }
        const DiscreteLaw mu = mu_for_target(spec, cfg, est);
        const double q = cfg.get_double("q", spec.qs[1]);
        const auto s_list = cfg.get_list("s-list", {0.0, 0.5, 1.0, 2.0});
        EstimatorConfig est3 = est;
        est3.z_max = cfg.get_double("z-max", 3.0);
        const Prop1Result res =
            check_prop1_integral("prop1", CascadeTarget{spec}, q, s_list, mu, est3);
        for (std::size_t i = 0; i < res.estimates.size(); ++i)
          std::cerr << "  s = " << res.s_values[i] << " -> " << res.estimates[i] << " (se "
                    << res.ses[i] << ")\n";
        reports.push_back(res.report);
      }

      stamp(reports, timer, cf.timing);
      std::cerr << "elapsed: " << timer.elapsed() << " s\n";
      return emit(reports, cf);
    }

    if (strct->parsed()) {
      std::string name;
      for (auto* sc : strct->get_subcommands())
        if (sc->parsed()) name = sc->get_name();
      const CommonFlags& cf = fl_struct[name];
      const Config cfg = load_config(cf);
      EstimatorConfig est = cfg.get_estimator(EstimatorConfig{});
      std::vector<IdentityReport> reports;
      const CascadeSpec spec = cascade_from(cfg);

      if (name == "ultra") {
        const double q = cfg.get_double("q", spec.qs.size() > 1 ? spec.qs[1] : 0.5);
        if (cfg.has("n")) est.n_outer = cfg.get_u64("n", est.n_outer) / est.n_batches * est.n_batches;
        const UltraResult res = check_ultrametric("ultra", CascadeTarget{spec}, q, est);
        std::cerr << "violations: " << res.violations << " / " << res.samples << "\n";
        reports.push_back(res.report);
      } else if (name == "positivity") {
        const double eps = cfg.get_double("eps", 0.1);
        const PositivityResult res = check_positivity("positivity", CascadeTarget{spec}, eps, est);
        std::cerr << "negative-overlap count: " << res.negative_overlap_count
                  << ", negative gram-sum count: " << res.negative_gram_sum_count << "\n";
        reports.push_back(res.report);
      } else if (name == "prop2") {
        const DiscreteLaw mu = mu_for_target(spec, cfg, est);
        const int n = static_cast<int>(cfg.get_u64("n", 2));
        const StepFunction fdef = StepFunction::indicator_geq(top_q(spec));
        const FunctionFamily fam = family_from(cfg, n, spec, mu, fdef);
        EstimatorConfig est2 = est;
        est2.n_outer = cfg.get_u64("n-outer", 10000) / est.n_batches * est.n_batches;
        const Prop2Result res = check_prop2("prop2", CascadeTarget{spec}, fam, est2);
        std::cerr << "violations: " << res.violations << " / " << res.tuples << "\n";
        reports.push_back(res.report);
      } else if (name == "sequence") {
        const auto b = cfg.maybe_set("b-set");
        const StepFunction bset = b ? *b : Config::parse_interval_union("[-1, 0]", "b-set");
        const int n_target = static_cast<int>(cfg.get_u64("n-target", 10));
        const auto trials = cfg.get_u64("trials", 200);
        const SequenceResult res = find_constrained_sequence("sequence", CascadeTarget{spec},
                                                             bset, n_target, trials, est);
        std::cerr << "max length: " << res.max_length << " over " << trials << " trials\n";
        reports.push_back(res.report);
      } else if (name == "exchange") {
        const int m = static_cast<int>(cfg.get_u64("m", 3));
        const auto n = cfg.get_u64("n-outer", 10000);
        const std::string control = cfg.get_string("control", "none");
        ExchangeResult res;
        if (control == "none") {
          res = check_exchangeability("exchange", TopAtomSource{spec, m}, m, n, est);
        } else if (control == "independence") {
          res = check_exchangeability("exchange", IndependenceControlSource{spec, m}, m, n, est);
        } else if (control == "sorted") {
          res = check_exchangeability("exchange", SortedAssemblyControlSource{spec, m}, m, n, est);
        } else {
          throw std::invalid_argument("unknown control: " + control);
        }
        std::cerr << "chi2 p = " << res.chi2_p << ", independence p = " << res.perm_p
                  << ", skipped = " << res.skipped << "\n";
        reports.push_back(res.chi2_report);
        reports.push_back(res.perm_report);
      }

      stamp(reports, timer, cf.timing);
      std::cerr << "elapsed: " << timer.elapsed() << " s\n";
      return emit(reports, cf);
    }

    if (suite->parsed()) {
      const Config cfg = load_config(fl_suite);
      SuiteOptions opts;
      opts.seed = cfg.get_u64("seed", opts.seed);
      opts.workers = static_cast<std::uint32_t>(cfg.get_u64("workers", 1));
      opts.quick = quick;
      opts.timing = fl_suite.timing;
      const SuiteResult result = run_suite(opts);
      print_outcomes(result, std::cerr);
      std::cerr << "elapsed: " << timer.elapsed() << " s\n";
      return emit(result.reports(), fl_suite);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
