#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>

#include "gglab/mc.hpp"

using namespace gglab;

TEST_CASE("constant sampler reports exact equality") {
  EstimatorConfig cfg;
  cfg.n_outer = 320;
  cfg.seed = 5;
  auto sampler = [](Rng&) { return std::pair<double, double>{2.5, 2.5}; };
  const PairedStats s = run_paired(sampler, cfg);
  REQUIRE(s.lhs.mean == 2.5);
  REQUIRE(s.rhs.mean == 2.5);
  REQUIRE(s.diff.mean == 0.0);
  REQUIRE(s.diff.se == 0.0);
}

TEST_CASE("antithetic uniform sampler is centered") {
  EstimatorConfig cfg;
  cfg.n_outer = 32000;
  cfg.seed = 11;
  auto sampler = [](Rng& rng) {
    const double u = rng.u01();
    return std::pair<double, double>{u, 1.0 - u};
  };
  const PairedStats s = run_paired(sampler, cfg);
  REQUIRE(std::abs(s.lhs.mean - 0.5) < 0.01);
  REQUIRE(std::abs(s.rhs.mean - 0.5) < 0.01);
  REQUIRE(std::abs(s.diff.mean) <= 3.0 * std::max(s.diff.se, 1e-12) + 1e-12);
}

TEST_CASE("same seed gives bit-identical results") {
  EstimatorConfig cfg;
  cfg.n_outer = 6400;
  cfg.seed = 99;
  auto sampler = [](Rng& rng) {
    const double u = rng.exponential();
    return std::pair<double, double>{u, u * u};
  };
  const PairedStats a = run_paired(sampler, cfg);
  const PairedStats b = run_paired(sampler, cfg);
  REQUIRE(a.lhs.mean == b.lhs.mean);
  REQUIRE(a.rhs.se == b.rhs.se);
  for (std::size_t i = 0; i < a.lhs.batch_means.size(); ++i)
    REQUIRE(a.lhs.batch_means[i] == b.lhs.batch_means[i]);
}

TEST_CASE("results are invariant under the worker count") {
  auto sampler = [](Rng& rng) {
    double acc = 0.0;
    for (int i = 0; i < 5; ++i) acc += rng.u01();
    return std::pair<double, double>{acc, acc * 0.5};
  };
  PairedStats base;
  bool first = true;
  for (std::uint32_t workers : {1u, 2u, 8u}) {
    EstimatorConfig cfg;
    cfg.n_outer = 6400;
    cfg.seed = 321;
    cfg.workers = workers;
    const PairedStats s = run_paired(sampler, cfg);
    if (first) {
      base = s;
      first = false;
    } else {
      REQUIRE(s.lhs.mean == base.lhs.mean);
      REQUIRE(s.rhs.mean == base.rhs.mean);
      REQUIRE(s.diff.se == base.diff.se);
      for (std::size_t i = 0; i < s.lhs.batch_means.size(); ++i)
        REQUIRE(s.lhs.batch_means[i] == base.lhs.batch_means[i]);
    }
  }
}

TEST_CASE("batch-means standard error tracks the i.i.d. closed form") {
  EstimatorConfig cfg;
  cfg.n_outer = 100000;
  cfg.seed = 2718;
  auto sampler = [](Rng& rng, std::span<double> out) { out[0] = rng.normal(); };
  const auto series = run_vector(1, sampler, cfg);
  const double closed_form = 1.0 / std::sqrt(static_cast<double>(cfg.n_outer));
  REQUIRE(series[0].se > 0.7 * closed_form);
  REQUIRE(series[0].se < 1.3 * closed_form);
}

TEST_CASE("config validation") {
  EstimatorConfig cfg;
  cfg.n_outer = 33;  // not a multiple of 32
  auto sampler = [](Rng&) { return std::pair<double, double>{0.0, 0.0}; };
  REQUIRE_THROWS_AS(run_paired(sampler, cfg), std::invalid_argument);
  cfg.n_outer = 320;
  cfg.workers = 0;
  REQUIRE_THROWS_AS(run_paired(sampler, cfg), std::invalid_argument);
  cfg.workers = 1;
  cfg.n_batches = 1;
  REQUIRE_THROWS_AS(run_paired(sampler, cfg), std::invalid_argument);
}
