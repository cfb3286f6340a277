#include <catch2/catch_amalgamated.hpp>

#include "gglab/config.hpp"

using namespace gglab;

TEST_CASE("flat keys, sections and comments") {
  const Config cfg = Config::parse_string(
      "# comment\n"
      "zeta = 0.5\n"
      "zetas = 0.3, 0.7   # trailing comment\n"
      "n-outer = 4096\n"
      "\n"
      "[f1]\n"
      "breaks = 0.4, 1\n"
      "vals = 0, 0.5, 1\n"
      "[b1]\n"
      "set = [0.4, 1]\n");
  REQUIRE(cfg.get_double("zeta", 0.0) == 0.5);
  REQUIRE(cfg.get_list("zetas") == std::vector<double>{0.3, 0.7});
  REQUIRE(cfg.get_u64("n-outer", 0) == 4096);
  REQUIRE(cfg.get_u64("missing", 17) == 17);

  const auto f = cfg.maybe_step("f1");
  REQUIRE(f.has_value());
  REQUIRE((*f)(0.0) == 0.0);
  REQUIRE((*f)(0.4) == 0.5);
  REQUIRE((*f)(1.0) == 1.0);

  const auto b = cfg.maybe_set("b1.set");
  REQUIRE(b.has_value());
  REQUIRE((*b)(0.39) == 0.0);
  REQUIRE((*b)(0.4) == 1.0);
  REQUIRE((*b)(1.0) == 1.0);
  REQUIRE_FALSE(cfg.maybe_step("psi").has_value());
}

TEST_CASE("interval unions merge overlaps") {
  const StepFunction s =
      Config::parse_interval_union("[-1, -0.5] [0.2, 0.6], [0.5, 0.8]", "k");
  REQUIRE(s(-0.7) == 1.0);
  REQUIRE(s(-0.4) == 0.0);
  REQUIRE(s(0.55) == 1.0);
  REQUIRE(s(0.8) == 1.0);
  REQUIRE(s(0.81) == 0.0);
}

TEST_CASE("cascade and estimator assembly with overrides") {
  Config cfg = Config::parse_string(
      "zetas = 0.3, 0.7\n"
      "qs = 0, 0.4, 1\n"
      "branching = 8, 8\n"
      "seed = 5\n"
      "n-outer = 1000\n");
  cfg.set("seed", "9");  // command line wins
  CascadeSpec fallback;
  fallback.zetas = {0.5};
  fallback.qs = {0.0, 1.0};
  fallback.branching = {64};
  const CascadeSpec spec = cfg.get_cascade(fallback);
  REQUIRE(spec.depth() == 2);
  REQUIRE(spec.branching == std::vector<std::size_t>{8, 8});
  const EstimatorConfig est = cfg.get_estimator(EstimatorConfig{});
  REQUIRE(est.seed == 9);
  REQUIRE(est.n_outer == 992);  // rounded down to a batch multiple
}

TEST_CASE("parse errors carry context") {
  REQUIRE_THROWS_AS(Config::parse_string("novalue\n"), std::invalid_argument);
  REQUIRE_THROWS_AS(Config::parse_string("[open\nx = 1\n"), std::invalid_argument);
  const Config cfg = Config::parse_string("x = notanumber\n");
  REQUIRE_THROWS_AS(cfg.get_double("x", 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(Config::parse_interval_union("[0.5]", "k"), std::invalid_argument);
  REQUIRE_THROWS_AS(Config::parse_interval_union("0.5, 1", "k"), std::invalid_argument);
}
