#include <catch2/catch_amalgamated.hpp>

#include "gglab/step_function.hpp"

using namespace gglab;

TEST_CASE("evaluation is right-continuous") {
  const StepFunction f({0.4}, {1.0, 2.0});
  REQUIRE(f(0.39) == 1.0);
  REQUIRE(f(0.4) == 2.0);
  REQUIRE(f(0.41) == 2.0);
  REQUIRE(f(-1.0) == 1.0);
  REQUIRE(f(1.0) == 2.0);
}

TEST_CASE("indicator_geq and indicator_lt are exactly complementary") {
  const StepFunction ge = StepFunction::indicator_geq(0.25);
  const StepFunction lt = StepFunction::indicator_lt(0.25);
  for (double x : {-1.0, -0.3, 0.0, 0.2499, 0.25, 0.2501, 0.9, 1.0})
    REQUIRE(ge(x) + lt(x) == 1.0);
}

TEST_CASE("indicator_closed honors both endpoints") {
  const StepFunction f = StepFunction::indicator_closed(-0.5, 0.5);
  REQUIRE(f(-0.50001) == 0.0);
  REQUIRE(f(-0.5) == 1.0);
  REQUIRE(f(0.0) == 1.0);
  REQUIRE(f(0.5) == 1.0);
  REQUIRE(f(0.50001) == 0.0);
}

TEST_CASE("constant, scaling and bound") {
  const StepFunction c = StepFunction::constant(3.5);
  REQUIRE(c(-1.0) == 3.5);
  REQUIRE(c(1.0) == 3.5);
  const StepFunction f({0.0}, {-2.0, 0.5});
  REQUIRE(f.bound() == 2.0);
  const StepFunction g = f.scaled(-2.0);
  REQUIRE(g(-0.5) == 4.0);
  REQUIRE(g(0.5) == -1.0);
  REQUIRE(StepFunction::zero().is_zero());
  REQUIRE(StepFunction::indicator_geq(0.3).is_indicator());
  REQUIRE_FALSE(f.is_indicator());
}

TEST_CASE("construction rejects bad input") {
  REQUIRE_THROWS_AS(StepFunction({0.5, 0.4}, {0.0, 1.0, 2.0}), std::invalid_argument);
  REQUIRE_THROWS_AS(StepFunction({0.5}, {1.0}), std::invalid_argument);
  REQUIRE_THROWS_AS(StepFunction({0.3, 0.3}, {0.0, 1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("indicator subset checks") {
  const StepFunction inner = StepFunction::indicator_closed(0.5, 0.8);
  const StepFunction outer = StepFunction::indicator_geq(0.4);
  REQUIRE(indicator_subset_of(inner, outer));
  REQUIRE_FALSE(indicator_subset_of(outer, inner));
  REQUIRE(indicator_subset_of(outer, outer));
  const StepFunction comp = complement_indicator(outer);
  for (double x : {-1.0, 0.39, 0.4, 1.0}) REQUIRE(comp(x) == 1.0 - outer(x));
}
