#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gglab/rng.hpp"

using namespace gglab;

TEST_CASE("derive_stream is a pure function of its triple") {
  Rng a = derive_stream(42, 0, 17);
  Rng b = derive_stream(42, 0, 17);
  for (int i = 0; i < 64; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct triples give distinct streams") {
  Rng a = derive_stream(42, 0, 17);
  Rng b = derive_stream(42, 0, 18);
  Rng c = derive_stream(42, 1, 17);
  Rng d = derive_stream(43, 0, 17);
  const auto a0 = a.next_u64();
  REQUIRE(a0 != b.next_u64());
  REQUIRE(a0 != c.next_u64());
  REQUIRE(a0 != d.next_u64());
}

TEST_CASE("u01 lies in [0, 1) and exponential is strictly positive") {
  Rng r = derive_stream(7, 0, 0);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.u01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    REQUIRE(r.exponential() > 0.0);
  }
}

TEST_CASE("neighboring streams pass the pairwise correlation smoke test") {
  const int n = 100000;
  for (std::uint64_t pair = 0; pair < 3; ++pair) {
    Rng a = derive_stream(1234, 0, 2 * pair);
    Rng b = derive_stream(1234, 0, 2 * pair + 1);
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (int i = 0; i < n; ++i) {
      const double x = a.u01();
      const double y = b.u01();
      sa += x;
      sb += y;
      saa += x * x;
      sbb += y * y;
      sab += x * y;
    }
    const double cov = sab / n - (sa / n) * (sb / n);
    const double var_a = saa / n - (sa / n) * (sa / n);
    const double var_b = sbb / n - (sb / n) * (sb / n);
    const double rho = cov / std::sqrt(var_a * var_b);
    REQUIRE(std::abs(rho) < 0.01);
  }
}

TEST_CASE("below produces bounded draws") {
  Rng r = derive_stream(9, 0, 0);
  for (int i = 0; i < 1000; ++i) REQUIRE(r.below(17) < 17);
}
