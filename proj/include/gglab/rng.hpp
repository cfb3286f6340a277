// Counter-based random streams.
//
// Stream derivation contract: derive_stream(seed, stream, index) builds an
// xoshiro256++ generator whose state is a splitmix64 chain seeded from the
// mix64-combined triple (seed, stream, index). The same triple always yields
// the same stream, and distinct triples yield statistically independent
// streams, so estimators key streams by sample index and stay invariant
// under worker scheduling. Other implementations only need to honor the
// (triple -> independent stream) contract, not the exact bits.
#pragma once

#include <cmath>
#include <cstdint>

namespace gglab {

// splitmix64 output mix (Stafford mix13).
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  return mix64(state);
}

// xoshiro256++ generator.
class Rng {
 public:
  static Rng from_key(std::uint64_t key) {
    Rng r;
    std::uint64_t s = key;
    for (auto& w : r.s_) w = splitmix64_next(s);
    if ((r.s_[0] | r.s_[1] | r.s_[2] | r.s_[3]) == 0) r.s_[0] = 1;
    return r;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double u01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unit-rate exponential, strictly positive.
  double exponential() {
    double u;
    do {
      u = u01();
    } while (u == 0.0);
    return -std::log1p(-u);
  }

  // Standard normal via Box-Muller (no spare cached).
  double normal() {
    double u;
    do {
      u = u01();
    } while (u == 0.0);
    const double v = u01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586476925286766559 * v);
  }

  // Uniform integer in [0, n), n >= 1. Bias below n / 2^64.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4] = {1, 2, 3, 4};
};

inline Rng derive_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t key = seed;
  key = mix64(key ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
  key = mix64(key ^ (0xd1b54a32d192ed03ULL * (index + 1)));
  return Rng::from_key(key);
}

// Reserved stream ids; keeping phases on distinct streams makes them
// independent under a shared base seed.
inline constexpr std::uint64_t kStreamMain = 0;
inline constexpr std::uint64_t kStreamMu = 1;
inline constexpr std::uint64_t kStreamResample = 2;

}  // namespace gglab
