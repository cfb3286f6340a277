// Reproducible parallel outer-expectation estimation.
//
// Samples are keyed by index: sample i always runs on the stream
// derive_stream(seed, kStreamMain, i), and batches are contiguous index
// ranges processed start-to-end by a single worker. Workers pull whole
// batches from an atomic queue, so the result is a pure function of
// (config, sampler) and identical for any worker count.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "gglab/math.hpp"
#include "gglab/rng.hpp"

namespace gglab {

struct EstimatorConfig {
  std::uint64_t n_outer = 100000;
  std::uint32_t n_batches = 32;
  std::uint64_t seed = 1;
  std::uint32_t workers = 1;
  double z_max = 4.0;
  std::size_t truncation = 4096;        // PD atoms per weight vector
  std::size_t leaf_budget = 4096;       // cascade leaves per build
  std::uint64_t stream = kStreamMain;   // stream id for per-sample derivation

  void validate() const {
    if (n_batches < 2) throw std::invalid_argument("EstimatorConfig: need n_batches >= 2");
    if (n_outer < n_batches || n_outer % n_batches != 0)
      throw std::invalid_argument("EstimatorConfig: n_outer must be a positive multiple of n_batches");
    if (workers < 1) throw std::invalid_argument("EstimatorConfig: need workers >= 1");
  }
};

struct BatchSeries {
  std::vector<double> batch_means;
  double mean = 0.0;
  double se = 0.0;

  void finalize() {
    const std::size_t b = batch_means.size();
    mean = 0.0;
    for (double m : batch_means) mean += m;
    mean /= static_cast<double>(b);
    double var = 0.0;
    for (double m : batch_means) var += sq(m - mean);
    var /= static_cast<double>(b - 1);
    se = std::sqrt(var / static_cast<double>(b));
  }
};

namespace detail {

// Runs sampler(rng, out) for every sample index, accumulating per-batch sums
// of the width-sized output vector. Deterministic for any worker count.
template <class Sampler>
std::vector<std::vector<double>> run_batches(std::size_t width, Sampler&& sampler,
                                             const EstimatorConfig& cfg) {
  cfg.validate();
  const std::uint64_t per = cfg.n_outer / cfg.n_batches;
  std::vector<std::vector<double>> sums(cfg.n_batches, std::vector<double>(width, 0.0));

  auto run_batch = [&](std::uint32_t b) {
    std::vector<double> out(width);
    std::vector<double> acc(width, 0.0);
    for (std::uint64_t i = b * per; i < (b + 1) * per; ++i) {
      Rng rng = derive_stream(cfg.seed, cfg.stream, i);
      sampler(rng, std::span<double>(out));
      for (std::size_t k = 0; k < width; ++k) acc[k] += out[k];
    }
    sums[b] = std::move(acc);
  };

  const std::uint32_t workers = std::min<std::uint32_t>(cfg.workers, cfg.n_batches);
  if (workers <= 1) {
    for (std::uint32_t b = 0; b < cfg.n_batches; ++b) run_batch(b);
  } else {
    std::atomic<std::uint32_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::uint32_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::uint32_t b = next.fetch_add(1);
          if (b >= cfg.n_batches) return;
          run_batch(b);
        }
      });
    for (auto& t : pool) t.join();
  }
  return sums;
}

}  // namespace detail

// Componentwise batch-means statistics of a vector-valued sampler.
template <class Sampler>
std::vector<BatchSeries> run_vector(std::size_t width, Sampler&& sampler,
                                    const EstimatorConfig& cfg) {
  const auto sums = detail::run_batches(width, std::forward<Sampler>(sampler), cfg);
  const double per = static_cast<double>(cfg.n_outer / cfg.n_batches);
  std::vector<BatchSeries> series(width);
  for (std::size_t k = 0; k < width; ++k) {
    series[k].batch_means.resize(cfg.n_batches);
    for (std::uint32_t b = 0; b < cfg.n_batches; ++b) series[k].batch_means[b] = sums[b][k] / per;
    series[k].finalize();
  }
  return series;
}

struct PairedStats {
  BatchSeries lhs;
  BatchSeries rhs;
  BatchSeries diff;  // batch means of lhs - rhs
};

// Paired estimation with common random numbers: the sampler produces both
// sides from one stream, so the difference is estimated far more tightly
// than either side.
template <class Sampler>
PairedStats run_paired(Sampler&& sampler, const EstimatorConfig& cfg) {
  auto wrapped = [&sampler](Rng& rng, std::span<double> out) {
    const auto [l, r] = sampler(rng);
    out[0] = l;
    out[1] = r;
  };
  const auto sums = detail::run_batches(2, wrapped, cfg);
  const double per = static_cast<double>(cfg.n_outer / cfg.n_batches);
  PairedStats s;
  s.lhs.batch_means.resize(cfg.n_batches);
  s.rhs.batch_means.resize(cfg.n_batches);
  s.diff.batch_means.resize(cfg.n_batches);
  for (std::uint32_t b = 0; b < cfg.n_batches; ++b) {
    s.lhs.batch_means[b] = sums[b][0] / per;
    s.rhs.batch_means[b] = sums[b][1] / per;
    s.diff.batch_means[b] = (sums[b][0] - sums[b][1]) / per;
  }
  s.lhs.finalize();
  s.rhs.finalize();
  s.diff.finalize();
  return s;
}

}  // namespace gglab
