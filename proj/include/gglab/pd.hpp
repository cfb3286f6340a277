// Poisson-Dirichlet PD(zeta) weight sequences.
//
// Sampling uses the arrival-time inversion of the Poisson point process with
// intensity x^(-1-zeta) dx: u_k = (zeta * G_k)^(-1/zeta) where G_k is the sum
// of the first k unit-rate exponentials. The u_k come out already sorted
// decreasing; normalizing the first K of them gives the truncated weight
// vector. Everything runs in log space until the final normalization.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "gglab/math.hpp"

namespace gglab {

struct ZetaParam {
  double zeta;

  explicit ZetaParam(double z) : zeta(z) {
    if (!(z > 0.0) || !(z < 1.0))
      throw std::invalid_argument("ZetaParam: zeta must lie in (0, 1)");
  }
};

// Truncated, normalized, nonincreasing PD(zeta) weight sequence.
// tail_mass_estimate is the expected unnormalized mass below the K-th point,
// u_K^(1-zeta) / (1-zeta), relative to the retained mass; it is a diagnostic
// and is never folded back into the weights.
struct WeightVector {
  std::vector<double> weights;
  double tail_mass_estimate = 0.0;
  double zeta = 0.0;

  std::size_t truncation() const { return weights.size(); }
};

// Log points of the Poisson process with intensity x^(-1-zeta) dx, largest
// first: log u_k = -(log zeta + log Gamma_k) / zeta.
template <class Rng>
std::vector<double> sample_pd_log_points(ZetaParam zeta, std::size_t k_atoms, Rng& rng) {
  const double z = zeta.zeta;
  std::vector<double> log_u(k_atoms);
  double gamma = 0.0;
  for (std::size_t k = 0; k < k_atoms; ++k) {
    gamma += rng.exponential();
    log_u[k] = -(std::log(z) + std::log(gamma)) / z;
  }
  return log_u;
}

template <class Rng>
WeightVector sample_pd(ZetaParam zeta, std::size_t k_atoms, Rng& rng) {
  if (k_atoms < 2) throw std::invalid_argument("sample_pd: K must be >= 2");
  const double z = zeta.zeta;
  const std::vector<double> log_u = sample_pd_log_points(zeta, k_atoms, rng);
  const double lse = log_sum_exp(log_u);

  WeightVector out;
  out.zeta = z;
  out.weights.resize(k_atoms);
  double sum = 0.0;
  for (std::size_t k = 0; k < k_atoms; ++k) {
    out.weights[k] = std::exp(log_u[k] - lse);
    sum += out.weights[k];
  }
  for (double& w : out.weights) w /= sum;
  out.tail_mass_estimate = std::exp((1.0 - z) * log_u.back() - std::log1p(-z) - lse);
  return out;
}

struct MomentEstimate {
  double estimate = 0.0;
  double se = 0.0;
  std::uint64_t n_samples = 0;
  double mean_tail_mass = 0.0;
};

// Monte Carlo mean of sum_l v_l^2 with a batch-means standard error.
// With tail_corrected set, each draw is renormalized by the estimated
// unretained mass, removing the O(tail) upward truncation bias; the plain
// estimator matches the K-atom measure actually used downstream.
template <class Rng>
MomentEstimate second_moment(ZetaParam zeta, std::size_t k_atoms, std::uint64_t n_samples,
                             Rng& rng, bool tail_corrected = false,
                             std::uint32_t n_batches = 32) {
  if (n_samples < 100) throw std::invalid_argument("second_moment: need n_samples >= 100");
  if (n_batches < 2 || n_samples < n_batches)
    throw std::invalid_argument("second_moment: bad batch count");
  const std::uint64_t per = n_samples / n_batches;
  const std::uint64_t used = per * n_batches;

  std::vector<double> batch_means(n_batches, 0.0);
  double tail_sum = 0.0;
  for (std::uint32_t b = 0; b < n_batches; ++b) {
    double s = 0.0;
    for (std::uint64_t i = 0; i < per; ++i) {
      const WeightVector w = sample_pd(zeta, k_atoms, rng);
      double m2 = 0.0;
      for (double v : w.weights) m2 += v * v;
      if (tail_corrected) m2 /= sq(1.0 + w.tail_mass_estimate);
      s += m2;
      tail_sum += w.tail_mass_estimate;
    }
    batch_means[b] = s / static_cast<double>(per);
  }
  double mean = 0.0;
  for (double m : batch_means) mean += m;
  mean /= n_batches;
  double var = 0.0;
  for (double m : batch_means) var += sq(m - mean);
  var /= (n_batches - 1);

  MomentEstimate est;
  est.estimate = mean;
  est.se = std::sqrt(var / n_batches);
  est.n_samples = used;
  est.mean_tail_mass = tail_sum / static_cast<double>(used);
  return est;
}

}  // namespace gglab
