#pragma once

#include <cmath>

#include "odeconv/rng.hpp"

namespace odeconv {

inline constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)

inline double norm_pdf(double z) {
  return std::exp(-0.5 * z * z - 0.5 * kLog2Pi);
}

/// Standard normal CDF.
inline double norm_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

/// log(Phi(z)), stable over the whole real line. For deep lower tails
/// erfc underflows, so an asymptotic expansion takes over.
inline double log_norm_cdf(double z) {
  if (z >= 8.0) {
    // Phi(z) is 1 - tiny; log1p on the complement keeps full precision.
    return std::log1p(-0.5 * std::erfc(z * M_SQRT1_2));
  }
  if (z > -37.0) {
    return std::log(0.5 * std::erfc(-z * M_SQRT1_2));
  }
  // Mills-ratio expansion: Phi(z) ~ phi(z)/(-z) * (1 - 1/z^2 + 3/z^4 - ...)
  double z2 = z * z;
  double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - 0.5 * kLog2Pi - std::log(-z) + std::log(series);
}

/// Mean of N(mu, sigma^2) truncated to (0, inf):
///   mu + sigma * phi(a) / Phi(-a),  a = -mu/sigma.
inline double truncnorm_mean(double mu, double sigma) {
  double a = -mu / sigma;
  double log_tail = log_norm_cdf(-a);  // log P(Z > a)
  return mu + sigma * std::exp(std::log(norm_pdf(a) + 1e-300) - log_tail);
}

/// Draw from N(mu, sigma^2) truncated to (0, inf).
///
/// Uses plain rejection from the untruncated normal while the acceptance
/// probability Phi(mu/sigma) is at least 5%; below that it switches to a
/// one-sided shifted-exponential tail sampler (exact in both regimes).
inline double truncnorm_sample(double mu, double sigma, RngStream& rng) {
  double a = -mu / sigma;  // standardized lower bound: Z > a
  if (a <= 1.6448536269514722) {  // Phi(-a) = P(accept) >= 0.05
    for (;;) {
      double v = mu + sigma * rng.normal();
      if (v > 0.0) return v;
    }
  }
  // Exponential-proposal tail sampler for Z > a with a > 0
  // (Robert-style): rate lam = (a + sqrt(a^2 + 4)) / 2.
  double lam = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    double z = a + rng.exponential(lam);
    double diff = z - lam;
    if (std::log(rng.uniform() + 1e-300) <= -0.5 * diff * diff) {
      return mu + sigma * z;
    }
  }
}

}  // namespace odeconv
