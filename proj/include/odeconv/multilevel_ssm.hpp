#pragma once

#include <cstdint>

#include "odeconv/regularizer.hpp"
#include "odeconv/types.hpp"

namespace odeconv {

/// Multilevel generative model:
///   log lambda_{i,t} = rho * log lambda_{i,t-1} + eps_{i,t},
///       eps_{i,t} ~ N(theta1_{i,t}, theta2_{i,t})
///   phi_t ~ Gamma(alpha, beta_t / alpha)          (mean beta_t)
///   x_{i,t} | lambda, phi ~ TruncNormal_(0,inf)(lambda_i,
///                                lambda_i^tau * (exp(phi_t) - 1))
///   y_t = A x_t.
struct ModelParams {
  double rho_model = 0.9;
  double tau = 2.0;
  double alpha = 2.0;
  double lambda0_mean = 1.0;  // log-normal prior median for lambda_{i,0}
  double lambda0_sd = 2.0;    // log-scale sd ("diffuse")
};

struct LatentState {
  Vec lambda;      // positive
  double phi = 0;  // positive
  Vec x;           // nonnegative
};

/// Log-density of lambda_t given lambda_{t-1} (in lambda space: the
/// Gaussian on log lambda plus the change-of-variables Jacobian
/// -sum log lambda_t).
double lambda_transition_logpdf(const Vec& lambda_t, const Vec& lambda_prev,
                                const Vec& theta1_t, const Vec& theta2_t,
                                double rho);

/// Sum of truncated-normal log-densities of x given (lambda, phi); each
/// coordinate is N(lambda_i, lambda_i^tau (e^phi - 1)) truncated to
/// (0, inf), with the normalizing constant included.
double emission_logpdf(const Vec& x, const Vec& lambda, double phi, double tau);

/// Gamma(shape alpha, scale beta_t/alpha) log-density (mean beta_t).
double phi_prior_logpdf(double phi, double alpha, double beta_t);

struct SimResult {
  FlowSeries x;      // T x n_od latent truth
  Mat lambda_path;   // T x n_od
  Vec phi_path;      // T
  FlowSeries y;      // T x n_links observed
};

/// Forward-simulate T steps of the model on topology A under the given
/// schedule. lambda_0 is drawn from the log-normal prior unless
/// lambda0_override (per-OD positive vector) is supplied. Reproducible
/// from the seed.
SimResult simulate(const RoutingMatrix& A, const RegularizationSchedule& sched,
                   const ModelParams& params, int T, std::uint64_t seed,
                   const Vec& lambda0_override = Vec());

}  // namespace odeconv
