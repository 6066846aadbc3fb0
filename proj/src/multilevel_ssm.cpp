#include "odeconv/multilevel_ssm.hpp"

#include <cmath>
#include <limits>

#include "odeconv/net_model.hpp"
#include "odeconv/normal.hpp"
#include "odeconv/rng.hpp"

namespace odeconv {

double lambda_transition_logpdf(const Vec& lambda_t, const Vec& lambda_prev,
                                const Vec& theta1_t, const Vec& theta2_t,
                                double rho) {
  double lp = 0.0;
  for (int i = 0; i < lambda_t.size(); ++i) {
    double ll = std::log(lambda_t(i));
    double mu = rho * std::log(lambda_prev(i)) + theta1_t(i);
    double v = theta2_t(i);
    double r = ll - mu;
    lp += -0.5 * (kLog2Pi + std::log(v)) - 0.5 * r * r / v - ll;
  }
  return lp;
}

double emission_logpdf(const Vec& x, const Vec& lambda, double phi, double tau) {
  const double ephi_m1 = std::expm1(phi);
  double lp = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    double sd = std::sqrt(std::pow(lambda(i), tau) * ephi_m1);
    double z = (x(i) - lambda(i)) / sd;
    // Normalizer: P(N(lambda, sd^2) > 0) = Phi(lambda/sd). For
    // lambda/sd > 8 the correction is below 1e-15 and log_norm_cdf
    // returns a negligible value anyway, so no special-casing is needed.
    lp += -0.5 * (kLog2Pi + z * z) - std::log(sd) - log_norm_cdf(lambda(i) / sd);
  }
  return lp;
}

double phi_prior_logpdf(double phi, double alpha, double beta_t) {
  if (phi <= 0.0) return -std::numeric_limits<double>::infinity();
  double scale = beta_t / alpha;
  return (alpha - 1.0) * std::log(phi) - phi / scale -
         alpha * std::log(scale) - std::lgamma(alpha);
}

SimResult simulate(const RoutingMatrix& A, const RegularizationSchedule& sched,
                   const ModelParams& params, int T, std::uint64_t seed,
                   const Vec& lambda0_override) {
  const int n = A.n_od();
  if (sched.T() < T || sched.n_od() != n) {
    throw UsageError("simulate: schedule does not cover the requested run");
  }
  RngStream rng(seed);
  Vec lambda(n);
  if (lambda0_override.size() > 0) {
    if (lambda0_override.size() != n) {
      throw UsageError("simulate: lambda0_override size mismatch");
    }
    lambda = lambda0_override;
  } else {
    for (int i = 0; i < n; ++i) {
      lambda(i) = std::exp(std::log(params.lambda0_mean) +
                           params.lambda0_sd * rng.normal());
    }
  }

  SimResult out;
  out.x.values.resize(T, n);
  out.x.names = A.od_names;
  out.lambda_path.resize(T, n);
  out.phi_path.resize(T);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) {
      double eps = sched.theta1(t, i) +
                   std::sqrt(sched.theta2(t, i)) * rng.normal();
      lambda(i) = std::exp(params.rho_model * std::log(lambda(i)) + eps);
    }
    double phi = rng.gamma(params.alpha, sched.phi_t_hat(t) / params.alpha);
    const double ephi_m1 = std::expm1(phi);
    for (int i = 0; i < n; ++i) {
      double sd = std::sqrt(std::pow(lambda(i), params.tau) * ephi_m1);
      out.x.values(t, i) = truncnorm_sample(lambda(i), sd, rng);
    }
    out.lambda_path.row(t) = lambda.transpose();
    out.phi_path(t) = phi;
  }
  out.y = aggregate(out.x, A);
  return out;
}

}  // namespace odeconv
