#pragma once

#include <cstdint>

#include "odeconv/types.hpp"

namespace odeconv {

/// Stage-1 Gaussian state-space parameters:
///   x_t = rho * x_{t-1} + lambda + e_t,  e_t ~ N(0, phi * diag(lambda)^tau)
///   y_t = A x_t + eps_t,                 eps_t ~ N(0, sigma2 * I)
/// The constant drift is the textbook augmented-state form with the
/// appended constant coordinate carried implicitly (it has no noise and
/// identity dynamics, so its moments never change).
struct CalibParams {
  double rho_calib = 0.1;
  double sigma2_obs = 0.01;
  Vec lambda_vec;          // positive, length n_od
  double phi_scale = 0.0;  // positive
  double tau_calib = 2.0;
};

/// Filter pass output: one-step-ahead (predicted) and filtered moments
/// plus the innovation moments needed for the marginal likelihood.
struct KalmanResult {
  Mat filt_mean;                 // T x n
  std::vector<Mat> filt_cov;     // T of n x n
  Mat pred_mean;                 // T x n (state prediction before update)
  std::vector<Mat> pred_cov;     // T of n x n
  Mat innov_mean;                // T x m (predicted observation y_hat)
  std::vector<Mat> innov_cov;    // T of m x m
  double loglik = 0.0;           // Gaussian prediction-error log-likelihood
};

struct SmoothResult {
  Mat mean;               // T x n
  std::vector<Mat> cov;   // T of n x n
};

/// Stationary initial distribution of the state under params:
/// mean lambda/(1-rho), covariance phi*diag(lambda^tau)/(1-rho^2).
void stationary_init(const CalibParams& params, Vec& mean, Mat& cov);

/// Standard Kalman recursion. The initial distribution is the marginal
/// of x_1 itself: the t=1 update conditions (init_mean, init_cov) on y_1
/// directly, and transitions start at t=2.
KalmanResult kalman_filter(const FlowSeries& y, const RoutingMatrix& A,
                           const CalibParams& params, const Vec& init_mean,
                           const Mat& init_cov);

/// Fixed-interval (backward recursion) smoother.
SmoothResult kalman_smoother(const KalmanResult& kr, const CalibParams& params);

/// Gaussian prediction-error log-likelihood of the window under params,
/// with the stationary initial distribution:
///   sum_t [ -(m/2) log 2pi - (1/2) log|S_t| - (1/2) v_t' S_t^{-1} v_t ].
double marginal_loglik(const FlowSeries& y, const RoutingMatrix& A,
                       const CalibParams& params);

struct FitOptions {
  int max_evals = 500;
  double rel_tol = 1e-8;
};

struct FitResult {
  CalibParams params;
  double loglik = 0.0;
  bool converged = true;  // false = budget exhausted, best-found returned
  int evals = 0;
};

/// Maximize marginal_loglik over (lambda_vec, phi_scale) with rho,
/// sigma2, tau held fixed; unconstrained quasi-Newton over the logs with
/// numerical gradients. Guarantee: returned loglik >= loglik(params0) - 1e-6.
FitResult fit_window(const FlowSeries& yw, const RoutingMatrix& A,
                     const CalibParams& params0, const FitOptions& opts = {});

/// One fitted window in the sliding-window pass.
struct WindowFit {
  int start = 0;  // first time index (0-based) covered by the window
  Vec lambda;
  double phi = 0.0;
  double loglik = 0.0;
  int evals = 0;
  bool converged = true;
};

/// Windowed-estimation output: smoothed per-OD means/variances with the
/// per-window scale estimate, indexed by original time.
struct CalibEstimates {
  Mat x_hat;   // T x n_od smoothed means
  Mat V_hat;   // T x n_od smoothed variances (positive)
  Vec phi_hat; // per-time scale estimate (from the window used at t)
  Vec loglik;  // per-time window log-likelihood
  std::vector<std::string> od_names;
  std::vector<std::uint8_t> warn;  // per-time: optimizer budget exhausted
  std::vector<WindowFit> window_fits;  // per-window parameter log
};

struct CalibConfig {
  int window = 23;
  double rho_calib = 0.1;
  double sigma2_obs = 0.01;
  double tau_calib = 2.0;
  int max_evals = 500;
  double rel_tol = 1e-8;
  // "warm": slide left to right, starting each fit from the previous
  // window's solution (faster). "parallel": every window fits from the
  // common default start (its own window-mean IPFP point), so window
  // fits are order-independent and may run concurrently.
  std::string window_mode = "warm";
  int threads = 1;  // used by parallel mode
};

/// Sliding-window ML estimation (stride 1). The estimate at time t comes
/// from the window centered at t (edge times use the nearest full
/// window), read at t's offset inside that window. The default start for
/// a window is lambda = (1-rho) * ipfp(window-mean y), phi = 0.3.
CalibEstimates run_calibration(const FlowSeries& y, const RoutingMatrix& A,
                               const CalibConfig& config);

}  // namespace odeconv
