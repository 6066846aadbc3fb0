#pragma once

#include "odeconv/kalman_calib.hpp"
#include "odeconv/types.hpp"

namespace odeconv {

/// Per-flow, per-time regularization driving the stage-2 priors:
/// log-scale drift theta1, log-scale innovation variance theta2, and the
/// per-time dispersion anchor phi_t_hat (the Gamma prior mean).
struct RegularizationSchedule {
  Mat theta1;     // T x n_od
  Mat theta2;     // T x n_od, positive
  Vec phi_t_hat;  // T, positive
  double rho_model = 0.9;
  double tau = 2.0;
  double alpha = 2.0;

  int T() const { return static_cast<int>(theta1.rows()); }
  int n_od() const { return static_cast<int>(theta1.cols()); }
};

/// Centered running median per column; edge positions use the window
/// truncated to valid indices (an even-size truncated window takes the
/// mean of the two middle order statistics).
Mat smooth_running_median(const Mat& series, int window);

/// Turn stage-1 estimates into the schedule. Pipeline per the estimation
/// recipe: (1) project each x_hat_t onto {x >= 0, Ax = y_t} with IPFP,
/// (2) floor (floor_val <= 0 selects max(1e-3, 1e-6 * mean link load)),
/// (3) running-median smooth with window 5, then (4)
///   theta1[t] = log x_hat[t] - log x_hat[t-1]   (0 at the first time),
///   theta2[t] = (1 - rho^2) * log(1 + V_hat[t] / x_hat[t]^2).
/// phi_t_hat is copied from the stage-1 phi_hat.
RegularizationSchedule compute_schedule(const CalibEstimates& estimates,
                                        const RoutingMatrix& A,
                                        const FlowSeries& y, double rho_model,
                                        double alpha, double floor_val = 0.0,
                                        double tau = 2.0,
                                        double ipfp_tol = 1e-9,
                                        int ipfp_max_iter = 300);

/// Uninformative baseline: theta1 = 0, theta2 = log(5)/2 everywhere;
/// phi_t_hat is the configured default (log 2 unless overridden).
RegularizationSchedule naive_schedule(int n_od, int T, double alpha,
                                      double naive_phi = 0.6931471805599453,
                                      double rho_model = 0.9, double tau = 2.0);

}  // namespace odeconv
