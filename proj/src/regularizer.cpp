#include "odeconv/regularizer.hpp"

#include <algorithm>
#include <cmath>

#include "odeconv/polytope.hpp"

namespace odeconv {

namespace {

double median_of(std::vector<double>& buf) {
  size_t k = buf.size() / 2;
  std::nth_element(buf.begin(), buf.begin() + k, buf.end());
  double hi = buf[k];
  if (buf.size() % 2 == 1) return hi;
  double lo = *std::max_element(buf.begin(), buf.begin() + k);
  return 0.5 * (lo + hi);
}

}  // namespace

Mat smooth_running_median(const Mat& series, int window) {
  const int T = static_cast<int>(series.rows());
  const int d = static_cast<int>(series.cols());
  if (window < 1 || window % 2 == 0 || window > T) {
    throw UsageError("smooth_running_median: window must be odd, in [1, T]");
  }
  if (window == 1) return series;
  const int half = window / 2;
  Mat out(T, d);
  std::vector<double> buf;
  for (int j = 0; j < d; ++j) {
    for (int t = 0; t < T; ++t) {
      int lo = std::max(0, t - half);
      int hi = std::min(T - 1, t + half);
      buf.clear();
      for (int s = lo; s <= hi; ++s) buf.push_back(series(s, j));
      out(t, j) = median_of(buf);
    }
  }
  return out;
}

RegularizationSchedule compute_schedule(const CalibEstimates& estimates,
                                        const RoutingMatrix& A,
                                        const FlowSeries& y, double rho_model,
                                        double alpha, double floor_val,
                                        double tau, double ipfp_tol,
                                        int ipfp_max_iter) {
  const int T = static_cast<int>(estimates.x_hat.rows());
  const int n = static_cast<int>(estimates.x_hat.cols());
  if (y.T() != T || y.dim() != A.n_links() || n != A.n_od()) {
    throw UsageError("compute_schedule: dimension mismatch");
  }
  if (floor_val <= 0.0) {
    floor_val = std::max(1e-3, 1e-6 * y.values.mean());
  }

  // (1) project every x_hat_t onto its observed-feasibility polytope;
  // (2) floor; (3) running-median smooth.
  Mat xp(T, n);
  for (int t = 0; t < T; ++t) {
    Vec x0 = estimates.x_hat.row(t).transpose().cwiseMax(1e-6);
    FeasiblePoint fp = ipfp_project(x0, A, y.values.row(t).transpose(),
                                    ipfp_tol, ipfp_max_iter);
    xp.row(t) = fp.x.transpose();
  }
  xp = xp.cwiseMax(floor_val);
  int w = std::min(5, T);
  if (w % 2 == 0) --w;  // short series: largest odd window that fits
  Mat xs = smooth_running_median(xp, w).cwiseMax(floor_val);

  RegularizationSchedule sched;
  sched.rho_model = rho_model;
  sched.tau = tau;
  sched.alpha = alpha;
  sched.theta1 = Mat::Zero(T, n);
  sched.theta2.resize(T, n);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) {
      if (t > 0) {
        sched.theta1(t, i) = std::log(xs(t, i)) - std::log(xs(t - 1, i));
      }
      double ratio = estimates.V_hat(t, i) / (xs(t, i) * xs(t, i));
      sched.theta2(t, i) =
          (1.0 - rho_model * rho_model) * std::log1p(ratio);
    }
  }
  sched.phi_t_hat = estimates.phi_hat;
  return sched;
}

RegularizationSchedule naive_schedule(int n_od, int T, double alpha,
                                      double naive_phi, double rho_model,
                                      double tau) {
  RegularizationSchedule sched;
  sched.rho_model = rho_model;
  sched.tau = tau;
  sched.alpha = alpha;
  sched.theta1 = Mat::Zero(T, n_od);
  sched.theta2 = Mat::Constant(T, n_od, std::log(5.0) / 2.0);
  sched.phi_t_hat = Vec::Constant(T, naive_phi);
  return sched;
}

}  // namespace odeconv
