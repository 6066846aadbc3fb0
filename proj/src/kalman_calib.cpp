#include "odeconv/kalman_calib.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <future>
#include <limits>

#include "odeconv/normal.hpp"
#include "odeconv/optimizer.hpp"
#include "odeconv/polytope.hpp"

namespace odeconv {

void stationary_init(const CalibParams& p, Vec& mean, Mat& cov) {
  mean = p.lambda_vec / (1.0 - p.rho_calib);
  Vec qd = p.phi_scale * p.lambda_vec.array().pow(p.tau_calib).matrix();
  cov = Mat((qd / (1.0 - p.rho_calib * p.rho_calib)).asDiagonal());
}

KalmanResult kalman_filter(const FlowSeries& y, const RoutingMatrix& A,
                           const CalibParams& params, const Vec& init_mean,
                           const Mat& init_cov) {
  const int T = y.T();
  const int m = A.n_links();
  const int n = A.n_od();
  if (y.dim() != m) throw UsageError("kalman_filter: series/link mismatch");
  if (init_mean.size() != n) throw UsageError("kalman_filter: init size");
  const Mat& H = A.entries;
  const double rho = params.rho_calib;
  Vec qd = params.phi_scale *
           params.lambda_vec.array().pow(params.tau_calib).matrix();

  KalmanResult kr;
  kr.filt_mean.resize(T, n);
  kr.pred_mean.resize(T, n);
  kr.innov_mean.resize(T, m);
  kr.filt_cov.assign(T, Mat());
  kr.pred_cov.assign(T, Mat());
  kr.innov_cov.assign(T, Mat());

  Vec mp = init_mean;
  Mat Pp = init_cov;
  const Mat Rm = params.sigma2_obs * Mat::Identity(m, m);
  double ll = 0.0;
  for (int t = 0; t < T; ++t) {
    kr.pred_mean.row(t) = mp.transpose();
    kr.pred_cov[t] = Pp;
    Mat PHt = Pp * H.transpose();
    Mat S = H * PHt + Rm;
    Vec yhat = H * mp;
    kr.innov_mean.row(t) = yhat.transpose();
    kr.innov_cov[t] = S;
    Eigen::LLT<Mat> llt(S);
    bool pd = llt.info() == Eigen::Success;
    for (int i = 0; pd && i < m; ++i) {
      double lii = llt.matrixL()(i, i);
      if (!(lii > 0.0) || !std::isfinite(lii)) pd = false;
    }
    if (!pd) {
      throw NumericalError("kalman_filter: innovation covariance not PD at t=" +
                               std::to_string(t + 1),
                           t + 1);
    }
    Vec v = y.values.row(t).transpose() - yhat;
    Vec alpha = llt.matrixL().solve(v);
    double logdet = 0.0;
    for (int i = 0; i < m; ++i) logdet += std::log(llt.matrixL()(i, i));
    ll += -0.5 * alpha.squaredNorm() - logdet - 0.5 * m * kLog2Pi;
    Mat K = llt.solve(PHt.transpose()).transpose();  // n x m gain
    Vec mf = mp + K * v;
    Mat Pf = Pp - K * H * Pp;
    Pf = 0.5 * (Pf + Pf.transpose());  // keep symmetric
    kr.filt_mean.row(t) = mf.transpose();
    kr.filt_cov[t] = Pf;
    mp = rho * mf + params.lambda_vec;
    Pp = rho * rho * Pf;
    Pp.diagonal() += qd;
  }
  kr.loglik = ll;
  return kr;
}

SmoothResult kalman_smoother(const KalmanResult& kr, const CalibParams& params) {
  const int T = static_cast<int>(kr.filt_mean.rows());
  SmoothResult sr;
  sr.mean = kr.filt_mean;
  sr.cov = kr.filt_cov;
  const double rho = params.rho_calib;
  for (int t = T - 2; t >= 0; --t) {
    // J = rho * Pf_t * inv(Pp_{t+1})
    Eigen::LDLT<Mat> ldlt(kr.pred_cov[t + 1]);
    Mat J = rho * ldlt.solve(kr.filt_cov[t]).transpose();
    sr.mean.row(t) =
        kr.filt_mean.row(t) +
        (J * (sr.mean.row(t + 1) - kr.pred_mean.row(t + 1)).transpose())
            .transpose();
    Mat dP = sr.cov[t + 1] - kr.pred_cov[t + 1];
    sr.cov[t] = kr.filt_cov[t] + J * dP * J.transpose();
    sr.cov[t] = 0.5 * (sr.cov[t] + sr.cov[t].transpose());
  }
  return sr;
}

double marginal_loglik(const FlowSeries& y, const RoutingMatrix& A,
                       const CalibParams& params) {
  if (y.T() < 2) throw UsageError("marginal_loglik: window length >= 2 required");
  Vec mean;
  Mat cov;
  stationary_init(params, mean, cov);
  return kalman_filter(y, A, params, mean, cov).loglik;
}

FitResult fit_window(const FlowSeries& yw, const RoutingMatrix& A,
                     const CalibParams& params0, const FitOptions& opts) {
  const int n = A.n_od();
  auto objective = [&](const Vec& z) {
    CalibParams p = params0;
    p.lambda_vec = z.head(n).array().exp().matrix();
    p.phi_scale = std::exp(z(n));
    if (!p.lambda_vec.allFinite() || !std::isfinite(p.phi_scale)) {
      return std::numeric_limits<double>::infinity();
    }
    try {
      return -marginal_loglik(yw, A, p);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  Vec z0(n + 1);
  for (int i = 0; i < n; ++i) {
    z0(i) = std::log(std::max(params0.lambda_vec(i), 1e-4));
  }
  z0(n) = std::log(std::max(params0.phi_scale, 1e-6));

  OptimOptions oo;
  oo.max_evals = opts.max_evals;
  oo.rel_tol = opts.rel_tol;
  OptimResult r = minimize(objective, z0, oo);

  FitResult fr;
  fr.params = params0;
  fr.params.lambda_vec = r.x.head(n).array().exp().matrix();
  fr.params.phi_scale = std::exp(r.x(n));
  fr.loglik = -r.f;
  fr.converged = r.converged;
  fr.evals = r.evals;
  return fr;
}

CalibEstimates run_calibration(const FlowSeries& y, const RoutingMatrix& A,
                               const CalibConfig& config) {
  const int T = y.T();
  const int n = A.n_od();
  const int W = config.window;
  if (T < W) throw UsageError("run_calibration: series shorter than window");
  const int n_windows = T - W + 1;
  const int half = W / 2;

  auto window_series = [&](int s) {
    FlowSeries w;
    w.values = y.values.middleRows(s, W);
    w.interval_seconds = y.interval_seconds;
    w.names = y.names;
    return w;
  };
  auto default_start = [&](int s) {
    Vec ybar = y.values.middleRows(s, W).colwise().mean().transpose();
    FeasiblePoint fp = feasible_start(A, ybar);
    CalibParams p;
    p.rho_calib = config.rho_calib;
    p.sigma2_obs = config.sigma2_obs;
    p.tau_calib = config.tau_calib;
    p.lambda_vec =
        ((1.0 - config.rho_calib) * fp.x).cwiseMax(1e-3);
    p.phi_scale = 0.3;
    return p;
  };

  FitOptions fo;
  fo.max_evals = config.max_evals;
  fo.rel_tol = config.rel_tol;

  std::vector<FitResult> fits(n_windows);
  if (config.window_mode == "parallel") {
    auto fit_one = [&](int s) { return fit_window(window_series(s), A, default_start(s), fo); };
    if (config.threads > 1) {
      std::vector<std::future<FitResult>> futs;
      futs.reserve(n_windows);
      for (int s = 0; s < n_windows; ++s) {
        futs.push_back(std::async(std::launch::async, fit_one, s));
      }
      for (int s = 0; s < n_windows; ++s) fits[s] = futs[s].get();
    } else {
      for (int s = 0; s < n_windows; ++s) fits[s] = fit_one(s);
    }
  } else if (config.window_mode == "warm") {
    CalibParams start = default_start(0);
    for (int s = 0; s < n_windows; ++s) {
      fits[s] = fit_window(window_series(s), A, start, fo);
      start = fits[s].params;  // warm start for the next window
    }
  } else {
    throw UsageError("run_calibration: window_mode must be warm or parallel");
  }

  // Smooth each window once and read off the per-time estimates.
  std::vector<SmoothResult> smooths(n_windows);
  std::vector<double> window_ll(n_windows);
  for (int s = 0; s < n_windows; ++s) {
    Vec mean;
    Mat cov;
    stationary_init(fits[s].params, mean, cov);
    KalmanResult kr = kalman_filter(window_series(s), A, fits[s].params, mean, cov);
    smooths[s] = kalman_smoother(kr, fits[s].params);
    window_ll[s] = kr.loglik;
  }

  CalibEstimates est;
  est.x_hat.resize(T, n);
  est.V_hat.resize(T, n);
  est.phi_hat.resize(T);
  est.loglik.resize(T);
  est.od_names = A.od_names;
  est.warn.assign(T, 0);
  for (int t = 0; t < T; ++t) {
    int s = std::clamp(t - half, 0, n_windows - 1);
    int tc = t - s;
    est.x_hat.row(t) = smooths[s].mean.row(tc);
    for (int i = 0; i < n; ++i) {
      est.V_hat(t, i) = std::max(smooths[s].cov[tc](i, i), 1e-300);
    }
    est.phi_hat(t) = fits[s].params.phi_scale;
    est.loglik(t) = window_ll[s];
    est.warn[t] = fits[s].converged ? 0 : 1;
  }
  est.window_fits.resize(n_windows);
  for (int s = 0; s < n_windows; ++s) {
    WindowFit& wf = est.window_fits[s];
    wf.start = s;
    wf.lambda = fits[s].params.lambda_vec;
    wf.phi = fits[s].params.phi_scale;
    wf.loglik = fits[s].loglik;
    wf.evals = fits[s].evals;
    wf.converged = fits[s].converged;
  }
  return est;
}

}  // namespace odeconv
