#include "odeconv/sirm_filter.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "odeconv/normal.hpp"

namespace odeconv {

double ess_from_log_weights(const Vec& log_weights) {
  double mx = log_weights.maxCoeff();
  if (!std::isfinite(mx)) return 1.0;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < log_weights.size(); ++i) {
    double w = std::exp(log_weights(i) - mx);
    s1 += w;
    s2 += w * w;
  }
  return (s1 * s1) / s2;
}

std::vector<int> systematic_resample_indices(const Vec& norm_weights,
                                             double u0) {
  const int n = static_cast<int>(norm_weights.size());
  std::vector<int> idx(n);
  double cum = norm_weights(0);
  int j = 0;
  for (int k = 0; k < n; ++k) {
    double u = (u0 + k) / n;
    while (u > cum && j < n - 1) {
      ++j;
      cum += norm_weights(j);
    }
    idx[k] = j;
  }
  return idx;
}

namespace detail {

SirmRunner::SirmRunner(const RoutingMatrix& A,
                       const RegularizationSchedule& sched,
                       const ModelParams& params, const SirmConfig& config)
    : A_(A),
      sched_(sched),
      params_(params),
      cfg_(config),
      decomp_(decompose(A)),
      rng_(config.seed),
      step_lambda_(Vec::Constant(A.n_od(), config.step_lambda0)),
      step_phi_(config.step_phi0) {
  const int N = cfg_.n_particles;
  const int n = A_.n_od();
  ens_.lambda.resize(N, n);
  ens_.phi.resize(N);
  ens_.x.resize(N, n);
  ens_.lambda_prev.resize(N, n);
  ens_.log_weights = Vec::Zero(N);
}

double SirmRunner::emission_lp_coord(double x, double lambda, double phi) const {
  if (cfg_.surrogate_emission) {
    double s = cfg_.surrogate_sd;
    double z = (std::log(std::max(x, 1e-300)) - std::log(lambda)) / s;
    return -0.5 * (kLog2Pi + z * z) - std::log(s);
  }
  double sd = std::sqrt(std::pow(lambda, params_.tau) * std::expm1(phi));
  double z = (x - lambda) / sd;
  return -0.5 * (kLog2Pi + z * z) - std::log(sd) - log_norm_cdf(lambda / sd);
}

double SirmRunner::emission_lp(const Vec& x, const Vec& lambda,
                               double phi) const {
  double lp = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    lp += emission_lp_coord(x(i), lambda(i), phi);
  }
  return lp;
}

void SirmRunner::init(const Vec& y1) {
  const int N = cfg_.n_particles;
  const int n = A_.n_od();
  Vec center(n);
  if (cfg_.lambda_init_anchor) {
    FeasiblePoint fp =
        feasible_start(A_, y1, cfg_.ipfp_tol, cfg_.ipfp_max_iter);
    center = fp.x.cwiseMax(1e-3);
  } else {
    center = Vec::Constant(n, params_.lambda0_mean);
  }
  double sd = cfg_.lambda_init_anchor ? cfg_.lambda_init_sd : params_.lambda0_sd;
  RngStream rng = rng_.stream(0, 0);
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < n; ++i) {
      ens_.lambda(j, i) = std::exp(std::log(center(i)) + sd * rng.normal());
    }
  }
  ens_.t = 0;
  ens_.log_weights.setZero();
}

void SirmRunner::sample_step(const Vec& y_t, int t) {
  const int N = cfg_.n_particles;
  const int n = A_.n_od();
  const int row = t - 1;
  const double rho = sched_.rho_model;
  const double alpha = sched_.alpha;
  const double beta_t = sched_.phi_t_hat(row);

  // Shared truncated-normal proposal for x on the polytope.
  Vec mu_star(n);
  Vec lam_mean = ens_.lambda.colwise().mean().transpose();
  for (int i = 0; i < n; ++i) {
    double th1 = sched_.theta1(row, i);
    mu_star(i) = cfg_.mu_star_literal
                     ? th1 + rho * lam_mean(i)
                     : std::exp(th1) * rho * lam_mean(i);
    mu_star(i) = std::clamp(mu_star(i), 1e-9, cfg_.lambda_clip_hi);
  }
  Vec sig_star =
      (std::sqrt(std::expm1(beta_t)) * mu_star.array()).matrix();

  FeasiblePoint start =
      feasible_start(A_, y_t, cfg_.ipfp_tol, cfg_.ipfp_max_iter);
  Vec x1_0, x2_0;
  decomp_.split(start.x, x1_0, x2_0);

  auto proposal_lp_split = [&](const Vec& x1, const Vec& x2) {
    double lp = 0.0;
    for (int i = 0; i < decomp_.basic_count; ++i) {
      double z = (x1(i) - mu_star(decomp_.column_perm[i])) /
                 sig_star(decomp_.column_perm[i]);
      lp += -0.5 * z * z;
    }
    for (int i = 0; i < decomp_.free_count(); ++i) {
      int col = decomp_.column_perm[decomp_.basic_count + i];
      double z = (x2(i) - mu_star(col)) / sig_star(col);
      lp += -0.5 * z * z;
    }
    return lp;
  };
  auto proposal_lp_full = [&](const Vec& x) {
    double lp = 0.0;
    for (int i = 0; i < n; ++i) {
      double z = (x(i) - mu_star(i)) / sig_star(i);
      lp += -0.5 * z * z;
    }
    return lp;
  };

  Mat lambda_new(N, n);
  Vec phi_new(N);
  Mat x_new(N, n);
  Vec lw(N);
  RdaChain chain(decomp_);
  const double lp0 = proposal_lp_split(x1_0, x2_0);
  for (int j = 0; j < N; ++j) {
    RngStream rng = rng_.stream(t, j + 1);
    // lambda proposal == transition: LN(theta1 + rho log lambda_prev, theta2).
    double lp_lam_prop = 0.0, lp_lam_trans = 0.0;
    for (int i = 0; i < n; ++i) {
      double mu = sched_.theta1(row, i) + rho * std::log(ens_.lambda(j, i));
      double v = sched_.theta2(row, i);
      double ll = mu + std::sqrt(v) * rng.normal();
      double lam = std::clamp(std::exp(ll), cfg_.lambda_clip_lo,
                              cfg_.lambda_clip_hi);
      lambda_new(j, i) = lam;
      double lv = std::log(lam);
      double r = lv - mu;
      // Density of lambda (with Jacobian), identical for proposal and
      // transition; kept separate so a non-transition proposal stays easy.
      double dens = -0.5 * (kLog2Pi + std::log(v)) - 0.5 * r * r / v - lv;
      lp_lam_prop += dens;
      lp_lam_trans += dens;
    }
    // phi proposal == prior: Gamma(alpha, beta_t / alpha).
    double phi = std::max(rng.gamma(alpha, beta_t / alpha), 1e-12);
    phi_new(j) = phi;
    double lp_phi_prior = phi_prior_logpdf(phi, alpha, beta_t);
    double lp_phi_prop = lp_phi_prior;

    // Shared polytope proposal realized by an RDA chain from the common
    // feasible start, thinned independently per particle.
    Vec x1 = x1_0, x2 = x2_0;
    double lp = lp0;
    chain.run(x1, x2, lp, proposal_lp_split, cfg_.proposal_burnin, rng,
              cfg_.chord_correction);
    Vec xj = decomp_.unsplit(x1, x2);
    for (int i = 0; i < n; ++i) {
      if (xj(i) < 0.0) xj(i) = 0.0;  // rounding dust at active bounds
    }
    x_new.row(j) = xj.transpose();

    lw(j) = emission_lp(xj, lambda_new.row(j).transpose(), phi) +
            lp_phi_prior + lp_lam_trans - lp_lam_prop - lp_phi_prop -
            proposal_lp_full(xj);
  }

  ens_.lambda_prev = ens_.lambda;
  ens_.lambda = lambda_new;
  ens_.phi = phi_new;
  ens_.x = x_new;
  ens_.log_weights = lw;
  ens_.ess = ess_from_log_weights(lw);
  ens_.t = t;
}

void SirmRunner::resample() {
  const int N = cfg_.n_particles;
  double mx = ens_.log_weights.maxCoeff();
  if (!std::isfinite(mx)) {
    throw NumericalError("resample: all weights zero at t=" +
                             std::to_string(ens_.t),
                         ens_.t);
  }
  bool do_resample = true;
  if (cfg_.resample_mode.rfind("ess:", 0) == 0) {
    double frac = std::stod(cfg_.resample_mode.substr(4));
    do_resample = ens_.ess < frac * N;
  }
  if (!do_resample) return;
  Vec w = (ens_.log_weights.array() - mx).exp();
  w /= w.sum();
  RngStream rng = rng_.stream(ens_.t, 0, 1);
  std::vector<int> idx = systematic_resample_indices(w, rng.uniform());
  Mat lam(N, A_.n_od()), x(N, A_.n_od()), lam_prev(N, A_.n_od());
  Vec phi(N);
  for (int k = 0; k < N; ++k) {
    lam.row(k) = ens_.lambda.row(idx[k]);
    x.row(k) = ens_.x.row(idx[k]);
    lam_prev.row(k) = ens_.lambda_prev.row(idx[k]);
    phi(k) = ens_.phi(idx[k]);
  }
  ens_.lambda = std::move(lam);
  ens_.x = std::move(x);
  ens_.lambda_prev = std::move(lam_prev);
  ens_.phi = std::move(phi);
  ens_.log_weights.setZero();
}

void SirmRunner::move_step(const Vec& y_t, int t) {
  (void)y_t;  // feasibility is maintained through null-space moves
  const int N = cfg_.n_particles;
  const int n = A_.n_od();
  const int row = t - 1;
  const double rho = sched_.rho_model;
  const double alpha = sched_.alpha;
  const double beta_t = sched_.phi_t_hat(row);
  const int n_adapt = static_cast<int>(cfg_.adapt_fraction * N);

  RdaChain chain(decomp_);
  long acc_x = 0, tot_x = 0, acc_l = 0, tot_l = 0, acc_p = 0, tot_p = 0;
  Vec x1, x2, lam(n), llam(n), prop_l(n);
  for (int j = 0; j < N; ++j) {
    RngStream rng = rng_.stream(t, j + 1, 2);
    decomp_.split(ens_.x.row(j).transpose(), x1, x2);
    lam = ens_.lambda.row(j).transpose();
    double phi = ens_.phi(j);
    const bool adapting = j < n_adapt;
    for (int sweep = 0; sweep < cfg_.n_moves; ++sweep) {
      // (a) x | lambda, phi, y via one RDA step on the emission.
      auto em_split = [&](const Vec& a, const Vec& b) {
        double lp = 0.0;
        for (int i = 0; i < decomp_.basic_count; ++i) {
          lp += emission_lp_coord(a(i), lam(decomp_.column_perm[i]), phi);
        }
        for (int i = 0; i < decomp_.free_count(); ++i) {
          int col = decomp_.column_perm[decomp_.basic_count + i];
          lp += emission_lp_coord(b(i), lam(col), phi);
        }
        return lp;
      };
      if (decomp_.free_count() > 0) {
        double em_cur = em_split(x1, x2);
        acc_x += chain.run(x1, x2, em_cur, em_split, 1, rng,
                           cfg_.chord_correction);
        ++tot_x;
      }
      Vec xj = decomp_.unsplit(x1, x2);

      // (b) per-coordinate log-lambda random-walk MH against
      // transition x emission (both factorize over coordinates).
      for (int i = 0; i < n; ++i) {
        llam(i) = std::log(lam(i));
        prop_l(i) = llam(i) + step_lambda_(i) * rng.normal();
      }
      for (int i = 0; i < n; ++i) {
        double mu = sched_.theta1(row, i) +
                    rho * std::log(ens_.lambda_prev(j, i));
        double v = sched_.theta2(row, i);
        double rc = llam(i) - mu, rp = prop_l(i) - mu;
        double cur = -0.5 * rc * rc / v +
                     emission_lp_coord(xj(i), lam(i), phi);
        double lam_p = std::clamp(std::exp(prop_l(i)), cfg_.lambda_clip_lo,
                                  cfg_.lambda_clip_hi);
        double nxt = -0.5 * rp * rp / v +
                     emission_lp_coord(xj(i), lam_p, phi);
        bool accept = std::log(rng.uniform() + 1e-300) < nxt - cur;
        if (accept) {
          lam(i) = lam_p;
          ++acc_l;
        }
        ++tot_l;
        if (adapting) {
          step_lambda_(i) *= std::exp(
              cfg_.adapt_gain * ((accept ? 1.0 : 0.0) - cfg_.target_accept));
        }
      }

      // (c) phi | x, lambda via log-scale random-walk MH against
      // prior x emission (log-phi move carries a +log phi Jacobian).
      {
        double lp_cur = std::log(phi);
        double lp_new = lp_cur + step_phi_ * rng.normal();
        double phi_new = std::exp(lp_new);
        double cur = (alpha - 1.0) * lp_cur - phi * alpha / beta_t +
                     emission_lp(xj, lam, phi) + lp_cur;
        double nxt = (alpha - 1.0) * lp_new - phi_new * alpha / beta_t +
                     emission_lp(xj, lam, phi_new) + lp_new;
        bool accept = std::log(rng.uniform() + 1e-300) < nxt - cur;
        if (accept) {
          phi = phi_new;
          ++acc_p;
        }
        ++tot_p;
        if (adapting) {
          step_phi_ *= std::exp(
              cfg_.adapt_gain * ((accept ? 1.0 : 0.0) - cfg_.target_accept));
        }
      }
    }
    Vec xj = decomp_.unsplit(x1, x2);
    for (int i = 0; i < n; ++i) {
      if (xj(i) < 0.0) xj(i) = 0.0;
    }
    ens_.x.row(j) = xj.transpose();
    ens_.lambda.row(j) = lam.transpose();
    ens_.phi(j) = phi;
  }
  acc_x_ = tot_x > 0 ? static_cast<double>(acc_x) / tot_x : 1.0;
  acc_lambda_ = tot_l > 0 ? static_cast<double>(acc_l) / tot_l : 0.0;
  acc_phi_ = tot_p > 0 ? static_cast<double>(acc_p) / tot_p : 0.0;
}

}  // namespace detail

ParticleEnsemble init_ensemble(const RoutingMatrix& A, const Vec& y1,
                               const RegularizationSchedule& sched,
                               const ModelParams& params, int n_particles,
                               std::uint64_t seed,
                               const PolytopeDecomposition& decomp,
                               const SirmConfig& config) {
  (void)decomp;
  SirmConfig cfg = config;
  cfg.n_particles = n_particles;
  cfg.seed = seed;
  detail::SirmRunner runner(A, sched, params, cfg);
  runner.init(y1);
  runner.sample_step(y1, 1);
  return runner.ensemble();
}

FilterResult run_filter(const FlowSeries& y, const RoutingMatrix& A,
                        const RegularizationSchedule& sched,
                        const ModelParams& params, const SirmConfig& config) {
  const int T = y.T();
  const int n = A.n_od();
  const int N = config.n_particles;
  if (sched.T() < T) throw UsageError("run_filter: schedule shorter than series");
  if (y.dim() != A.n_links()) throw UsageError("run_filter: series/link mismatch");

  detail::SirmRunner runner(A, sched, params, config);
  runner.init(y.values.row(0).transpose());

  FilterResult out;
  out.estimates.values.resize(T, n);
  out.estimates.names = A.od_names;
  out.estimates.interval_seconds = y.interval_seconds;
  out.est_sd.resize(T, n);
  out.est_q05.resize(T, n);
  out.est_q95.resize(T, n);
  out.log_lambda_mean.resize(T, n);
  out.diag.ess.resize(T);
  out.diag.acc_x.resize(T);
  out.diag.acc_lambda.resize(T);
  out.diag.acc_phi.resize(T);
  out.diag.ms_elapsed.resize(T);

  std::vector<double> col(N);
  for (int t = 1; t <= T; ++t) {
    auto t0 = std::chrono::steady_clock::now();
    Vec y_t = y.values.row(t - 1).transpose();
    try {
      runner.sample_step(y_t, t);
      out.diag.ess(t - 1) = runner.ensemble().ess;
      runner.resample();
      runner.move_step(y_t, t);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " (filter t=" +
                               std::to_string(t) + ")",
                           t);
    }
    const ParticleEnsemble& ens = runner.ensemble();
    for (int i = 0; i < n; ++i) {
      double mean = ens.x.col(i).mean();
      out.estimates.values(t - 1, i) = mean;
      double var = (ens.x.col(i).array() - mean).square().sum() /
                   std::max(N - 1, 1);
      out.est_sd(t - 1, i) = std::sqrt(var);
      for (int j = 0; j < N; ++j) col[j] = ens.x(j, i);
      auto q = [&](double p) {
        int k = std::clamp(static_cast<int>(p * (N - 1)), 0, N - 1);
        std::nth_element(col.begin(), col.begin() + k, col.end());
        return col[k];
      };
      out.est_q05(t - 1, i) = q(0.05);
      out.est_q95(t - 1, i) = q(0.95);
      out.log_lambda_mean(t - 1, i) = ens.lambda.col(i).array().log().mean();
    }
    out.diag.acc_x(t - 1) = runner.last_acc_x();
    out.diag.acc_lambda(t - 1) = runner.last_acc_lambda();
    out.diag.acc_phi(t - 1) = runner.last_acc_phi();
    out.diag.ms_elapsed(t - 1) =
        std::chrono::duration<double, std::milli>(
            std::chrono::steady_clock::now() - t0)
            .count();
  }
  return out;
}

}  // namespace odeconv
