#include "odeconv/study.hpp"

#include <cmath>
#include <future>
#include <stdexcept>

#include "odeconv/metrics.hpp"
#include "odeconv/multilevel_ssm.hpp"
#include "odeconv/net_model.hpp"
#include "odeconv/regularizer.hpp"
#include "odeconv/rng.hpp"

namespace odeconv {

namespace {

RegularizationSchedule truth_schedule(const Vec& lambda_bar, int T,
                                      const StudyConfig& cfg) {
  const int n = static_cast<int>(lambda_bar.size());
  RegularizationSchedule s;
  s.rho_model = cfg.rho_model;
  s.tau = cfg.tau;
  s.alpha = cfg.alpha;
  s.theta1.resize(T, n);
  for (int i = 0; i < n; ++i) {
    s.theta1.col(i).setConstant((1.0 - cfg.rho_model) *
                                std::log(lambda_bar(i)));
  }
  s.theta2 = Mat::Constant(T, n, cfg.theta2_star);
  s.phi_t_hat = Vec::Constant(T, cfg.beta_star);
  return s;
}

std::vector<double> to_vector(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

StudyResult run_replicate(const RoutingMatrix& A, const std::string& topo_name,
                          int topo_index, int replicate,
                          const StudyConfig& cfg) {
  const int n = A.n_od();
  RngFactory factory(cfg.seed);

  // Truth levels and initial intensities for this replicate.
  RngStream level_rng = factory.stream(1000 + topo_index, replicate, 0);
  Vec lambda_bar(n), lambda0(n);
  for (int i = 0; i < n; ++i) {
    lambda_bar(i) =
        std::exp(std::log(cfg.level_median) + cfg.level_sd * level_rng.normal());
  }
  for (int i = 0; i < n; ++i) {
    lambda0(i) =
        lambda_bar(i) * std::exp(cfg.lambda0_jitter_sd * level_rng.normal());
  }

  RegularizationSchedule sched_star = truth_schedule(lambda_bar, cfg.T, cfg);
  ModelParams params;
  params.rho_model = cfg.rho_model;
  params.tau = cfg.tau;
  params.alpha = cfg.alpha;
  params.lambda0_mean = cfg.level_median;
  params.lambda0_sd = cfg.level_sd;

  std::uint64_t sim_seed = factory.stream(topo_index, replicate, 1).raw();
  SimResult sim = simulate(A, sched_star, params, cfg.T, sim_seed, lambda0);

  // Stage 1: windowed calibration, then the data-driven schedule.
  CalibConfig calib = cfg.calib;
  CalibEstimates est = run_calibration(sim.y, A, calib);
  // Generous sweep budget: near-boundary projections converge slowly and a
  // single stalled time step would abort the whole replicate.
  RegularizationSchedule sched_two =
      compute_schedule(est, A, sim.y, cfg.rho_model, cfg.alpha,
                       /*floor_val=*/0.0, cfg.tau, /*ipfp_tol=*/1e-9,
                       /*ipfp_max_iter=*/20000);
  RegularizationSchedule sched_naive =
      naive_schedule(n, cfg.T, cfg.alpha, cfg.naive_phi, cfg.rho_model,
                     cfg.tau);

  // Stage 2: run the particle filter under each schedule.
  SirmConfig fcfg = cfg.sirm;
  fcfg.n_particles = cfg.n_particles;
  fcfg.seed = factory.stream(topo_index, replicate, 2).raw();
  FilterResult two = run_filter(sim.y, A, sched_two, params, fcfg);
  fcfg.seed = factory.stream(topo_index, replicate, 3).raw();
  FilterResult naive = run_filter(sim.y, A, sched_naive, params, fcfg);

  ErrorReport err_two = flow_errors(two.estimates, sim.x);
  ErrorReport err_naive = flow_errors(naive.estimates, sim.x);

  StudyResult r;
  r.topology = topo_name;
  r.replicate = replicate;
  r.l1_two = err_two.l1;
  r.l2_two = err_two.l2;
  r.l1_naive = err_naive.l1;
  r.l2_naive = err_naive.l2;
  r.rel_l1 = err_naive.l1 / err_two.l1;
  r.rel_l2 = err_naive.l2 / err_two.l2;
  r.ess_median_two = sample_median(to_vector(two.diag.ess));
  r.ess_median_naive = sample_median(to_vector(naive.diag.ess));
  return r;
}

}  // namespace

StudySummary summarize(const std::string& topology,
                       const std::vector<StudyResult>& results) {
  StudySummary s;
  s.topology = topology;
  double s1 = 0, s2 = 0, q1 = 0, q2 = 0, e2 = 0, e1 = 0;
  for (const StudyResult& r : results) {
    if (r.topology != topology) continue;
    ++s.n;
    s1 += r.rel_l1;
    s2 += r.rel_l2;
    q1 += r.rel_l1 * r.rel_l1;
    q2 += r.rel_l2 * r.rel_l2;
    e2 += r.ess_median_two;
    e1 += r.ess_median_naive;
  }
  if (s.n == 0) return s;
  s.mean_rel_l1 = s1 / s.n;
  s.mean_rel_l2 = s2 / s.n;
  s.mean_ess_two = e2 / s.n;
  s.mean_ess_naive = e1 / s.n;
  if (s.n > 1) {
    s.sd_rel_l1 =
        std::sqrt(std::max(0.0, (q1 - s.n * s.mean_rel_l1 * s.mean_rel_l1) /
                                    (s.n - 1)));
    s.sd_rel_l2 =
        std::sqrt(std::max(0.0, (q2 - s.n * s.mean_rel_l2 * s.mean_rel_l2) /
                                    (s.n - 1)));
  }
  return s;
}

StudyOutput run_study(const StudyConfig& config) {
  StudyOutput out;
  struct Job {
    RoutingMatrix A;
    int topo_index;
    int replicate;
  };
  std::vector<Job> jobs;
  std::vector<std::string> topo_names;
  for (std::size_t ti = 0; ti < config.topologies.size(); ++ti) {
    RoutingMatrix A = build_topology(config.topologies[ti]);
    topo_names.push_back(topology_name(config.topologies[ti]));
    for (int r = 0; r < config.n_replicates; ++r) {
      jobs.push_back({A, static_cast<int>(ti), r});
    }
  }

  auto run_one = [&config, &topo_names](const Job& j) -> StudyResult {
    return run_replicate(j.A, topo_names[j.topo_index], j.topo_index,
                         j.replicate, config);
  };

  std::vector<StudyResult> results(jobs.size());
  std::vector<std::uint8_t> ok(jobs.size(), 0);
  std::vector<std::string> errors(jobs.size());
  const int threads = std::max(1, config.threads);
  if (threads == 1) {
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      try {
        results[k] = run_one(jobs[k]);
        ok[k] = 1;
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  } else {
    std::size_t next = 0;
    while (next < jobs.size()) {
      std::size_t batch =
          std::min<std::size_t>(threads, jobs.size() - next);
      std::vector<std::future<StudyResult>> futs;
      for (std::size_t b = 0; b < batch; ++b) {
        futs.push_back(std::async(std::launch::async, run_one,
                                  std::cref(jobs[next + b])));
      }
      for (std::size_t b = 0; b < batch; ++b) {
        try {
          results[next + b] = futs[b].get();
          ok[next + b] = 1;
        } catch (const std::exception& e) {
          errors[next + b] = e.what();
        }
      }
      next += batch;
    }
  }

  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (ok[k]) {
      out.results.push_back(results[k]);
    } else {
      ++out.n_failed;
      out.failures.push_back(topo_names[jobs[k].topo_index] + "/" +
                             std::to_string(jobs[k].replicate) + ": " +
                             errors[k]);
    }
  }
  for (const std::string& name : topo_names) {
    out.summaries.push_back(summarize(name, out.results));
  }
  return out;
}

StudyConfig paper_desk_preset() {
  StudyConfig cfg;
  cfg.topologies = {Topology::Chain3(), Topology::Star(3), Topology::Star(4)};
  cfg.n_replicates = 10;
  cfg.T = 100;
  cfg.n_particles = 500;
  cfg.calib.window_mode = "parallel";
  cfg.calib.max_evals = 1200;
  return cfg;
}

}  // namespace odeconv
