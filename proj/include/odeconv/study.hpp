#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "odeconv/kalman_calib.hpp"
#include "odeconv/sirm_filter.hpp"
#include "odeconv/types.hpp"

namespace odeconv {

// Full simulation-study configuration: topologies, replication plan,
// the synthetic truth process, and per-stage knobs.
struct StudyConfig {
  std::vector<Topology> topologies;
  int n_replicates = 10;
  int T = 100;
  std::uint64_t seed = 0;
  int threads = 1;

  // Synthetic truth process: per replicate each OD draws a level
  //   lambda_bar_i ~ LogNormal(log level_median, level_sd^2),
  // the drift holds the log-intensity near that level,
  //   theta1*_i = (1 - rho_model) * log lambda_bar_i   (constant in t),
  // with constant innovation variance theta2* and scale center beta*.
  // lambda_0 starts at lambda_bar jittered by exp(N(0, lambda0_jitter_sd^2)).
  double level_median = 1.5;
  double level_sd = 0.5;
  double theta2_star = 0.05;
  double beta_star = 0.30;
  double lambda0_jitter_sd = 0.3;

  // Shared model constants.
  double rho_model = 0.9;
  double tau = 2.0;
  double alpha = 2.0;
  double naive_phi = 0.6931471805599453;  // log 2

  CalibConfig calib;
  SirmConfig sirm;  // n_particles/seed set per replicate by the runner
  int n_particles = 500;
};

// Per-replicate outcome. rel_* are naive-over-two-stage error ratios
// (values above 1 favor the two-stage schedule).
struct StudyResult {
  std::string topology;
  int replicate = 0;
  double rel_l1 = 0.0;
  double rel_l2 = 0.0;
  double l1_two = 0.0, l2_two = 0.0;
  double l1_naive = 0.0, l2_naive = 0.0;
  double ess_median_two = 0.0;
  double ess_median_naive = 0.0;
};

struct StudySummary {
  std::string topology;
  int n = 0;
  double mean_rel_l1 = 0.0, sd_rel_l1 = 0.0;
  double mean_rel_l2 = 0.0, sd_rel_l2 = 0.0;
  double mean_ess_two = 0.0, mean_ess_naive = 0.0;
};

struct StudyOutput {
  std::vector<StudyResult> results;
  std::vector<StudySummary> summaries;
  int n_failed = 0;
  std::vector<std::string> failures;  // "<topology>/<replicate>: <reason>"
};

// Runs the replicated comparison: per topology and replicate, simulate a
// truth path, calibrate + schedule + filter (two-stage), filter again
// under the naive schedule, and report error ratios. Replicates are
// deterministic functions of (config, seed) regardless of thread count;
// failed replicates are excluded and counted.
StudyOutput run_study(const StudyConfig& config);

// The desk-scale preset: chain3 / star(3) / star(4), 10 replicates,
// T=100, 500 particles.
StudyConfig paper_desk_preset();

StudySummary summarize(const std::string& topology,
                       const std::vector<StudyResult>& results);

}  // namespace odeconv
