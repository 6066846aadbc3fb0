#pragma once

#include <string>

#include "odeconv/kalman_calib.hpp"
#include "odeconv/multilevel_ssm.hpp"
#include "odeconv/sirm_filter.hpp"

namespace odeconv {

// Flat key=value pipeline configuration covering every stage's defaults.
struct PipelineConfig {
  // calibration
  double rho_calib = 0.1;
  double sigma2 = 0.01;
  int window = 23;
  std::string window_mode = "warm";
  int max_evals = 500;
  // model / schedule
  double rho_model = 0.9;
  double tau = 2.0;
  double alpha = 2.0;
  double naive_phi = 0.6931471805599453;  // log 2
  double floor_val = 0.0;                 // 0 = automatic
  double lambda0_mean = 1.0;
  double lambda0_sd = 2.0;
  // filter
  int n_particles = 1000;
  int n_moves = 5;
  int proposal_burnin = 50;
  std::string resample_mode = "always";
  bool chord_correction = true;
  bool mu_star_literal = false;
  bool lambda_init_anchor = true;
  double lambda_init_sd = 0.5;
  bool surrogate_emission = false;
  double surrogate_sd = 0.3;
  // orchestration
  int threads = 1;
};

// Applies one key=value setting; throws UsageError naming an unknown key
// or a malformed value.
void apply_config_entry(PipelineConfig& cfg, const std::string& key,
                        const std::string& value);

// Parses a flat key=value file ('#' starts a comment; blank lines are
// skipped).
PipelineConfig parse_config_file(const std::string& path);

CalibConfig to_calib_config(const PipelineConfig& cfg);
SirmConfig to_sirm_config(const PipelineConfig& cfg);
ModelParams to_model_params(const PipelineConfig& cfg);

}  // namespace odeconv
