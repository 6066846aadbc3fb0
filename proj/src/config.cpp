#include "odeconv/config.hpp"

#include <fstream>

namespace odeconv {

namespace {

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw UsageError("config key '" + key + "' has a bad numeric value '" +
                     value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  double v = to_double(key, value);
  int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw UsageError("config key '" + key + "' must be an integer, got '" +
                     value + "'");
  }
  return i;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw UsageError("config key '" + key + "' must be true/false, got '" +
                   value + "'");
}

}  // namespace

void apply_config_entry(PipelineConfig& cfg, const std::string& key,
                        const std::string& value) {
  if (key == "rho_calib") {
    cfg.rho_calib = to_double(key, value);
  } else if (key == "sigma2") {
    cfg.sigma2 = to_double(key, value);
  } else if (key == "window") {
    cfg.window = to_int(key, value);
  } else if (key == "window_mode") {
    if (value != "warm" && value != "parallel") {
      throw UsageError("config key 'window_mode' must be warm or parallel");
    }
    cfg.window_mode = value;
  } else if (key == "max_evals") {
    cfg.max_evals = to_int(key, value);
  } else if (key == "rho_model") {
    cfg.rho_model = to_double(key, value);
  } else if (key == "tau") {
    cfg.tau = to_double(key, value);
  } else if (key == "alpha") {
    cfg.alpha = to_double(key, value);
  } else if (key == "naive_phi") {
    cfg.naive_phi = to_double(key, value);
  } else if (key == "floor_val") {
    cfg.floor_val = to_double(key, value);
  } else if (key == "lambda0_mean") {
    cfg.lambda0_mean = to_double(key, value);
  } else if (key == "lambda0_sd") {
    cfg.lambda0_sd = to_double(key, value);
  } else if (key == "n_particles") {
    cfg.n_particles = to_int(key, value);
  } else if (key == "n_moves") {
    cfg.n_moves = to_int(key, value);
  } else if (key == "proposal_burnin") {
    cfg.proposal_burnin = to_int(key, value);
  } else if (key == "resample_mode") {
    cfg.resample_mode = value;
  } else if (key == "chord_correction") {
    cfg.chord_correction = to_bool(key, value);
  } else if (key == "mu_star_literal") {
    cfg.mu_star_literal = to_bool(key, value);
  } else if (key == "lambda_init_anchor") {
    cfg.lambda_init_anchor = to_bool(key, value);
  } else if (key == "lambda_init_sd") {
    cfg.lambda_init_sd = to_double(key, value);
  } else if (key == "surrogate_emission") {
    cfg.surrogate_emission = to_bool(key, value);
  } else if (key == "surrogate_sd") {
    cfg.surrogate_sd = to_double(key, value);
  } else if (key == "threads") {
    cfg.threads = to_int(key, value);
  } else {
    throw UsageError("unknown config key '" + key + "'");
  }
}

PipelineConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  PipelineConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto strip = [](std::string s) {
      auto b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      auto e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) +
                       " is not key=value: '" + line + "'");
    }
    apply_config_entry(cfg, strip(line.substr(0, eq)),
                       strip(line.substr(eq + 1)));
  }
  return cfg;
}

CalibConfig to_calib_config(const PipelineConfig& cfg) {
  CalibConfig c;
  c.window = cfg.window;
  c.rho_calib = cfg.rho_calib;
  c.sigma2_obs = cfg.sigma2;
  c.tau_calib = cfg.tau;
  c.max_evals = cfg.max_evals;
  c.window_mode = cfg.window_mode;
  c.threads = cfg.threads;
  return c;
}

SirmConfig to_sirm_config(const PipelineConfig& cfg) {
  SirmConfig c;
  c.n_particles = cfg.n_particles;
  c.n_moves = cfg.n_moves;
  c.proposal_burnin = cfg.proposal_burnin;
  c.resample_mode = cfg.resample_mode;
  c.chord_correction = cfg.chord_correction;
  c.mu_star_literal = cfg.mu_star_literal;
  c.lambda_init_anchor = cfg.lambda_init_anchor;
  c.lambda_init_sd = cfg.lambda_init_sd;
  c.surrogate_emission = cfg.surrogate_emission;
  c.surrogate_sd = cfg.surrogate_sd;
  return c;
}

ModelParams to_model_params(const PipelineConfig& cfg) {
  ModelParams p;
  p.rho_model = cfg.rho_model;
  p.tau = cfg.tau;
  p.alpha = cfg.alpha;
  p.lambda0_mean = cfg.lambda0_mean;
  p.lambda0_sd = cfg.lambda0_sd;
  return p;
}

}  // namespace odeconv
