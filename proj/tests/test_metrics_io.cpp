#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "odeconv/config.hpp"
#include "odeconv/io.hpp"
#include "odeconv/metrics.hpp"
#include "odeconv/net_model.hpp"
#include "odeconv/rng.hpp"

using namespace odeconv;

namespace {

// Unique temp path per tag; files are left behind in /tmp (harmless).
std::string tmp_path(const std::string& tag) {
  return "/tmp/odeconv_test_" + tag + ".csv";
}

FlowSeries make_series(std::initializer_list<std::string> names,
                       std::initializer_list<double> flat) {
  FlowSeries s;
  s.names = names;
  int d = static_cast<int>(s.names.size());
  int T = static_cast<int>(flat.size()) / d;
  s.values.resize(T, d);
  int k = 0;
  for (double v : flat) {
    s.values(k / d, k % d) = v;
    ++k;
  }
  return s;
}

}  // namespace

TEST_CASE("flow_errors on the 3-4-5 fixture") {
  // Single time step, error vector (3, 4): L2 = 5, L1 = 7.
  FlowSeries est = make_series({"a", "b"}, {4.0, 6.0});
  FlowSeries tru = make_series({"a", "b"}, {1.0, 2.0});
  ErrorReport r = flow_errors(est, tru);
  CHECK(std::abs(r.l2 - 5.0) < 1e-12);
  CHECK(std::abs(r.l1 - 7.0) < 1e-12);
  CHECK(r.se_l1 == 0.0);  // a single step has no spread
  CHECK(r.se_l2 == 0.0);
  REQUIRE(r.per_flow.size() == 2);
  CHECK(std::abs(r.per_flow(0) - 3.0) < 1e-12);
  CHECK(std::abs(r.per_flow(1) - 4.0) < 1e-12);
}

TEST_CASE("flow_errors averages per-time norms") {
  // Two steps with L2 norms 5 and 10, L1 norms 7 and 14.
  FlowSeries est = make_series({"a", "b"}, {4.0, 6.0, 7.0, 10.0});
  FlowSeries tru = make_series({"a", "b"}, {1.0, 2.0, 1.0, 2.0});
  ErrorReport r = flow_errors(est, tru);
  CHECK(std::abs(r.l2 - 7.5) < 1e-12);
  CHECK(std::abs(r.l1 - 10.5) < 1e-12);
  // SE = sd(norms)/sqrt(2); sd of {5,10} = 5/sqrt(2) -> SE = 2.5.
  CHECK(std::abs(r.se_l2 - 2.5) < 1e-12);
  CHECK(std::abs(r.se_l1 - 3.5) < 1e-12);
  CHECK(std::abs(r.per_flow(0) - 4.5) < 1e-12);
  CHECK(std::abs(r.per_flow(1) - 6.0) < 1e-12);
}

TEST_CASE("flow_errors homogeneity and zero cases") {
  FlowSeries est = make_series({"a"}, {1.0, 2.0, 3.0});
  FlowSeries tru = make_series({"a"}, {0.0, 0.0, 0.0});
  ErrorReport r1 = flow_errors(est, tru);
  FlowSeries est2 = est;
  est2.values *= 3.0;
  ErrorReport r3 = flow_errors(est2, tru);
  CHECK(std::abs(r3.l1 - 3.0 * r1.l1) < 1e-12);
  CHECK(std::abs(r3.l2 - 3.0 * r1.l2) < 1e-12);

  ErrorReport rz = flow_errors(tru, tru);
  CHECK(rz.l1 == 0.0);
  CHECK(rz.l2 == 0.0);
}

TEST_CASE("flow_errors rejects mismatched shapes") {
  FlowSeries a = make_series({"a", "b"}, {1.0, 2.0});
  FlowSeries b = make_series({"a"}, {1.0});
  CHECK_THROWS_AS(flow_errors(a, b), UsageError);
  FlowSeries empty;
  CHECK_THROWS_AS(flow_errors(empty, empty), UsageError);
}

TEST_CASE("sample_median odd and even") {
  CHECK(sample_median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(sample_median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK(sample_median({7.0}) == 7.0);
}

TEST_CASE("mann-whitney: separated, identical, tied samples") {
  // Completely separated: p should be very small one-sided.
  std::vector<double> hi = {10, 11, 12, 13, 14, 15, 16, 17, 18, 19};
  std::vector<double> lo = {1, 2, 3, 4, 5, 6, 7, 8, 9, 0};
  double p_sep = mann_whitney_p_greater(hi, lo);
  CHECK(p_sep < 0.001);
  // Reversed direction: p near 1.
  double p_rev = mann_whitney_p_greater(lo, hi);
  CHECK(p_rev > 0.999);
  // Identical distributions: p near 0.5.
  std::vector<double> a = {1, 3, 5, 7, 9};
  std::vector<double> b = {2, 4, 6, 8, 10};
  double p_mid = mann_whitney_p_greater(a, b);
  CHECK(p_mid > 0.2);
  CHECK(p_mid < 0.8);
  // Heavy ties do not break the statistic.
  std::vector<double> t1 = {1, 1, 1, 2, 2};
  std::vector<double> t2 = {1, 1, 2, 2, 2};
  double p_tie = mann_whitney_p_greater(t1, t2);
  CHECK(p_tie >= 0.0);
  CHECK(p_tie <= 1.0);
  // All observations equal: the degenerate fallback stays a probability.
  std::vector<double> c1 = {5, 5, 5};
  std::vector<double> c2 = {5, 5};
  double p_all = mann_whitney_p_greater(c1, c2);
  CHECK(p_all >= 0.0);
  CHECK(p_all <= 1.0);
}

TEST_CASE("format_g17 round-trips doubles exactly") {
  RngStream rng(31);
  for (int k = 0; k < 200; ++k) {
    double v = std::exp(20.0 * (rng.uniform() - 0.5)) *
               (rng.uniform() < 0.5 ? -1.0 : 1.0);
    double back = std::stod(format_g17(v));
    CHECK(back == v);
  }
  CHECK(format_g17(0.0) == "0");
  CHECK(std::stod(format_g17(0.1)) == 0.1);
}

TEST_CASE("routing matrix round-trips through CSV") {
  RoutingMatrix A = build_topology(parse_topology("star(3)"));
  std::string path = tmp_path("routing");
  write_routing_csv(A, path);
  RoutingMatrix B = read_routing_csv(path);
  CHECK(B.n_links() == A.n_links());
  CHECK(B.n_od() == A.n_od());
  CHECK(B.rank == A.rank);
  CHECK((B.entries - A.entries).cwiseAbs().maxCoeff() == 0.0);
  CHECK(B.link_names == A.link_names);
  CHECK(B.od_names == A.od_names);
}

TEST_CASE("read_routing_csv rejects non-binary entries") {
  std::string path = tmp_path("routing_bad");
  {
    std::ofstream out(path);
    out << "link,a\nl1,2\n";
  }
  CHECK_THROWS_AS(read_routing_csv(path), UsageError);
}

TEST_CASE("flow series round-trips through CSV") {
  FlowSeries s = make_series({"1->2", "2->1"}, {0.25, 3.75, 1.0 / 3.0, 7.5});
  std::string path = tmp_path("series");
  write_series_csv(s, path);
  FlowSeries b = read_series_csv(path);
  CHECK(b.T() == 2);
  CHECK(b.dim() == 2);
  CHECK(b.names == s.names);
  CHECK((b.values - s.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("calibration estimates round-trip with the window log") {
  // Build synthetic estimates with T = 6 and window W = 3 (4 windows) and
  // check both files reconstruct every per-time field.
  const int T = 6, n = 2, W = 3;
  const int n_windows = T - W + 1;
  CalibEstimates est;
  est.x_hat.resize(T, n);
  est.V_hat.resize(T, n);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) {
      est.x_hat(t, i) = 1.0 + 0.1 * t + i;
      est.V_hat(t, i) = 0.5 + 0.01 * t + 0.3 * i;
    }
  }
  est.od_names = {"a", "b"};
  est.phi_hat.resize(T);
  est.loglik.resize(T);
  est.warn.assign(T, 0);
  est.window_fits.resize(n_windows);
  for (int s = 0; s < n_windows; ++s) {
    WindowFit& wf = est.window_fits[s];
    wf.start = s;
    wf.lambda = Vec::Constant(n, 0.7 + 0.05 * s);
    wf.phi = 0.2 + 0.1 * s;
    wf.loglik = -10.0 - s;
    wf.evals = 40 + s;
    wf.converged = (s != 2);
  }
  const int half = W / 2;
  for (int t = 0; t < T; ++t) {
    int s = std::clamp(t - half, 0, n_windows - 1);
    est.phi_hat(t) = est.window_fits[s].phi;
    est.loglik(t) = est.window_fits[s].loglik;
    est.warn[t] = est.window_fits[s].converged ? 0 : 1;
  }

  std::string est_path = tmp_path("calib_est");
  std::string log_path = tmp_path("calib_log");
  write_calib_csv(est, est_path);
  write_calib_window_log(est, log_path);
  CalibEstimates back = read_calib_csv(est_path, log_path);

  CHECK((back.x_hat - est.x_hat).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.V_hat - est.V_hat).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.od_names == est.od_names);
  CHECK((back.phi_hat - est.phi_hat).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.loglik - est.loglik).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(back.warn.size() == est.warn.size());
  for (int t = 0; t < T; ++t) CHECK(back.warn[t] == est.warn[t]);
  REQUIRE(back.window_fits.size() == est.window_fits.size());
  for (int s = 0; s < n_windows; ++s) {
    CHECK(back.window_fits[s].start == s);
    CHECK(back.window_fits[s].phi == est.window_fits[s].phi);
    CHECK(back.window_fits[s].evals == est.window_fits[s].evals);
    CHECK(back.window_fits[s].converged == est.window_fits[s].converged);
    CHECK((back.window_fits[s].lambda - est.window_fits[s].lambda)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("schedule round-trips with its sidecar") {
  const int T = 4, n = 3;
  RegularizationSchedule sched;
  sched.theta1.resize(T, n);
  sched.theta2.resize(T, n);
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < n; ++i) {
      sched.theta1(t, i) = 0.01 * t - 0.02 * i;
      sched.theta2(t, i) = 0.1 + 0.03 * t + 0.01 * i;
    }
  }
  sched.phi_t_hat.resize(T);
  sched.phi_t_hat << 0.4, 0.5, 0.6, 0.7;
  sched.rho_model = 0.85;
  sched.tau = 1.5;
  sched.alpha = 2.5;
  std::vector<std::string> names = {"a", "b", "c"};

  std::string path = tmp_path("schedule");
  std::string sidecar = tmp_path("schedule_meta");
  write_schedule_csv(sched, names, path, sidecar);
  std::vector<std::string> names_back;
  RegularizationSchedule back = read_schedule_csv(path, sidecar, &names_back);

  CHECK(names_back == names);
  CHECK((back.theta1 - sched.theta1).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.theta2 - sched.theta2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.phi_t_hat - sched.phi_t_hat).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.rho_model == 0.85);
  CHECK(back.tau == 1.5);
  CHECK(back.alpha == 2.5);
}

TEST_CASE("schedule sidecar validation") {
  std::string path = tmp_path("schedule2");
  std::string sidecar = tmp_path("schedule2_meta");
  RegularizationSchedule sched;
  sched.theta1 = Mat::Zero(2, 1);
  sched.theta2 = Mat::Ones(2, 1);
  sched.phi_t_hat = Vec::Ones(2);
  write_schedule_csv(sched, {"a"}, path, sidecar);
  {
    std::ofstream out(sidecar, std::ios::app);
    out << "bogus_key=1\n";
  }
  CHECK_THROWS_AS(read_schedule_csv(path, sidecar), UsageError);
}

TEST_CASE("schedule hash is stable and value sensitive") {
  RegularizationSchedule sched;
  sched.theta1 = Mat::Zero(3, 2);
  sched.theta2 = Mat::Ones(3, 2);
  sched.phi_t_hat = Vec::Ones(3);
  std::string h1 = schedule_hash(sched);
  std::string h2 = schedule_hash(sched);
  CHECK(h1 == h2);
  CHECK(h1.size() == 16);  // 64-bit hash, fixed-width hex
  RegularizationSchedule other = sched;
  other.theta2(1, 1) += 1e-9;
  CHECK(schedule_hash(other) != h1);
}

TEST_CASE("filter estimates serialize and read back as a series") {
  FilterResult fr;
  fr.estimates = make_series({"a", "b"}, {1.5, 2.5, 3.5, 4.5});
  fr.est_sd = Mat::Constant(2, 2, 0.1);
  fr.est_q05 = Mat::Constant(2, 2, 1.0);
  fr.est_q95 = Mat::Constant(2, 2, 5.0);
  fr.log_lambda_mean = Mat::Zero(2, 2);
  std::string path = tmp_path("filter");
  write_filter_csv(fr, path);
  // The long-format reader recovers the mean column as a flow series.
  FlowSeries back = read_series_any(path);
  CHECK(back.T() == 2);
  CHECK(back.dim() == 2);
  CHECK(back.names == fr.estimates.names);
  CHECK((back.values - fr.estimates.values).cwiseAbs().maxCoeff() == 0.0);

  FilterDiagnostics diag;
  diag.ess = Vec::Constant(2, 30.0);
  diag.acc_x = Vec::Constant(2, 0.5);
  diag.acc_lambda = Vec::Constant(2, 0.4);
  diag.acc_phi = Vec::Constant(2, 0.3);
  diag.ms_elapsed = Vec::Constant(2, 12.0);
  write_diagnostics_csv(diag, tmp_path("diag"));
  std::ifstream in(tmp_path("diag"));
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,ess,acc_x,acc_lambda,acc_phi,ms_elapsed");
}

TEST_CASE("read_series_any sniffs wide and long formats") {
  FlowSeries s = make_series({"u", "v"}, {1.0, 2.0, 3.0, 4.0});
  std::string wide = tmp_path("any_wide");
  write_series_csv(s, wide);
  FlowSeries w = read_series_any(wide);
  CHECK((w.values - s.values).cwiseAbs().maxCoeff() == 0.0);

  std::string longp = tmp_path("any_long");
  {
    std::ofstream out(longp);
    out << "t,od_name,x_hat,V_hat\n";
    out << "1,u,1,9\n1,v,2,9\n2,u,3,9\n2,v,4,9\n";
  }
  FlowSeries l = read_series_any(longp);
  CHECK(l.names == s.names);
  CHECK((l.values - s.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("study results and summary files have the documented headers") {
  std::vector<StudyResult> results(1);
  results[0].topology = "chain3";
  results[0].replicate = 0;
  results[0].rel_l1 = 1.1;
  results[0].rel_l2 = 1.2;
  results[0].l1_two = 1.0;
  results[0].l2_two = 0.5;
  results[0].l1_naive = 1.1;
  results[0].l2_naive = 0.6;
  results[0].ess_median_two = 300.0;
  results[0].ess_median_naive = 60.0;
  std::string rp = tmp_path("study_results");
  write_study_results_csv(results, rp);
  std::ifstream in(rp);
  std::string header, row;
  std::getline(in, header);
  CHECK(header ==
        "topology,replicate,rel_l1,rel_l2,l1_two_stage,l2_two_stage,"
        "l1_naive,l2_naive,ess_median_two_stage,ess_median_naive");
  CHECK(std::getline(in, row));
  CHECK(row.rfind("chain3,0,", 0) == 0);

  std::vector<StudySummary> summaries(1);
  summaries[0].topology = "chain3";
  summaries[0].n = 10;
  summaries[0].mean_rel_l1 = 1.1;
  summaries[0].sd_rel_l1 = 0.1;
  summaries[0].mean_rel_l2 = 1.2;
  summaries[0].sd_rel_l2 = 0.2;
  summaries[0].mean_ess_two = 300.0;
  summaries[0].mean_ess_naive = 75.0;
  std::string sp = tmp_path("study_summary");
  write_study_summary_csv(summaries, sp);
  std::ifstream in2(sp);
  std::getline(in2, header);
  CHECK(header ==
        "topology,n,mean_rel_l1,sd_rel_l1,mean_rel_l2,sd_rel_l2,"
        "mean_ess_median_two_stage,mean_ess_median_naive");
}

TEST_CASE("config parsing applies keys and rejects garbage") {
  PipelineConfig cfg;
  apply_config_entry(cfg, "window", "11");
  CHECK(cfg.window == 11);
  apply_config_entry(cfg, "rho_model", "0.8");
  CHECK(cfg.rho_model == 0.8);
  apply_config_entry(cfg, "chord_correction", "false");
  CHECK_FALSE(cfg.chord_correction);
  apply_config_entry(cfg, "resample_mode", "ess:0.5");
  CHECK(cfg.resample_mode == "ess:0.5");
  apply_config_entry(cfg, "window_mode", "parallel");
  CHECK(cfg.window_mode == "parallel");

  CHECK_THROWS_AS(apply_config_entry(cfg, "no_such_key", "1"), UsageError);
  CHECK_THROWS_AS(apply_config_entry(cfg, "window", "eleven"), UsageError);
  CHECK_THROWS_AS(apply_config_entry(cfg, "window_mode", "sideways"),
                  UsageError);

  std::string path = tmp_path("config");
  {
    std::ofstream out(path);
    out << "# pipeline settings\n";
    out << "n_particles = 250\n";
    out << "tau=1.0   # inline comment\n";
    out << "\n";
    out << "surrogate_emission=true\n";
  }
  PipelineConfig file_cfg = parse_config_file(path);
  CHECK(file_cfg.n_particles == 250);
  CHECK(file_cfg.tau == 1.0);
  CHECK(file_cfg.surrogate_emission);
  // Untouched keys keep their defaults.
  CHECK(file_cfg.window == 23);
  CHECK(file_cfg.rho_calib == 0.1);
  CHECK(std::abs(file_cfg.naive_phi - std::log(2.0)) < 1e-15);
}

TEST_CASE("config converters forward the grouped settings") {
  PipelineConfig cfg;
  cfg.window = 9;
  cfg.rho_calib = 0.2;
  cfg.sigma2 = 0.02;
  cfg.tau = 1.5;
  cfg.max_evals = 321;
  cfg.window_mode = "parallel";
  cfg.threads = 2;
  CalibConfig cc = to_calib_config(cfg);
  CHECK(cc.window == 9);
  CHECK(cc.rho_calib == 0.2);
  CHECK(cc.sigma2_obs == 0.02);
  CHECK(cc.tau_calib == 1.5);
  CHECK(cc.max_evals == 321);
  CHECK(cc.window_mode == "parallel");
  CHECK(cc.threads == 2);

  cfg.n_particles = 77;
  cfg.n_moves = 3;
  cfg.proposal_burnin = 17;
  cfg.resample_mode = "ess:0.25";
  cfg.surrogate_emission = true;
  SirmConfig sc = to_sirm_config(cfg);
  CHECK(sc.n_particles == 77);
  CHECK(sc.n_moves == 3);
  CHECK(sc.proposal_burnin == 17);
  CHECK(sc.resample_mode == "ess:0.25");
  CHECK(sc.surrogate_emission);

  cfg.rho_model = 0.7;
  cfg.alpha = 3.0;
  cfg.lambda0_mean = 2.0;
  cfg.lambda0_sd = 1.0;
  ModelParams mp = to_model_params(cfg);
  CHECK(mp.rho_model == 0.7);
  CHECK(mp.tau == 1.5);
  CHECK(mp.alpha == 3.0);
  CHECK(mp.lambda0_mean == 2.0);
  CHECK(mp.lambda0_sd == 1.0);
}
