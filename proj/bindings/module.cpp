// Python bindings for the deconvolution toolkit: topology construction,
// stage-1 calibration, schedule computation, the generative simulator, the
// particle filter, metrics, and the replicated study runner.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "odeconv/config.hpp"
#include "odeconv/io.hpp"
#include "odeconv/kalman_calib.hpp"
#include "odeconv/metrics.hpp"
#include "odeconv/multilevel_ssm.hpp"
#include "odeconv/net_model.hpp"
#include "odeconv/polytope.hpp"
#include "odeconv/regularizer.hpp"
#include "odeconv/sirm_filter.hpp"
#include "odeconv/study.hpp"
#include "odeconv/types.hpp"

namespace py = pybind11;
using namespace odeconv;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-stage deconvolution of origin-destination flows from "
            "aggregate link loads";

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError",
                                         PyExc_RuntimeError);

  // ---- core containers ---------------------------------------------------
  py::class_<RoutingMatrix>(m, "RoutingMatrix")
      .def(py::init<>())
      .def_readwrite("entries", &RoutingMatrix::entries)
      .def_readwrite("link_names", &RoutingMatrix::link_names)
      .def_readwrite("od_names", &RoutingMatrix::od_names)
      .def_readwrite("rank", &RoutingMatrix::rank)
      .def_property_readonly("n_links", &RoutingMatrix::n_links)
      .def_property_readonly("n_od", &RoutingMatrix::n_od)
      .def("__repr__", [](const RoutingMatrix& a) {
        return "RoutingMatrix(" + std::to_string(a.n_links()) + " links x " +
               std::to_string(a.n_od()) + " flows, rank " +
               std::to_string(a.rank) + ")";
      });

  py::class_<FlowSeries>(m, "FlowSeries")
      .def(py::init<>())
      .def(py::init([](const Mat& values, std::vector<std::string> names) {
             FlowSeries s;
             s.values = values;
             s.names = std::move(names);
             return s;
           }),
           py::arg("values"), py::arg("names"))
      .def_readwrite("values", &FlowSeries::values)
      .def_readwrite("names", &FlowSeries::names)
      .def_readwrite("interval_seconds", &FlowSeries::interval_seconds)
      .def_property_readonly("T", &FlowSeries::T)
      .def_property_readonly("dim", &FlowSeries::dim);

  // ---- topology / polytope ----------------------------------------------
  m.def(
      "build_topology",
      [](const std::string& spec) { return build_topology(parse_topology(spec)); },
      py::arg("spec"),
      "Build a routing matrix from a topology name such as 'chain3', "
      "'star(4)', or 'two_router_star(4,8)'.");
  m.def("aggregate", &aggregate, py::arg("x"), py::arg("A"),
        "Link loads y_t = A x_t for a series of OD flows.");
  m.def("latent_dim", &latent_dim, py::arg("A"),
        "Dimension of the feasible polytope: n_od - rank(A).");

  py::class_<FeasiblePoint>(m, "FeasiblePoint")
      .def_readonly("x", &FeasiblePoint::x)
      .def_readonly("slack", &FeasiblePoint::slack);

  m.def(
      "ipfp_project",
      [](const Vec& x0, const RoutingMatrix& A, const Vec& y, double tol,
         int max_iter) { return ipfp_project(x0, A, y, tol, max_iter); },
      py::arg("x0"), py::arg("A"), py::arg("y"), py::arg("tol") = 1e-9,
      py::arg("max_iter") = 300,
      "Project a positive vector onto {x >= 0, Ax = y} by iterative "
      "proportional fitting.");
  m.def(
      "feasible_start",
      [](const RoutingMatrix& A, const Vec& y, double tol, int max_iter) {
        return feasible_start(A, y, tol, max_iter);
      },
      py::arg("A"), py::arg("y"), py::arg("tol") = 1e-9,
      py::arg("max_iter") = 300);

  // ---- stage 1: Gaussian state-space calibration -------------------------
  py::class_<CalibConfig>(m, "CalibConfig")
      .def(py::init<>())
      .def_readwrite("window", &CalibConfig::window)
      .def_readwrite("rho_calib", &CalibConfig::rho_calib)
      .def_readwrite("sigma2_obs", &CalibConfig::sigma2_obs)
      .def_readwrite("tau_calib", &CalibConfig::tau_calib)
      .def_readwrite("max_evals", &CalibConfig::max_evals)
      .def_readwrite("rel_tol", &CalibConfig::rel_tol)
      .def_readwrite("window_mode", &CalibConfig::window_mode)
      .def_readwrite("threads", &CalibConfig::threads);

  py::class_<WindowFit>(m, "WindowFit")
      .def_readonly("start", &WindowFit::start)
      .def_readonly("lambda_", &WindowFit::lambda)
      .def_readonly("phi", &WindowFit::phi)
      .def_readonly("loglik", &WindowFit::loglik)
      .def_readonly("evals", &WindowFit::evals)
      .def_readonly("converged", &WindowFit::converged);

  py::class_<CalibEstimates>(m, "CalibEstimates")
      .def(py::init<>())
      .def_readwrite("x_hat", &CalibEstimates::x_hat)
      .def_readwrite("V_hat", &CalibEstimates::V_hat)
      .def_readwrite("phi_hat", &CalibEstimates::phi_hat)
      .def_readwrite("loglik", &CalibEstimates::loglik)
      .def_readwrite("od_names", &CalibEstimates::od_names)
      .def_readonly("window_fits", &CalibEstimates::window_fits);

  m.def("run_calibration", &run_calibration, py::arg("y"), py::arg("A"),
        py::arg("config") = CalibConfig(),
        "Sliding-window maximum-likelihood estimation of the Gaussian "
        "state-space model; returns smoothed per-flow means and variances.");

  py::class_<CalibParams>(m, "CalibParams")
      .def(py::init<>())
      .def_readwrite("rho_calib", &CalibParams::rho_calib)
      .def_readwrite("sigma2_obs", &CalibParams::sigma2_obs)
      .def_readwrite("lambda_vec", &CalibParams::lambda_vec)
      .def_readwrite("phi_scale", &CalibParams::phi_scale)
      .def_readwrite("tau_calib", &CalibParams::tau_calib);

  py::class_<KalmanResult>(m, "KalmanResult")
      .def_readonly("filt_mean", &KalmanResult::filt_mean)
      .def_readonly("filt_cov", &KalmanResult::filt_cov)
      .def_readonly("pred_mean", &KalmanResult::pred_mean)
      .def_readonly("pred_cov", &KalmanResult::pred_cov)
      .def_readonly("loglik", &KalmanResult::loglik);

  py::class_<SmoothResult>(m, "SmoothResult")
      .def_readonly("mean", &SmoothResult::mean)
      .def_readonly("cov", &SmoothResult::cov);

  m.def(
      "kalman_filter",
      [](const FlowSeries& y, const RoutingMatrix& A, const CalibParams& p) {
        Vec m0;
        Mat P0;
        stationary_init(p, m0, P0);
        return kalman_filter(y, A, p, m0, P0);
      },
      py::arg("y"), py::arg("A"), py::arg("params"),
      "Kalman filter with the stationary initial distribution.");
  m.def("kalman_smoother", &kalman_smoother, py::arg("filter_result"),
        py::arg("params"));
  m.def("marginal_loglik", &marginal_loglik, py::arg("y"), py::arg("A"),
        py::arg("params"));

  // ---- regularization schedules ------------------------------------------
  py::class_<RegularizationSchedule>(m, "RegularizationSchedule")
      .def(py::init<>())
      .def_readwrite("theta1", &RegularizationSchedule::theta1)
      .def_readwrite("theta2", &RegularizationSchedule::theta2)
      .def_readwrite("phi_t_hat", &RegularizationSchedule::phi_t_hat)
      .def_readwrite("rho_model", &RegularizationSchedule::rho_model)
      .def_readwrite("tau", &RegularizationSchedule::tau)
      .def_readwrite("alpha", &RegularizationSchedule::alpha)
      .def_property_readonly("T", &RegularizationSchedule::T)
      .def_property_readonly("n_od", &RegularizationSchedule::n_od);

  m.def("compute_schedule", &compute_schedule, py::arg("estimates"),
        py::arg("A"), py::arg("y"), py::arg("rho_model") = 0.9,
        py::arg("alpha") = 2.0, py::arg("floor_val") = 0.0,
        py::arg("tau") = 2.0, py::arg("ipfp_tol") = 1e-9,
        py::arg("ipfp_max_iter") = 300,
        "Derive the per-flow drift/variance schedule from stage-1 "
        "estimates.");
  m.def("naive_schedule", &naive_schedule, py::arg("n_od"), py::arg("T"),
        py::arg("alpha") = 2.0, py::arg("naive_phi") = 0.6931471805599453,
        py::arg("rho_model") = 0.9, py::arg("tau") = 2.0);
  m.def("smooth_running_median", &smooth_running_median, py::arg("series"),
        py::arg("window"));

  // ---- multilevel model ---------------------------------------------------
  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def_readwrite("rho_model", &ModelParams::rho_model)
      .def_readwrite("tau", &ModelParams::tau)
      .def_readwrite("alpha", &ModelParams::alpha)
      .def_readwrite("lambda0_mean", &ModelParams::lambda0_mean)
      .def_readwrite("lambda0_sd", &ModelParams::lambda0_sd);

  py::class_<SimResult>(m, "SimResult")
      .def_readonly("x", &SimResult::x)
      .def_readonly("lambda_path", &SimResult::lambda_path)
      .def_readonly("phi_path", &SimResult::phi_path)
      .def_readonly("y", &SimResult::y);

  m.def(
      "simulate",
      [](const RoutingMatrix& A, const RegularizationSchedule& sched,
         const ModelParams& params, int T, std::uint64_t seed,
         const Vec& lambda0_override) {
        return simulate(A, sched, params, T, seed, lambda0_override);
      },
      py::arg("A"), py::arg("schedule"), py::arg("params"), py::arg("T"),
      py::arg("seed"), py::arg("lambda0_override") = Vec(),
      "Forward-simulate OD flows and link loads from the multilevel model.");

  m.def("lambda_transition_logpdf", &lambda_transition_logpdf,
        py::arg("lambda_t"), py::arg("lambda_prev"), py::arg("theta1_t"),
        py::arg("theta2_t"), py::arg("rho"));
  m.def("emission_logpdf", &emission_logpdf, py::arg("x"), py::arg("lambda_"),
        py::arg("phi"), py::arg("tau"));
  m.def("phi_prior_logpdf", &phi_prior_logpdf, py::arg("phi"),
        py::arg("alpha"), py::arg("beta_t"));

  // ---- particle filter ----------------------------------------------------
  py::class_<SirmConfig>(m, "SirmConfig")
      .def(py::init<>())
      .def_readwrite("n_particles", &SirmConfig::n_particles)
      .def_readwrite("n_moves", &SirmConfig::n_moves)
      .def_readwrite("proposal_burnin", &SirmConfig::proposal_burnin)
      .def_readwrite("seed", &SirmConfig::seed)
      .def_readwrite("chord_correction", &SirmConfig::chord_correction)
      .def_readwrite("mu_star_literal", &SirmConfig::mu_star_literal)
      .def_readwrite("resample_mode", &SirmConfig::resample_mode)
      .def_readwrite("adapt_fraction", &SirmConfig::adapt_fraction)
      .def_readwrite("surrogate_emission", &SirmConfig::surrogate_emission)
      .def_readwrite("surrogate_sd", &SirmConfig::surrogate_sd)
      .def_readwrite("lambda_init_sd", &SirmConfig::lambda_init_sd)
      .def_readwrite("lambda_init_anchor", &SirmConfig::lambda_init_anchor);

  py::class_<FilterDiagnostics>(m, "FilterDiagnostics")
      .def_readonly("ess", &FilterDiagnostics::ess)
      .def_readonly("acc_x", &FilterDiagnostics::acc_x)
      .def_readonly("acc_lambda", &FilterDiagnostics::acc_lambda)
      .def_readonly("acc_phi", &FilterDiagnostics::acc_phi)
      .def_readonly("ms_elapsed", &FilterDiagnostics::ms_elapsed);

  py::class_<FilterResult>(m, "FilterResult")
      .def_readonly("estimates", &FilterResult::estimates)
      .def_readonly("est_sd", &FilterResult::est_sd)
      .def_readonly("est_q05", &FilterResult::est_q05)
      .def_readonly("est_q95", &FilterResult::est_q95)
      .def_readonly("log_lambda_mean", &FilterResult::log_lambda_mean)
      .def_readonly("diag", &FilterResult::diag);

  m.def("run_filter", &run_filter, py::arg("y"), py::arg("A"),
        py::arg("schedule"), py::arg("params"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>(),
        "Sample-importance-resample-move particle filter constrained to the "
        "feasible polytope at every time step.");
  m.def("ess_from_log_weights", &ess_from_log_weights, py::arg("log_weights"));

  // ---- metrics -------------------------------------------------------------
  py::class_<ErrorReport>(m, "ErrorReport")
      .def_readonly("l1", &ErrorReport::l1)
      .def_readonly("l2", &ErrorReport::l2)
      .def_readonly("se_l1", &ErrorReport::se_l1)
      .def_readonly("se_l2", &ErrorReport::se_l2)
      .def_readonly("per_flow", &ErrorReport::per_flow);

  m.def("flow_errors", &flow_errors, py::arg("estimate"), py::arg("truth"));
  m.def("mann_whitney_p_greater", &mann_whitney_p_greater, py::arg("greater"),
        py::arg("lesser"));
  m.def("sample_median", &sample_median, py::arg("values"));

  // ---- study runner --------------------------------------------------------
  py::class_<StudyConfig>(m, "StudyConfig")
      .def(py::init<>())
      .def_readwrite("n_replicates", &StudyConfig::n_replicates)
      .def_readwrite("T", &StudyConfig::T)
      .def_readwrite("seed", &StudyConfig::seed)
      .def_readwrite("threads", &StudyConfig::threads)
      .def_readwrite("level_median", &StudyConfig::level_median)
      .def_readwrite("level_sd", &StudyConfig::level_sd)
      .def_readwrite("theta2_star", &StudyConfig::theta2_star)
      .def_readwrite("beta_star", &StudyConfig::beta_star)
      .def_readwrite("lambda0_jitter_sd", &StudyConfig::lambda0_jitter_sd)
      .def_readwrite("rho_model", &StudyConfig::rho_model)
      .def_readwrite("tau", &StudyConfig::tau)
      .def_readwrite("alpha", &StudyConfig::alpha)
      .def_readwrite("naive_phi", &StudyConfig::naive_phi)
      .def_readwrite("calib", &StudyConfig::calib)
      .def_readwrite("sirm", &StudyConfig::sirm)
      .def_readwrite("n_particles", &StudyConfig::n_particles)
      .def_property(
          "topologies",
          [](const StudyConfig& c) {
            std::vector<std::string> out;
            for (const Topology& t : c.topologies) {
              out.push_back(topology_name(t));
            }
            return out;
          },
          [](StudyConfig& c, const std::vector<std::string>& names) {
            c.topologies.clear();
            for (const std::string& n : names) {
              c.topologies.push_back(parse_topology(n));
            }
          });

  py::class_<StudyResult>(m, "StudyResult")
      .def_readonly("topology", &StudyResult::topology)
      .def_readonly("replicate", &StudyResult::replicate)
      .def_readonly("rel_l1", &StudyResult::rel_l1)
      .def_readonly("rel_l2", &StudyResult::rel_l2)
      .def_readonly("l1_two", &StudyResult::l1_two)
      .def_readonly("l2_two", &StudyResult::l2_two)
      .def_readonly("l1_naive", &StudyResult::l1_naive)
      .def_readonly("l2_naive", &StudyResult::l2_naive)
      .def_readonly("ess_median_two", &StudyResult::ess_median_two)
      .def_readonly("ess_median_naive", &StudyResult::ess_median_naive);

  py::class_<StudySummary>(m, "StudySummary")
      .def_readonly("topology", &StudySummary::topology)
      .def_readonly("n", &StudySummary::n)
      .def_readonly("mean_rel_l1", &StudySummary::mean_rel_l1)
      .def_readonly("sd_rel_l1", &StudySummary::sd_rel_l1)
      .def_readonly("mean_rel_l2", &StudySummary::mean_rel_l2)
      .def_readonly("sd_rel_l2", &StudySummary::sd_rel_l2)
      .def_readonly("mean_ess_two", &StudySummary::mean_ess_two)
      .def_readonly("mean_ess_naive", &StudySummary::mean_ess_naive);

  py::class_<StudyOutput>(m, "StudyOutput")
      .def_readonly("results", &StudyOutput::results)
      .def_readonly("summaries", &StudyOutput::summaries)
      .def_readonly("n_failed", &StudyOutput::n_failed)
      .def_readonly("failures", &StudyOutput::failures);

  m.def("run_study", &run_study, py::arg("config"),
        py::call_guard<py::gil_scoped_release>(),
        "Replicated naive-vs-two-stage comparison across topologies.");
  m.def("paper_desk_preset", &paper_desk_preset,
        "Desk-scale preset: chain3 / star(3) / star(4), 10 replicates, "
        "T=100, 500 particles.");

  // ---- CSV interop ---------------------------------------------------------
  m.def(
      "write_routing_csv",
      [](const RoutingMatrix& A, const std::string& path) {
        write_routing_csv(A, path);
      },
      py::arg("A"), py::arg("path"));
  m.def("read_routing_csv", &read_routing_csv, py::arg("path"));
  m.def("write_series_csv", &write_series_csv, py::arg("series"),
        py::arg("path"));
  m.def("read_series_csv", &read_series_csv, py::arg("path"));
  m.def("read_series_any", &read_series_any, py::arg("path"));
  m.def("schedule_hash", &schedule_hash, py::arg("schedule"));
}
