#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "odeconv/kalman_calib.hpp"
#include "odeconv/regularizer.hpp"
#include "odeconv/sirm_filter.hpp"
#include "odeconv/study.hpp"
#include "odeconv/types.hpp"

namespace odeconv {

// Shortest round-trippable decimal rendering (printf %.17g).
std::string format_g17(double v);

// Routing matrix: header "link,<od names>", one 0/1 row per link.
void write_routing_csv(const RoutingMatrix& A, std::ostream& out);
void write_routing_csv(const RoutingMatrix& A, const std::string& path);
RoutingMatrix read_routing_csv(const std::string& path);

// Flow series (wide): header "t,<names>", one row per time (t = 1..T).
void write_series_csv(const FlowSeries& s, const std::string& path);
FlowSeries read_series_csv(const std::string& path);

// Calibration estimates (long: t, od_name, x_hat, V_hat) and the
// per-window parameter log (window_start, phi, loglik, evals, converged,
// then one lambda column per OD).
void write_calib_csv(const CalibEstimates& est, const std::string& path);
void write_calib_window_log(const CalibEstimates& est,
                            const std::string& path);
// Rebuilds estimates from the two files; phi_hat/warn per time are
// reconstructed from the window log (window length inferred).
CalibEstimates read_calib_csv(const std::string& est_path,
                              const std::string& log_path);

// Schedule (long: t, od_name, theta1, theta2) and its scalar sidecar
// (key=value lines: rho_model, tau, alpha, and comma-joined phi_t_hat).
void write_schedule_csv(const RegularizationSchedule& sched,
                        const std::vector<std::string>& od_names,
                        const std::string& path,
                        const std::string& sidecar_path);
RegularizationSchedule read_schedule_csv(const std::string& path,
                                         const std::string& sidecar_path,
                                         std::vector<std::string>* od_names =
                                             nullptr);

// Filter outputs: estimates (t, od_name, mean, sd, q05, q95) and
// diagnostics (t, ess, acc_x, acc_lambda, acc_phi, ms_elapsed).
void write_filter_csv(const FilterResult& res, const std::string& path);
void write_diagnostics_csv(const FilterDiagnostics& diag,
                           const std::string& path);

// Reads a flow series from either the wide format or a long estimates
// file (first data column per (t, od) row), detected from the header.
FlowSeries read_series_any(const std::string& path);

// Study outputs.
void write_study_results_csv(const std::vector<StudyResult>& results,
                             const std::string& path);
void write_study_summary_csv(const std::vector<StudySummary>& summaries,
                             const std::string& path);

// Stable content hash (FNV-1a over the rendered values) used in the
// simulation manifest.
std::string schedule_hash(const RegularizationSchedule& sched);

}  // namespace odeconv
