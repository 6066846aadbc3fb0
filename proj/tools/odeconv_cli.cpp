#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "odeconv/config.hpp"
#include "odeconv/io.hpp"
#include "odeconv/metrics.hpp"
#include "odeconv/multilevel_ssm.hpp"
#include "odeconv/net_model.hpp"
#include "odeconv/regularizer.hpp"
#include "odeconv/study.hpp"

namespace {

using namespace odeconv;

RoutingMatrix load_routing(const std::string& topology_str,
                           const std::string& routing_path) {
  if (!topology_str.empty() && !routing_path.empty()) {
    throw UsageError("give either --topology or --routing, not both");
  }
  if (!topology_str.empty()) {
    return build_topology(parse_topology(topology_str));
  }
  if (!routing_path.empty()) {
    return read_routing_csv(routing_path);
  }
  throw UsageError("one of --topology or --routing is required");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage deconvolution of origin-destination flows from "
               "link loads"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path,
                 "Flat key=value configuration file applied before flags");

  // ---- topology ----
  auto* cmd_topo = app.add_subcommand(
      "topology", "Emit the routing matrix of a built-in topology as CSV");
  std::string topo_kind = "chain3";
  int topo_k = 0, topo_k1 = 0, topo_k2 = 0;
  std::string topo_out;
  cmd_topo->add_option("--kind", topo_kind,
                       "chain3 | star | two_router_star (or e.g. 'star(4)')");
  cmd_topo->add_option("--k", topo_k, "edge-node count for star");
  cmd_topo->add_option("--k1", topo_k1, "router-1 edge nodes");
  cmd_topo->add_option("--k2", topo_k2, "router-2 edge nodes");
  cmd_topo->add_option("--out", topo_out, "output CSV (default stdout)");

  // ---- simulate ----
  auto* cmd_sim = app.add_subcommand(
      "simulate", "Draw a synthetic truth path and its link loads");
  std::string sim_topology, sim_routing, sim_schedule, sim_sidecar;
  std::string sim_out_x = "truth_x.csv", sim_out_y = "loads_y.csv";
  std::string sim_manifest;
  int sim_T = 0;
  double sim_theta1 = 0.0, sim_theta2 = 0.05, sim_beta = 0.3;
  std::uint64_t sim_seed = 0;
  cmd_sim->add_option("--topology", sim_topology, "built-in topology name");
  cmd_sim->add_option("--routing", sim_routing, "routing-matrix CSV");
  cmd_sim->add_option("--schedule", sim_schedule,
                      "schedule CSV (with --sidecar); omit for a constant "
                      "schedule");
  cmd_sim->add_option("--sidecar", sim_sidecar, "schedule sidecar file");
  cmd_sim->add_option("--T", sim_T,
                      "time points (required without --schedule)");
  cmd_sim->add_option("--theta1", sim_theta1, "constant drift");
  cmd_sim->add_option("--theta2", sim_theta2, "constant innovation variance");
  cmd_sim->add_option("--beta", sim_beta, "constant scale center");
  cmd_sim->add_option("--seed", sim_seed, "RNG seed");
  cmd_sim->add_option("--out-x", sim_out_x, "truth flow CSV");
  cmd_sim->add_option("--out-y", sim_out_y, "link-load CSV");
  cmd_sim->add_option("--manifest", sim_manifest,
                      "JSON manifest (seed, topology, schedule hash)");

  // ---- calibrate ----
  auto* cmd_cal = app.add_subcommand(
      "calibrate", "Windowed state-space calibration from link loads");
  std::string cal_topology, cal_routing, cal_y;
  std::string cal_out = "calib_estimates.csv";
  std::string cal_log = "calib_windows.csv";
  std::uint64_t cal_seed = 0;
  int cal_window = -1, cal_evals = -1, cal_threads = -1;
  std::string cal_mode;
  cmd_cal->add_option("--topology", cal_topology, "built-in topology name");
  cmd_cal->add_option("--routing", cal_routing, "routing-matrix CSV");
  cmd_cal->add_option("--y", cal_y, "link-load series CSV")->required();
  cmd_cal->add_option("--out-est", cal_out, "estimates CSV");
  cmd_cal->add_option("--out-log", cal_log, "per-window parameter log CSV");
  cmd_cal->add_option("--seed", cal_seed, "RNG seed (calibration is "
                                          "deterministic; accepted for "
                                          "interface uniformity)");
  cmd_cal->add_option("--window", cal_window, "window length override");
  cmd_cal->add_option("--max-evals", cal_evals, "optimizer budget override");
  cmd_cal->add_option("--mode", cal_mode, "warm | parallel");
  cmd_cal->add_option("--threads", cal_threads, "parallel-mode threads");

  // ---- schedule ----
  auto* cmd_sch = app.add_subcommand(
      "schedule", "Turn calibration estimates into a regularization schedule");
  std::string sch_topology, sch_routing, sch_est, sch_log, sch_y;
  std::string sch_out = "schedule.csv", sch_side = "schedule_sidecar.txt";
  bool sch_naive = false;
  int sch_T = 0;
  cmd_sch->add_option("--topology", sch_topology, "built-in topology name");
  cmd_sch->add_option("--routing", sch_routing, "routing-matrix CSV");
  cmd_sch->add_option("--est", sch_est, "calibration estimates CSV");
  cmd_sch->add_option("--log", sch_log, "calibration window log CSV");
  cmd_sch->add_option("--y", sch_y, "link-load series CSV");
  cmd_sch->add_option("--out", sch_out, "schedule CSV");
  cmd_sch->add_option("--sidecar", sch_side, "scalar sidecar file");
  cmd_sch->add_flag("--naive", sch_naive, "emit the uninformative schedule");
  cmd_sch->add_option("--T", sch_T, "time points (naive schedule only)");

  // ---- filter ----
  auto* cmd_fil = app.add_subcommand(
      "filter", "Run the particle filter under a schedule");
  std::string fil_topology, fil_routing, fil_y, fil_schedule, fil_side;
  std::string fil_out = "filter_estimates.csv";
  std::string fil_diag = "filter_diagnostics.csv";
  std::uint64_t fil_seed = 0;
  int fil_particles = -1, fil_moves = -1;
  cmd_fil->add_option("--topology", fil_topology, "built-in topology name");
  cmd_fil->add_option("--routing", fil_routing, "routing-matrix CSV");
  cmd_fil->add_option("--y", fil_y, "link-load series CSV")->required();
  cmd_fil->add_option("--schedule", fil_schedule, "schedule CSV")->required();
  cmd_fil->add_option("--sidecar", fil_side, "schedule sidecar")->required();
  cmd_fil->add_option("--out", fil_out, "estimates CSV");
  cmd_fil->add_option("--diag", fil_diag, "diagnostics CSV");
  cmd_fil->add_option("--seed", fil_seed, "RNG seed");
  cmd_fil->add_option("--n-particles", fil_particles, "particle count");
  cmd_fil->add_option("--n-moves", fil_moves, "move sweeps per time");

  // ---- evaluate ----
  auto* cmd_eval = app.add_subcommand(
      "evaluate", "Time-averaged error norms of an estimate vs the truth");
  std::string ev_est, ev_truth;
  bool ev_per_flow = false;
  cmd_eval->add_option("--est", ev_est, "estimate series CSV")->required();
  cmd_eval->add_option("--truth", ev_truth, "truth series CSV")->required();
  cmd_eval->add_flag("--per-flow", ev_per_flow, "also print per-OD errors");

  // ---- study ----
  auto* cmd_study = app.add_subcommand(
      "study", "Replicated naive-vs-two-stage comparison");
  std::string study_preset, study_topos, study_dir = ".";
  int study_reps = -1, study_T = -1, study_particles = -1, study_threads = -1;
  std::uint64_t study_seed = 0;
  cmd_study->add_option("--preset", study_preset, "paper-desk");
  cmd_study->add_option("--topologies", study_topos,
                        "comma-separated list, e.g. chain3,star(3)");
  cmd_study->add_option("--replicates", study_reps, "replicates per topology");
  cmd_study->add_option("--T", study_T, "time points");
  cmd_study->add_option("--n-particles", study_particles, "particle count");
  cmd_study->add_option("--seed", study_seed, "base seed");
  cmd_study->add_option("--threads", study_threads, "parallel replicates");
  cmd_study->add_option("--out-dir", study_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);  // prints the message; 0 for --help
    return code == 0 ? 0 : 1;
  }

  try {
    PipelineConfig pcfg;
    if (!config_path.empty()) pcfg = parse_config_file(config_path);

    if (cmd_topo->parsed()) {
      Topology topo;
      if (topo_kind.find_first_of("(0123456789") != std::string::npos) {
        topo = parse_topology(topo_kind);
      } else if (topo_kind == "chain3" || topo_kind == "chain") {
        topo = Topology::Chain3();
      } else if (topo_kind == "star") {
        if (topo_k < 2) throw UsageError("star needs --k >= 2");
        topo = Topology::Star(topo_k);
      } else if (topo_kind == "two_router_star") {
        if (topo_k1 < 1 || topo_k2 < 1) {
          throw UsageError("two_router_star needs --k1 and --k2");
        }
        topo = Topology::TwoRouterStar(topo_k1, topo_k2);
      } else {
        throw UsageError("unknown topology kind '" + topo_kind + "'");
      }
      RoutingMatrix A = build_topology(topo);
      if (topo_out.empty()) {
        write_routing_csv(A, std::cout);
      } else {
        write_routing_csv(A, topo_out);
      }
    } else if (cmd_sim->parsed()) {
      RoutingMatrix A = load_routing(sim_topology, sim_routing);
      RegularizationSchedule sched;
      if (!sim_schedule.empty()) {
        if (sim_sidecar.empty()) {
          throw UsageError("--schedule requires --sidecar");
        }
        sched = read_schedule_csv(sim_schedule, sim_sidecar);
        if (sched.n_od() != A.n_od()) {
          throw UsageError("schedule OD count does not match the topology");
        }
      } else {
        if (sim_T < 1) throw UsageError("--T is required without --schedule");
        sched.rho_model = pcfg.rho_model;
        sched.tau = pcfg.tau;
        sched.alpha = pcfg.alpha;
        sched.theta1 = Mat::Constant(sim_T, A.n_od(), sim_theta1);
        sched.theta2 = Mat::Constant(sim_T, A.n_od(), sim_theta2);
        sched.phi_t_hat = Vec::Constant(sim_T, sim_beta);
      }
      SimResult sim =
          simulate(A, sched, to_model_params(pcfg), sched.T(), sim_seed);
      write_series_csv(sim.x, sim_out_x);
      write_series_csv(sim.y, sim_out_y);
      if (!sim_manifest.empty()) {
        nlohmann::json man;
        man["seed"] = sim_seed;
        man["topology"] = sim_topology.empty()
                              ? sim_routing
                              : topology_name(parse_topology(sim_topology));
        man["schedule_hash"] = schedule_hash(sched);
        man["T"] = sched.T();
        std::ofstream out(sim_manifest);
        if (!out) throw UsageError("cannot write file: " + sim_manifest);
        out << man.dump(2) << "\n";
      }
    } else if (cmd_cal->parsed()) {
      RoutingMatrix A = load_routing(cal_topology, cal_routing);
      FlowSeries y = read_series_csv(cal_y);
      CalibConfig ccfg = to_calib_config(pcfg);
      if (cal_window > 0) ccfg.window = cal_window;
      if (cal_evals > 0) ccfg.max_evals = cal_evals;
      if (!cal_mode.empty()) ccfg.window_mode = cal_mode;
      if (cal_threads > 0) ccfg.threads = cal_threads;
      CalibEstimates est = run_calibration(y, A, ccfg);
      write_calib_csv(est, cal_out);
      write_calib_window_log(est, cal_log);
    } else if (cmd_sch->parsed()) {
      if (sch_naive) {
        RoutingMatrix A = load_routing(sch_topology, sch_routing);
        int T = sch_T;
        if (T < 1 && !sch_y.empty()) T = read_series_csv(sch_y).T();
        if (T < 1) throw UsageError("--naive needs --T or --y");
        RegularizationSchedule sched = naive_schedule(
            A.n_od(), T, pcfg.alpha, pcfg.naive_phi, pcfg.rho_model, pcfg.tau);
        write_schedule_csv(sched, A.od_names, sch_out, sch_side);
      } else {
        if (sch_est.empty() || sch_log.empty() || sch_y.empty()) {
          throw UsageError("data-driven schedule needs --est, --log and --y");
        }
        RoutingMatrix A = load_routing(sch_topology, sch_routing);
        CalibEstimates est = read_calib_csv(sch_est, sch_log);
        FlowSeries y = read_series_csv(sch_y);
        RegularizationSchedule sched =
            compute_schedule(est, A, y, pcfg.rho_model, pcfg.alpha,
                             pcfg.floor_val, pcfg.tau);
        write_schedule_csv(sched, est.od_names, sch_out, sch_side);
      }
    } else if (cmd_fil->parsed()) {
      RoutingMatrix A = load_routing(fil_topology, fil_routing);
      FlowSeries y = read_series_csv(fil_y);
      RegularizationSchedule sched = read_schedule_csv(fil_schedule, fil_side);
      if (sched.n_od() != A.n_od()) {
        throw UsageError("schedule OD count does not match the topology");
      }
      SirmConfig fcfg = to_sirm_config(pcfg);
      fcfg.seed = fil_seed;
      if (fil_particles > 0) fcfg.n_particles = fil_particles;
      if (fil_moves >= 0) fcfg.n_moves = fil_moves;
      FilterResult res = run_filter(y, A, sched, to_model_params(pcfg), fcfg);
      write_filter_csv(res, fil_out);
      write_diagnostics_csv(res.diag, fil_diag);
    } else if (cmd_eval->parsed()) {
      FlowSeries est = read_series_any(ev_est);
      FlowSeries truth = read_series_any(ev_truth);
      ErrorReport rep = flow_errors(est, truth);
      std::cout << "l1=" << format_g17(rep.l1) << "\n";
      std::cout << "l2=" << format_g17(rep.l2) << "\n";
      std::cout << "se_l1=" << format_g17(rep.se_l1) << "\n";
      std::cout << "se_l2=" << format_g17(rep.se_l2) << "\n";
      if (ev_per_flow) {
        for (int i = 0; i < rep.per_flow.size(); ++i) {
          std::cout << "per_flow," << truth.names[i] << ","
                    << format_g17(rep.per_flow(i)) << "\n";
        }
      }
    } else if (cmd_study->parsed()) {
      StudyConfig scfg;
      if (study_preset == "paper-desk") {
        scfg = paper_desk_preset();
      } else if (!study_preset.empty()) {
        throw UsageError("unknown preset '" + study_preset + "'");
      } else {
        scfg.calib = to_calib_config(pcfg);
        scfg.sirm = to_sirm_config(pcfg);
        scfg.rho_model = pcfg.rho_model;
        scfg.tau = pcfg.tau;
        scfg.alpha = pcfg.alpha;
        scfg.naive_phi = pcfg.naive_phi;
        scfg.n_particles = pcfg.n_particles;
      }
      if (!study_topos.empty()) {
        scfg.topologies.clear();
        std::string cur;
        int depth = 0;
        for (char c : study_topos + ",") {
          if (c == '(') ++depth;
          if (c == ')') --depth;
          if (c == ',' && depth == 0) {
            if (!cur.empty()) scfg.topologies.push_back(parse_topology(cur));
            cur.clear();
          } else {
            cur += c;
          }
        }
      }
      if (scfg.topologies.empty()) {
        throw UsageError("study needs --preset paper-desk or --topologies");
      }
      if (study_reps > 0) scfg.n_replicates = study_reps;
      if (study_T > 0) scfg.T = study_T;
      if (study_particles > 0) scfg.n_particles = study_particles;
      if (study_threads > 0) scfg.threads = study_threads;
      scfg.seed = study_seed;
      StudyOutput out = run_study(scfg);
      write_study_results_csv(out.results, study_dir + "/study_results.csv");
      write_study_summary_csv(out.summaries, study_dir + "/study_summary.csv");
      for (const StudySummary& s : out.summaries) {
        std::cout << s.topology << ": rel_l2 " << s.mean_rel_l2 << " +/- "
                  << s.sd_rel_l2 << ", rel_l1 " << s.mean_rel_l1 << " +/- "
                  << s.sd_rel_l1 << " (n=" << s.n << ")\n";
      }
      if (out.n_failed > 0) {
        std::cout << "failed replicates: " << out.n_failed << "\n";
        for (const std::string& f : out.failures) {
          std::cout << "  " << f << "\n";
        }
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
