#include "odeconv/io.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>

#include "odeconv/net_model.hpp"

namespace odeconv {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::vector<std::string>> read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open file: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(split_csv(line));
  }
  if (rows.empty()) throw UsageError("empty file: " + path);
  return rows;
}

double parse_num(const std::string& s, const std::string& path) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError("bad numeric value '" + s + "' in " + path);
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write file: " + path);
  return out;
}

// Long-format (t, od_name, v...) table, returned as per-column matrices.
struct LongTable {
  std::vector<std::string> od_names;
  std::vector<Mat> cols;  // each T x n_od
  int T = 0;
};

LongTable read_long(const std::string& path, std::size_t n_values) {
  auto rows = read_rows(path);
  if (rows[0].size() != 2 + n_values) {
    throw UsageError("unexpected column count in " + path);
  }
  LongTable tab;
  std::map<std::string, int> od_index;
  std::vector<std::array<double, 4>> vals;
  std::vector<std::pair<int, int>> keys;  // (t, od)
  int t_max = 0;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 2 + n_values) {
      throw UsageError("ragged row in " + path);
    }
    int t = static_cast<int>(parse_num(row[0], path));
    if (t < 1) throw UsageError("time index must be >= 1 in " + path);
    auto [it, inserted] =
        od_index.try_emplace(row[1], static_cast<int>(tab.od_names.size()));
    if (inserted) tab.od_names.push_back(row[1]);
    std::array<double, 4> v{};
    for (std::size_t k = 0; k < n_values; ++k) {
      v[k] = parse_num(row[2 + k], path);
    }
    keys.emplace_back(t, it->second);
    vals.push_back(v);
    t_max = std::max(t_max, t);
  }
  tab.T = t_max;
  const int n = static_cast<int>(tab.od_names.size());
  tab.cols.assign(n_values, Mat::Constant(t_max, n,
                                          std::numeric_limits<double>::quiet_NaN()));
  for (std::size_t r = 0; r < keys.size(); ++r) {
    for (std::size_t k = 0; k < n_values; ++k) {
      tab.cols[k](keys[r].first - 1, keys[r].second) = vals[r][k];
    }
  }
  for (const Mat& m : tab.cols) {
    if (m.hasNaN()) throw UsageError("missing (t, od) cells in " + path);
  }
  return tab;
}

void write_long_header(std::ofstream& out, const std::string& value_cols) {
  out << "t,od_name," << value_cols << "\n";
}

}  // namespace

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_routing_csv(const RoutingMatrix& A, std::ostream& out) {
  out << "link";
  for (const std::string& od : A.od_names) out << "," << od;
  out << "\n";
  for (int i = 0; i < A.n_links(); ++i) {
    out << A.link_names[i];
    for (int j = 0; j < A.n_od(); ++j) {
      out << "," << (A.entries(i, j) != 0.0 ? 1 : 0);
    }
    out << "\n";
  }
}

void write_routing_csv(const RoutingMatrix& A, const std::string& path) {
  std::ofstream out = open_out(path);
  write_routing_csv(A, out);
}

RoutingMatrix read_routing_csv(const std::string& path) {
  auto rows = read_rows(path);
  if (rows[0].size() < 2 || rows[0][0] != "link") {
    throw UsageError("routing CSV must start with a 'link' header: " + path);
  }
  RoutingMatrix A;
  A.od_names.assign(rows[0].begin() + 1, rows[0].end());
  const int n = static_cast<int>(A.od_names.size());
  const int m = static_cast<int>(rows.size()) - 1;
  if (m < 1) throw UsageError("routing CSV has no link rows: " + path);
  A.entries.resize(m, n);
  for (int i = 0; i < m; ++i) {
    if (static_cast<int>(rows[i + 1].size()) != n + 1) {
      throw UsageError("ragged row in " + path);
    }
    A.link_names.push_back(rows[i + 1][0]);
    for (int j = 0; j < n; ++j) {
      double v = parse_num(rows[i + 1][j + 1], path);
      if (v != 0.0 && v != 1.0) {
        throw UsageError("routing entries must be 0 or 1 in " + path);
      }
      A.entries(i, j) = v;
    }
  }
  A.rank = numeric_rank(A.entries);
  return A;
}

void write_series_csv(const FlowSeries& s, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "t";
  for (const std::string& name : s.names) out << "," << name;
  out << "\n";
  for (int t = 0; t < s.T(); ++t) {
    out << (t + 1);
    for (int j = 0; j < s.dim(); ++j) {
      out << "," << format_g17(s.values(t, j));
    }
    out << "\n";
  }
}

FlowSeries read_series_csv(const std::string& path) {
  auto rows = read_rows(path);
  if (rows[0].size() < 2 || rows[0][0] != "t") {
    throw UsageError("series CSV must start with a 't' header: " + path);
  }
  FlowSeries s;
  s.names.assign(rows[0].begin() + 1, rows[0].end());
  const int d = static_cast<int>(s.names.size());
  const int T = static_cast<int>(rows.size()) - 1;
  s.values.resize(T, d);
  for (int t = 0; t < T; ++t) {
    if (static_cast<int>(rows[t + 1].size()) != d + 1) {
      throw UsageError("ragged row in " + path);
    }
    for (int j = 0; j < d; ++j) {
      s.values(t, j) = parse_num(rows[t + 1][j + 1], path);
    }
  }
  return s;
}

void write_calib_csv(const CalibEstimates& est, const std::string& path) {
  std::ofstream out = open_out(path);
  write_long_header(out, "x_hat,V_hat");
  for (int t = 0; t < est.x_hat.rows(); ++t) {
    for (int i = 0; i < est.x_hat.cols(); ++i) {
      out << (t + 1) << "," << est.od_names[i] << ","
          << format_g17(est.x_hat(t, i)) << "," << format_g17(est.V_hat(t, i))
          << "\n";
    }
  }
}

void write_calib_window_log(const CalibEstimates& est,
                            const std::string& path) {
  std::ofstream out = open_out(path);
  out << "window_start,phi,loglik,evals,converged";
  for (const std::string& od : est.od_names) out << "," << od;
  out << "\n";
  for (const WindowFit& wf : est.window_fits) {
    out << (wf.start + 1) << "," << format_g17(wf.phi) << ","
        << format_g17(wf.loglik) << "," << wf.evals << ","
        << (wf.converged ? 1 : 0);
    for (int i = 0; i < wf.lambda.size(); ++i) {
      out << "," << format_g17(wf.lambda(i));
    }
    out << "\n";
  }
}

CalibEstimates read_calib_csv(const std::string& est_path,
                              const std::string& log_path) {
  LongTable tab = read_long(est_path, 2);
  CalibEstimates est;
  est.od_names = tab.od_names;
  est.x_hat = tab.cols[0];
  est.V_hat = tab.cols[1];
  const int T = tab.T;

  auto rows = read_rows(log_path);
  if (rows[0].size() < 5 || rows[0][0] != "window_start") {
    throw UsageError("window log must start with 'window_start': " + log_path);
  }
  const int n_windows = static_cast<int>(rows.size()) - 1;
  if (n_windows < 1 || n_windows > T) {
    throw UsageError("window log inconsistent with estimates: " + log_path);
  }
  est.window_fits.resize(n_windows);
  for (int s = 0; s < n_windows; ++s) {
    const auto& row = rows[s + 1];
    WindowFit& wf = est.window_fits[s];
    wf.start = static_cast<int>(parse_num(row[0], log_path)) - 1;
    wf.phi = parse_num(row[1], log_path);
    wf.loglik = parse_num(row[2], log_path);
    wf.evals = static_cast<int>(parse_num(row[3], log_path));
    wf.converged = parse_num(row[4], log_path) != 0.0;
    wf.lambda.resize(static_cast<int>(row.size()) - 5);
    for (int i = 0; i + 5 < static_cast<int>(row.size()); ++i) {
      wf.lambda(i) = parse_num(row[i + 5], log_path);
    }
  }
  const int W = T - n_windows + 1;
  const int half = W / 2;
  est.phi_hat.resize(T);
  est.loglik = Vec::Zero(T);
  est.warn.assign(T, 0);
  for (int t = 0; t < T; ++t) {
    int s = std::clamp(t - half, 0, n_windows - 1);
    est.phi_hat(t) = est.window_fits[s].phi;
    est.loglik(t) = est.window_fits[s].loglik;
    est.warn[t] = est.window_fits[s].converged ? 0 : 1;
  }
  return est;
}

void write_schedule_csv(const RegularizationSchedule& sched,
                        const std::vector<std::string>& od_names,
                        const std::string& path,
                        const std::string& sidecar_path) {
  if (static_cast<int>(od_names.size()) != sched.n_od()) {
    throw UsageError("write_schedule_csv: od name count mismatch");
  }
  std::ofstream out = open_out(path);
  write_long_header(out, "theta1,theta2");
  for (int t = 0; t < sched.T(); ++t) {
    for (int i = 0; i < sched.n_od(); ++i) {
      out << (t + 1) << "," << od_names[i] << ","
          << format_g17(sched.theta1(t, i)) << ","
          << format_g17(sched.theta2(t, i)) << "\n";
    }
  }
  std::ofstream side = open_out(sidecar_path);
  side << "rho_model=" << format_g17(sched.rho_model) << "\n";
  side << "tau=" << format_g17(sched.tau) << "\n";
  side << "alpha=" << format_g17(sched.alpha) << "\n";
  side << "phi_t_hat=";
  for (int t = 0; t < sched.phi_t_hat.size(); ++t) {
    if (t > 0) side << ",";
    side << format_g17(sched.phi_t_hat(t));
  }
  side << "\n";
}

RegularizationSchedule read_schedule_csv(const std::string& path,
                                         const std::string& sidecar_path,
                                         std::vector<std::string>* od_names) {
  LongTable tab = read_long(path, 2);
  RegularizationSchedule sched;
  sched.theta1 = tab.cols[0];
  sched.theta2 = tab.cols[1];
  if (od_names != nullptr) *od_names = tab.od_names;

  std::ifstream side(sidecar_path);
  if (!side) throw UsageError("cannot open file: " + sidecar_path);
  std::string line;
  bool have_phi = false;
  while (std::getline(side, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("sidecar line is not key=value: " + sidecar_path);
    }
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    if (key == "rho_model") {
      sched.rho_model = parse_num(val, sidecar_path);
    } else if (key == "tau") {
      sched.tau = parse_num(val, sidecar_path);
    } else if (key == "alpha") {
      sched.alpha = parse_num(val, sidecar_path);
    } else if (key == "phi_t_hat") {
      auto parts = split_csv(val);
      sched.phi_t_hat.resize(static_cast<int>(parts.size()));
      for (std::size_t k = 0; k < parts.size(); ++k) {
        sched.phi_t_hat(static_cast<int>(k)) =
            parse_num(parts[k], sidecar_path);
      }
      have_phi = true;
    } else {
      throw UsageError("unknown sidecar key '" + key + "' in " + sidecar_path);
    }
  }
  if (!have_phi || sched.phi_t_hat.size() != sched.theta1.rows()) {
    throw UsageError("sidecar phi_t_hat missing or wrong length: " +
                     sidecar_path);
  }
  return sched;
}

void write_filter_csv(const FilterResult& res, const std::string& path) {
  std::ofstream out = open_out(path);
  write_long_header(out, "mean,sd,q05,q95");
  const FlowSeries& est = res.estimates;
  for (int t = 0; t < est.T(); ++t) {
    for (int i = 0; i < est.dim(); ++i) {
      out << (t + 1) << "," << est.names[i] << ","
          << format_g17(est.values(t, i)) << "," << format_g17(res.est_sd(t, i))
          << "," << format_g17(res.est_q05(t, i)) << ","
          << format_g17(res.est_q95(t, i)) << "\n";
    }
  }
}

void write_diagnostics_csv(const FilterDiagnostics& diag,
                           const std::string& path) {
  std::ofstream out = open_out(path);
  out << "t,ess,acc_x,acc_lambda,acc_phi,ms_elapsed\n";
  for (int t = 0; t < diag.ess.size(); ++t) {
    out << (t + 1) << "," << format_g17(diag.ess(t)) << ","
        << format_g17(diag.acc_x(t)) << "," << format_g17(diag.acc_lambda(t))
        << "," << format_g17(diag.acc_phi(t)) << ","
        << format_g17(diag.ms_elapsed(t)) << "\n";
  }
}

FlowSeries read_series_any(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open file: " + path);
  std::string header;
  if (!std::getline(in, header)) throw UsageError("empty file: " + path);
  in.close();
  auto cols = split_csv(header);
  if (cols.size() >= 3 && cols[0] == "t" && cols[1] == "od_name") {
    LongTable tab = read_long(path, cols.size() - 2);
    FlowSeries s;
    s.values = tab.cols[0];
    s.names = tab.od_names;
    return s;
  }
  return read_series_csv(path);
}

void write_study_results_csv(const std::vector<StudyResult>& results,
                             const std::string& path) {
  std::ofstream out = open_out(path);
  out << "topology,replicate,rel_l1,rel_l2,l1_two_stage,l2_two_stage,"
         "l1_naive,l2_naive,ess_median_two_stage,ess_median_naive\n";
  for (const StudyResult& r : results) {
    out << r.topology << "," << r.replicate << "," << format_g17(r.rel_l1)
        << "," << format_g17(r.rel_l2) << "," << format_g17(r.l1_two) << ","
        << format_g17(r.l2_two) << "," << format_g17(r.l1_naive) << ","
        << format_g17(r.l2_naive) << "," << format_g17(r.ess_median_two)
        << "," << format_g17(r.ess_median_naive) << "\n";
  }
}

void write_study_summary_csv(const std::vector<StudySummary>& summaries,
                             const std::string& path) {
  std::ofstream out = open_out(path);
  out << "topology,n,mean_rel_l1,sd_rel_l1,mean_rel_l2,sd_rel_l2,"
         "mean_ess_median_two_stage,mean_ess_median_naive\n";
  for (const StudySummary& s : summaries) {
    out << s.topology << "," << s.n << "," << format_g17(s.mean_rel_l1) << ","
        << format_g17(s.sd_rel_l1) << "," << format_g17(s.mean_rel_l2) << ","
        << format_g17(s.sd_rel_l2) << "," << format_g17(s.mean_ess_two) << ","
        << format_g17(s.mean_ess_naive) << "\n";
  }
}

std::string schedule_hash(const RegularizationSchedule& sched) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  mix(format_g17(sched.rho_model));
  mix(format_g17(sched.tau));
  mix(format_g17(sched.alpha));
  for (int t = 0; t < sched.T(); ++t) {
    for (int i = 0; i < sched.n_od(); ++i) {
      mix(format_g17(sched.theta1(t, i)));
      mix(format_g17(sched.theta2(t, i)));
    }
  }
  for (int t = 0; t < sched.phi_t_hat.size(); ++t) {
    mix(format_g17(sched.phi_t_hat(t)));
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace odeconv
