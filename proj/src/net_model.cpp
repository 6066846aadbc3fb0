#include "odeconv/net_model.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cctype>
#include <map>

namespace odeconv {
namespace {

std::string od_name(const std::string& a, const std::string& b) {
  return a + "->" + b;
}

void finish(RoutingMatrix& rm) {
  for (int i = 0; i < rm.n_links(); ++i) {
    for (int j = 0; j < rm.n_od(); ++j) {
      double v = rm.entries(i, j);
      if (v != 0.0 && v != 1.0) {
        throw NumericalError("routing matrix entry not binary");
      }
    }
  }
  for (int j = 0; j < rm.n_od(); ++j) {
    if (rm.entries.col(j).sum() == 0.0) {
      throw NumericalError("routing matrix has an all-zero column");
    }
  }
  rm.rank = numeric_rank(rm.entries);
}

RoutingMatrix build_chain3() {
  RoutingMatrix rm;
  rm.link_names = {"1->2", "2->1", "2->3", "3->2"};
  // ODs between distinct nodes, lexicographic by (origin, destination).
  const std::pair<int, int> ods[] = {{1, 2}, {1, 3}, {2, 1},
                                     {2, 3}, {3, 1}, {3, 2}};
  rm.entries = Mat::Zero(4, 6);
  std::map<std::pair<int, int>, int> link_idx = {
      {{1, 2}, 0}, {{2, 1}, 1}, {{2, 3}, 2}, {{3, 2}, 3}};
  int col = 0;
  for (auto [a, b] : ods) {
    rm.od_names.push_back(od_name(std::to_string(a), std::to_string(b)));
    // Walk the line from a to b one hop at a time.
    int cur = a;
    int step = (b > a) ? 1 : -1;
    while (cur != b) {
      rm.entries(link_idx.at({cur, cur + step}), col) = 1.0;
      cur += step;
    }
    ++col;
  }
  finish(rm);
  return rm;
}

RoutingMatrix build_star(int k) {
  if (k < 2) throw UsageError("star(k) requires k >= 2");
  RoutingMatrix rm;
  rm.entries = Mat::Zero(2 * k, k * k);
  for (int i = 1; i <= k; ++i) {
    rm.link_names.push_back(od_name(std::to_string(i), "r"));  // out of i
    rm.link_names.push_back(od_name("r", std::to_string(i)));  // into i
  }
  int col = 0;
  for (int a = 1; a <= k; ++a) {
    for (int b = 1; b <= k; ++b) {
      rm.od_names.push_back(od_name(std::to_string(a), std::to_string(b)));
      rm.entries(2 * (a - 1), col) = 1.0;      // out-link of a
      rm.entries(2 * (b - 1) + 1, col) = 1.0;  // in-link of b
      ++col;
    }
  }
  finish(rm);
  return rm;
}

RoutingMatrix build_two_router_star(int k1, int k2) {
  if (k1 < 1 || k2 < 1) {
    throw UsageError("two_router_star(k1,k2) requires k1,k2 >= 1");
  }
  int n_nodes = k1 + k2;
  RoutingMatrix rm;
  rm.entries = Mat::Zero(2 * n_nodes + 2, n_nodes * n_nodes);
  auto router_of = [&](int node) { return node <= k1 ? 1 : 2; };
  auto router_name = [](int r) { return "r" + std::to_string(r); };
  for (int i = 1; i <= n_nodes; ++i) {
    std::string r = router_name(router_of(i));
    rm.link_names.push_back(od_name(std::to_string(i), r));  // out of i
    rm.link_names.push_back(od_name(r, std::to_string(i)));  // into i
  }
  int inter12 = 2 * n_nodes;      // r1->r2
  int inter21 = 2 * n_nodes + 1;  // r2->r1
  rm.link_names.push_back("r1->r2");
  rm.link_names.push_back("r2->r1");
  int col = 0;
  for (int a = 1; a <= n_nodes; ++a) {
    for (int b = 1; b <= n_nodes; ++b) {
      rm.od_names.push_back(od_name(std::to_string(a), std::to_string(b)));
      rm.entries(2 * (a - 1), col) = 1.0;      // out-link of a
      rm.entries(2 * (b - 1) + 1, col) = 1.0;  // in-link of b
      int ra = router_of(a), rb = router_of(b);
      if (ra != rb) {
        rm.entries(ra == 1 ? inter12 : inter21, col) = 1.0;
      }
      ++col;
    }
  }
  finish(rm);
  return rm;
}

}  // namespace

int numeric_rank(const Mat& M, double rel_tol) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(M);
  const Vec& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  double cut = rel_tol * sv(0);
  int r = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++r;
  }
  return r;
}

RoutingMatrix build_topology(const Topology& topology) {
  switch (topology.kind) {
    case Topology::Kind::chain3:
      return build_chain3();
    case Topology::Kind::star:
      return build_star(topology.k);
    case Topology::Kind::two_router_star:
      return build_two_router_star(topology.k1, topology.k2);
  }
  throw UsageError("unknown topology kind");
}

Topology parse_topology(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  for (char& c : s) {
    if (c == '-') c = '_';
  }
  if (s == "chain3" || s == "chain") return Topology::Chain3();
  auto grab_ints = [&](size_t pos) {
    std::vector<int> out;
    std::string num;
    for (size_t i = pos; i < s.size(); ++i) {
      if (std::isdigit(static_cast<unsigned char>(s[i]))) {
        num += s[i];
      } else if (!num.empty()) {
        out.push_back(std::stoi(num));
        num.clear();
      }
    }
    if (!num.empty()) out.push_back(std::stoi(num));
    return out;
  };
  if (s.rfind("two_router_star", 0) == 0) {
    auto v = grab_ints(std::string("two_router_star").size());
    if (v.size() != 2) {
      throw UsageError("two_router_star needs two sizes, e.g. two_router_star(4,8)");
    }
    return Topology::TwoRouterStar(v[0], v[1]);
  }
  if (s.rfind("star", 0) == 0) {
    auto v = grab_ints(4);
    if (v.size() != 1) throw UsageError("star needs one size, e.g. star(3)");
    return Topology::Star(v[0]);
  }
  throw UsageError("unrecognized topology: " + text);
}

std::string topology_name(const Topology& topology) {
  switch (topology.kind) {
    case Topology::Kind::chain3:
      return "chain3";
    case Topology::Kind::star:
      return "star(" + std::to_string(topology.k) + ")";
    case Topology::Kind::two_router_star:
      return "two_router_star(" + std::to_string(topology.k1) + "," +
             std::to_string(topology.k2) + ")";
  }
  return "?";
}

FlowSeries aggregate(const FlowSeries& x, const RoutingMatrix& A) {
  if (x.dim() != A.n_od()) {
    throw UsageError("aggregate: series dimension " + std::to_string(x.dim()) +
                     " != n_od " + std::to_string(A.n_od()));
  }
  FlowSeries y;
  y.values = x.values * A.entries.transpose();
  y.interval_seconds = x.interval_seconds;
  y.names = A.link_names;
  return y;
}

int latent_dim(const RoutingMatrix& A) { return A.n_od() - numeric_rank(A.entries); }

}  // namespace odeconv
