#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace odeconv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Inputs that violate a documented precondition (dimension mismatches,
/// invalid parameters). Maps to CLI exit code 1 when raised by bad flags.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failures at runtime (non-convergence, indefinite covariance).
/// Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg, double detail = 0.0)
      : std::runtime_error(msg), detail_(detail) {}
  /// Context-dependent scalar (e.g. final constraint violation, failing t).
  double detail() const { return detail_; }

 private:
  double detail_;
};

/// Binary link-by-OD incidence matrix with naming and rank metadata.
/// Rows are directed links, columns are origin-destination flows; entry
/// (i, j) is 1 iff OD flow j traverses link i.
struct RoutingMatrix {
  Mat entries;  // n_links x n_od, each entry exactly 0.0 or 1.0
  std::vector<std::string> link_names;
  std::vector<std::string> od_names;
  int rank = 0;  // row rank (singular values < 1e-10 * largest count as zero)

  int n_links() const { return static_cast<int>(entries.rows()); }
  int n_od() const { return static_cast<int>(entries.cols()); }
};

/// Time-indexed nonnegative flow vectors (either OD flows x_t or link
/// loads y_t), one row per measurement interval.
struct FlowSeries {
  Mat values;  // T x d, nonnegative
  int interval_seconds = 300;
  std::vector<std::string> names;  // length d

  int T() const { return static_cast<int>(values.rows()); }
  int dim() const { return static_cast<int>(values.cols()); }
};

/// Supported synthetic network shapes.
struct Topology {
  enum class Kind { chain3, star, two_router_star };
  Kind kind = Kind::chain3;
  int k = 0;   // star(k): number of edge nodes, k >= 2
  int k1 = 0;  // two_router_star: edge nodes on router 1, >= 1
  int k2 = 0;  // two_router_star: edge nodes on router 2, >= 1

  static Topology Chain3() { return {Kind::chain3, 0, 0, 0}; }
  static Topology Star(int k) { return {Kind::star, k, 0, 0}; }
  static Topology TwoRouterStar(int k1, int k2) {
    return {Kind::two_router_star, 0, k1, k2};
  }
};

}  // namespace odeconv
