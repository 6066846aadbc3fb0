#pragma once

#include <functional>
#include <utility>

#include "odeconv/rng.hpp"
#include "odeconv/types.hpp"

namespace odeconv {

/// Column-permuted split A = [A1 A2] with A1 (restricted to an
/// independent row set) invertible, following the classic decomposition
/// for OD polytopes: writing the permuted flow vector as (x1, x2),
/// feasibility means x1 = B*y_basis - C*x2 with x1, x2 >= 0.
struct PolytopeDecomposition {
  std::vector<int> column_perm;  // size n_od; first basic_count are basic
  int basic_count = 0;           // r = rank(A)
  Mat B;                         // r x r, inverse of A1 on the basis rows
  Mat C;                         // r x (n_od - r), B * A2 on the basis rows
  std::vector<int> row_basis;    // r independent rows of A
  std::vector<int> dropped_rows; // redundant rows (consistency-check set)

  int n_od() const { return static_cast<int>(column_perm.size()); }
  int free_count() const { return n_od() - basic_count; }

  /// Scatter a point given in permuted split coordinates back to the
  /// original OD order.
  Vec unsplit(const Vec& x1, const Vec& x2) const;
  /// Gather (x1, x2) from a point in original OD order.
  void split(const Vec& x, Vec& x1, Vec& x2) const;
  /// y restricted to the basis rows, premultiplied by B.
  Vec basis_rhs(const Vec& y) const;
};

/// Nonnegative point on {x >= 0, Ax = y} within tolerance.
struct FeasiblePoint {
  Vec x;
  double slack = 0.0;  // min over coordinates
};

PolytopeDecomposition decompose(const RoutingMatrix& A);

/// Max relative constraint violation: ||Ax - y||_inf / (1 + ||y||_inf).
double constraint_violation(const Vec& x, const RoutingMatrix& A, const Vec& y);

/// Iterative proportional fitting: cyclically rescales x on each link
/// constraint (multiply the coordinates crossing link i by y_i / (A_i x))
/// until the max relative violation drops below tol. Coordinates on a
/// link with y_i = 0 are zeroed before iterating. Throws NumericalError
/// (carrying the final violation) if max_iter sweeps do not converge.
FeasiblePoint ipfp_project(const Vec& x0, const RoutingMatrix& A, const Vec& y,
                           double tol = 1e-9, int max_iter = 300);

/// Feasible start used throughout: IPFP from the all-ones vector scaled
/// so total OD traffic roughly matches total observed traffic
/// (constant sum(y)/sum(A)).
FeasiblePoint feasible_start(const RoutingMatrix& A, const Vec& y,
                             double tol = 1e-9, int max_iter = 300);

/// Exact two-sided step interval along a null-space direction: largest
/// (l, h) with x2 + u*d >= 0 and x1 - u*w >= 0 for all u in [l, h].
/// Empty index sets contribute +-inf; the result always brackets 0.
std::pair<double, double> segment_bounds(const Vec& x1, const Vec& x2,
                                         const Vec& w, const Vec& d);

/// One random-directions Metropolis step on the polytope:
/// draw an isotropic direction d in the free coordinates, map to the
/// full-space chord via w = C d, draw u ~ Uniform(l, h) on the feasible
/// segment, and accept by the log_target ratio. With chord_correction,
/// the acceptance ratio includes the interval-length factor
/// (h-l at x) / (h'-l' at x*); the chord is direction-invariant so the
/// factor is identically 1 and this merely guards the exactness claim.
FeasiblePoint rda_step(const FeasiblePoint& x,
                       const PolytopeDecomposition& decomp,
                       const std::function<double(const Vec&)>& log_target,
                       RngStream& rng, bool chord_correction = true);

/// Workspace-reusing RDA chain over split coordinates; used by the
/// particle filter's hot loops. Target is evaluated on split coords.
class RdaChain {
 public:
  explicit RdaChain(const PolytopeDecomposition& decomp)
      : decomp_(decomp),
        d_(decomp.free_count()),
        w_(decomp.basic_count),
        x1p_(decomp.basic_count),
        x2p_(decomp.free_count()) {}

  /// Run nsteps of RDA from (x1, x2) in place against log_target(x1, x2).
  /// Returns the number of accepted steps; log_t holds the current
  /// target value on exit (pass the value at entry).
  int run(Vec& x1, Vec& x2, double& log_t,
          const std::function<double(const Vec&, const Vec&)>& log_target,
          int nsteps, RngStream& rng, bool chord_correction = true);

 private:
  const PolytopeDecomposition& decomp_;
  Vec d_, w_, x1p_, x2p_;
};

}  // namespace odeconv
