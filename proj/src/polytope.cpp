#include "odeconv/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace odeconv {

Vec PolytopeDecomposition::unsplit(const Vec& x1, const Vec& x2) const {
  Vec x(n_od());
  for (int i = 0; i < basic_count; ++i) x(column_perm[i]) = x1(i);
  for (int i = 0; i < free_count(); ++i) x(column_perm[basic_count + i]) = x2(i);
  return x;
}

void PolytopeDecomposition::split(const Vec& x, Vec& x1, Vec& x2) const {
  x1.resize(basic_count);
  x2.resize(free_count());
  for (int i = 0; i < basic_count; ++i) x1(i) = x(column_perm[i]);
  for (int i = 0; i < free_count(); ++i) x2(i) = x(column_perm[basic_count + i]);
}

Vec PolytopeDecomposition::basis_rhs(const Vec& y) const {
  Vec yb(basic_count);
  for (int i = 0; i < basic_count; ++i) yb(i) = y(row_basis[i]);
  return B * yb;
}

PolytopeDecomposition decompose(const RoutingMatrix& A) {
  const Mat& M = A.entries;
  const int m = A.n_links();
  const int n = A.n_od();
  if (n == 0 || M.norm() == 0.0) throw NumericalError("decompose: zero-rank matrix");

  // Greedy rank-revealing column selection (modified Gram-Schmidt with
  // pivoting). Among columns whose residual norms tie within a relative
  // window, prefer fewer nonzeros, then lower index, for sparse B and C.
  std::vector<int> nnz(n, 0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < m; ++i) {
      if (M(i, j) != 0.0) ++nnz[j];
    }
  }
  Mat R = M;  // residuals of every column against the selected span
  std::vector<int> selected, remaining(n);
  for (int j = 0; j < n; ++j) remaining[j] = j;
  const double tol = 1e-10 * M.norm();
  while (true) {
    double best_norm = 0.0;
    for (int j : remaining) best_norm = std::max(best_norm, R.col(j).norm());
    if (best_norm <= tol) break;
    int pick = -1;
    for (int j : remaining) {
      if (R.col(j).norm() >= best_norm * (1.0 - 1e-9)) {
        if (pick < 0 || nnz[j] < nnz[pick] ||
            (nnz[j] == nnz[pick] && j < pick)) {
          pick = j;
        }
      }
    }
    selected.push_back(pick);
    Vec q = R.col(pick) / R.col(pick).norm();
    remaining.erase(std::find(remaining.begin(), remaining.end(), pick));
    for (int j : remaining) {
      R.col(j) -= q * q.dot(R.col(j));
    }
    // Re-orthogonalize once for numerical hygiene on long selections.
    for (int j : remaining) {
      R.col(j) -= q * q.dot(R.col(j));
    }
  }

  PolytopeDecomposition D;
  D.basic_count = static_cast<int>(selected.size());
  const int r = D.basic_count;
  D.column_perm = selected;
  std::vector<char> is_sel(n, 0);
  for (int j : selected) is_sel[j] = 1;
  for (int j = 0; j < n; ++j) {
    if (!is_sel[j]) D.column_perm.push_back(j);
  }

  // Independent rows of A1 via column-pivoted QR on A1^T.
  Mat A1(m, r);
  for (int i = 0; i < r; ++i) A1.col(i) = M.col(selected[i]);
  Eigen::ColPivHouseholderQR<Mat> qr(A1.transpose());
  qr.setThreshold(1e-10);
  if (qr.rank() < r) throw NumericalError("decompose: row-basis selection failed");
  for (int i = 0; i < r; ++i) {
    D.row_basis.push_back(static_cast<int>(qr.colsPermutation().indices()(i)));
  }
  std::sort(D.row_basis.begin(), D.row_basis.end());
  std::vector<char> in_basis(m, 0);
  for (int i : D.row_basis) in_basis[i] = 1;
  for (int i = 0; i < m; ++i) {
    if (!in_basis[i]) D.dropped_rows.push_back(i);
  }

  Mat A1b(r, r), A2b(r, n - r);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) A1b(i, j) = M(D.row_basis[i], selected[j]);
    for (int j = 0; j < n - r; ++j) {
      A2b(i, j) = M(D.row_basis[i], D.column_perm[r + j]);
    }
  }
  Eigen::PartialPivLU<Mat> lu(A1b);
  D.B = lu.inverse();
  D.C = D.B * A2b;

  if ((A1b * D.B - Mat::Identity(r, r)).cwiseAbs().maxCoeff() >= 1e-8) {
    throw NumericalError("decompose: basis block inversion inaccurate");
  }
  return D;
}

double constraint_violation(const Vec& x, const RoutingMatrix& A, const Vec& y) {
  double denom = 1.0 + y.cwiseAbs().maxCoeff();
  return (A.entries * x - y).cwiseAbs().maxCoeff() / denom;
}

FeasiblePoint ipfp_project(const Vec& x0, const RoutingMatrix& A, const Vec& y,
                           double tol, int max_iter) {
  const int m = A.n_links();
  const int n = A.n_od();
  if (x0.size() != n || y.size() != m) {
    throw UsageError("ipfp_project: dimension mismatch");
  }
  Vec x = x0;
  // Coordinates crossing a zero-load link must themselves be zero.
  for (int i = 0; i < m; ++i) {
    if (y(i) == 0.0) {
      for (int j = 0; j < n; ++j) {
        if (A.entries(i, j) != 0.0) x(j) = 0.0;
      }
    }
  }
  double viol = constraint_violation(x, A, y);
  for (int sweep = 0; sweep < max_iter && viol >= tol; ++sweep) {
    for (int i = 0; i < m; ++i) {
      double s = A.entries.row(i).dot(x);
      if (s > 0.0) {
        double f = y(i) / s;
        for (int j = 0; j < n; ++j) {
          if (A.entries(i, j) != 0.0) x(j) *= f;
        }
      }
    }
    viol = constraint_violation(x, A, y);
  }
  if (viol >= tol) {
    throw NumericalError(
        "ipfp_project: no convergence after " + std::to_string(max_iter) +
            " sweeps (final relative violation " + std::to_string(viol) + ")",
        viol);
  }
  return {x, x.minCoeff()};
}

FeasiblePoint feasible_start(const RoutingMatrix& A, const Vec& y, double tol,
                             int max_iter) {
  double total_entries = A.entries.sum();
  double scale = y.sum() / (total_entries > 0.0 ? total_entries : 1.0);
  if (scale <= 0.0) scale = 1.0;
  return ipfp_project(Vec::Constant(A.n_od(), scale), A, y, tol, max_iter);
}

std::pair<double, double> segment_bounds(const Vec& x1, const Vec& x2,
                                         const Vec& w, const Vec& d) {
  double h = std::numeric_limits<double>::infinity();
  double l = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < w.size(); ++k) {
    if (w(k) > 0.0) {
      h = std::min(h, x1(k) / w(k));
    } else if (w(k) < 0.0) {
      l = std::max(l, x1(k) / w(k));
    }
  }
  for (int k = 0; k < d.size(); ++k) {
    if (d(k) < 0.0) {
      h = std::min(h, -x2(k) / d(k));
    } else if (d(k) > 0.0) {
      l = std::max(l, -x2(k) / d(k));
    }
  }
  // A feasible current point guarantees l <= 0 <= h in exact arithmetic;
  // clamp so boundary points with rounding dust stay well-formed.
  return {std::min(l, 0.0), std::max(h, 0.0)};
}

namespace {

// Core of one RDA step over split coordinates. Returns true on accept.
bool rda_step_split(Vec& x1, Vec& x2, double& log_t,
                    const PolytopeDecomposition& decomp,
                    const std::function<double(const Vec&, const Vec&)>& target,
                    RngStream& rng, bool chord_correction, Vec& d, Vec& w,
                    Vec& x1p, Vec& x2p) {
  const int nf = decomp.free_count();
  double norm2 = 0.0;
  for (int i = 0; i < nf; ++i) {
    d(i) = rng.normal();
    norm2 += d(i) * d(i);
  }
  if (norm2 == 0.0) return false;
  d /= std::sqrt(norm2);
  w.noalias() = decomp.C * d;
  auto [l, h] = segment_bounds(x1, x2, w, d);
  if (h - l <= 0.0) return false;
  double u = rng.uniform(l, h);
  x1p = x1 - u * w;
  x2p = x2 + u * d;
  double log_tp = target(x1p, x2p);
  double log_acc = log_tp - log_t;
  if (chord_correction) {
    auto [lp, hp] = segment_bounds(x1p, x2p, w, d);
    if (hp - lp <= 0.0) return false;
    log_acc += std::log((h - l) / (hp - lp));
  }
  if (log_acc >= 0.0 || std::log(rng.uniform() + 1e-300) < log_acc) {
    x1.swap(x1p);
    x2.swap(x2p);
    log_t = log_tp;
    return true;
  }
  return false;
}

}  // namespace

int RdaChain::run(Vec& x1, Vec& x2, double& log_t,
                  const std::function<double(const Vec&, const Vec&)>& target,
                  int nsteps, RngStream& rng, bool chord_correction) {
  if (decomp_.free_count() == 0) return 0;
  int accepted = 0;
  for (int s = 0; s < nsteps; ++s) {
    if (rda_step_split(x1, x2, log_t, decomp_, target, rng, chord_correction,
                       d_, w_, x1p_, x2p_)) {
      ++accepted;
    }
  }
  return accepted;
}

FeasiblePoint rda_step(const FeasiblePoint& x,
                       const PolytopeDecomposition& decomp,
                       const std::function<double(const Vec&)>& log_target,
                       RngStream& rng, bool chord_correction) {
  if (decomp.free_count() == 0) return x;  // polytope is a single point
  Vec x1, x2;
  decomp.split(x.x, x1, x2);
  auto target = [&](const Vec& a, const Vec& b) {
    return log_target(decomp.unsplit(a, b));
  };
  double log_t = log_target(x.x);
  Vec d(decomp.free_count()), w(decomp.basic_count);
  Vec x1p(decomp.basic_count), x2p(decomp.free_count());
  rda_step_split(x1, x2, log_t, decomp, target, rng, chord_correction, d, w,
                 x1p, x2p);
  Vec out = decomp.unsplit(x1, x2);
  // Snap rounding dust at active bounds back onto the boundary.
  for (int i = 0; i < out.size(); ++i) {
    if (out(i) < 0.0 && out(i) > -1e-12) out(i) = 0.0;
  }
  return {out, out.minCoeff()};
}

}  // namespace odeconv
