#pragma once

#include <functional>

#include "odeconv/types.hpp"

namespace odeconv {

struct OptimOptions {
  int max_evals = 500;      // budget for objective evaluations (total)
  double rel_tol = 1e-8;    // stop when relative objective change is below
  int history = 7;          // quasi-Newton memory
  double fd_step = 1e-6;    // central-difference step (scaled per coordinate)
  double grad_tol = 1e-8;   // stop on small gradient inf-norm (scaled)
};

struct OptimResult {
  Vec x;                // best point found
  double f = 0.0;       // objective at x
  int evals = 0;        // objective evaluations consumed
  bool converged = false;
  int iterations = 0;
};

/// Minimize a smooth function with a limited-memory quasi-Newton method
/// (two-loop L-BFGS recursion, backtracking line search) using central
/// finite-difference gradients. Returns the best point evaluated even
/// when the budget runs out (converged = false then). The result never
/// has f above f(x0): x0 is evaluated first and tracked as incumbent.
OptimResult minimize(const std::function<double(const Vec&)>& f, const Vec& x0,
                     const OptimOptions& opts = {});

/// The same central-difference gradient the optimizer uses internally
/// (exposed so tests can cross-check finite-difference consistency).
Vec numerical_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double fd_step = 1e-6);

}  // namespace odeconv
