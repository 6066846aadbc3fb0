#include "odeconv/optimizer.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace odeconv {

Vec numerical_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double fd_step) {
  const int p = static_cast<int>(x.size());
  Vec g(p), xp = x;
  for (int i = 0; i < p; ++i) {
    double h = fd_step * (1.0 + std::abs(x(i)));
    xp(i) = x(i) + h;
    double fp = f(xp);
    xp(i) = x(i) - h;
    double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

OptimResult minimize(const std::function<double(const Vec&)>& f, const Vec& x0,
                     const OptimOptions& opts) {
  const int p = static_cast<int>(x0.size());
  OptimResult res;
  res.x = x0;

  int evals = 0;
  auto eval = [&](const Vec& x) {
    ++evals;
    double v = f(x);
    if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
    if (v < res.f || evals == 1) {
      res.f = v;
      res.x = x;
    }
    return v;
  };

  Vec x = x0;
  double fx = eval(x);
  res.f = fx;
  res.x = x;

  struct Pair {
    Vec s, y;
    double rho;
  };
  std::deque<Pair> mem;

  auto grad = [&](const Vec& at) {
    Vec g(p), xp = at;
    for (int i = 0; i < p; ++i) {
      double h = opts.fd_step * (1.0 + std::abs(at(i)));
      xp(i) = at(i) + h;
      double fp = eval(xp);
      xp(i) = at(i) - h;
      double fm = eval(xp);
      xp(i) = at(i);
      g(i) = (fp - fm) / (2.0 * h);
    }
    return g;
  };

  Vec g = grad(x);
  double gamma = 1.0;
  for (int iter = 0; evals < opts.max_evals; ++iter) {
    res.iterations = iter + 1;
    if (!g.allFinite()) break;
    if (g.cwiseAbs().maxCoeff() <= opts.grad_tol * (1.0 + std::abs(fx))) {
      res.converged = true;
      break;
    }

    // Two-loop recursion for the search direction.
    Vec q = g;
    std::vector<double> alpha(mem.size());
    for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
      alpha[i] = mem[i].rho * mem[i].s.dot(q);
      q -= alpha[i] * mem[i].y;
    }
    q *= gamma;
    for (size_t i = 0; i < mem.size(); ++i) {
      double beta = mem[i].rho * mem[i].y.dot(q);
      q += (alpha[i] - beta) * mem[i].s;
    }
    Vec dir = -q;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {  // fall back to steepest descent
      dir = -g;
      slope = g.dot(dir);
      mem.clear();
      gamma = 1.0;
    }

    // Backtracking Armijo line search.
    double step = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    Vec x_new;
    bool ok = false;
    for (int ls = 0; ls < 30 && evals < opts.max_evals; ++ls) {
      x_new = x + step * dir;
      f_new = eval(x_new);
      if (f_new <= fx + 1e-4 * step * slope) {
        ok = true;
        break;
      }
      step *= 0.5;
    }
    if (!ok) break;

    Vec g_new = grad(x_new);
    Vec s = x_new - x;
    Vec yv = g_new - g;
    double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      mem.push_back({s, yv, 1.0 / sy});
      if (static_cast<int>(mem.size()) > opts.history) mem.pop_front();
      gamma = sy / yv.squaredNorm();
    }

    double rel_change = std::abs(fx - f_new) / (1.0 + std::abs(fx));
    x = x_new;
    fx = f_new;
    g = g_new;
    if (rel_change < opts.rel_tol) {
      res.converged = true;
      break;
    }
  }
  res.evals = evals;
  return res;
}

}  // namespace odeconv
