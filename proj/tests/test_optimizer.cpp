#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "odeconv/optimizer.hpp"

using namespace odeconv;

namespace {

double quad_shifted(const Vec& x) {
  // Minimum at (1, -2, 3), value 4, axis-aligned with distinct curvatures.
  return 4.0 + 2.0 * (x(0) - 1.0) * (x(0) - 1.0) +
         0.5 * (x(1) + 2.0) * (x(1) + 2.0) +
         7.0 * (x(2) - 3.0) * (x(2) - 3.0);
}

double rosenbrock(const Vec& x) {
  double a = 1.0 - x(0);
  double b = x(1) - x(0) * x(0);
  return a * a + 100.0 * b * b;
}

}  // namespace

TEST_CASE("minimize finds the minimum of a shifted quadratic") {
  Vec x0(3);
  x0 << 0.0, 0.0, 0.0;
  OptimOptions opts;
  opts.max_evals = 2000;
  OptimResult res = minimize(quad_shifted, x0, opts);
  CHECK(res.converged);
  CHECK(std::abs(res.x(0) - 1.0) < 1e-4);
  CHECK(std::abs(res.x(1) + 2.0) < 1e-4);
  CHECK(std::abs(res.x(2) - 3.0) < 1e-4);
  CHECK(std::abs(res.f - 4.0) < 1e-7);
  CHECK(res.evals <= opts.max_evals);
}

TEST_CASE("minimize makes strong progress on the Rosenbrock valley") {
  Vec x0(2);
  x0 << -1.2, 1.0;
  OptimOptions opts;
  opts.max_evals = 6000;
  opts.rel_tol = 1e-12;
  OptimResult res = minimize(rosenbrock, x0, opts);
  // The curved valley is the classic stress test; require near-optimality.
  CHECK(res.f < 1e-5);
  CHECK(std::abs(res.x(0) - 1.0) < 0.05);
  CHECK(std::abs(res.x(1) - 1.0) < 0.1);
}

TEST_CASE("numerical_gradient matches an analytic gradient") {
  Vec x(3);
  x << 0.7, -1.3, 2.1;
  Vec g = numerical_gradient(quad_shifted, x);
  Vec g_exact(3);
  g_exact << 4.0 * (x(0) - 1.0), 1.0 * (x(1) + 2.0), 14.0 * (x(2) - 3.0);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(g(i) - g_exact(i)) < 1e-5);
  }

  // Also at a larger-magnitude point (step scaling must keep accuracy).
  Vec x2(3);
  x2 << 150.0, -80.0, 300.0;
  Vec g2 = numerical_gradient(quad_shifted, x2);
  Vec g2_exact(3);
  g2_exact << 4.0 * (x2(0) - 1.0), 1.0 * (x2(1) + 2.0), 14.0 * (x2(2) - 3.0);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(g2(i) - g2_exact(i)) < 1e-3 * std::abs(g2_exact(i)));
  }
}

TEST_CASE("minimize never returns a point worse than the start") {
  // A nasty oscillatory objective; whatever happens, the incumbent rule
  // guarantees f(result) <= f(x0).
  auto f = [](const Vec& x) {
    return std::sin(17.0 * x(0)) * std::cos(13.0 * x(1)) +
           0.01 * x.squaredNorm();
  };
  Vec x0(2);
  x0 << 0.3, -0.4;
  double f0 = f(x0);
  OptimOptions opts;
  opts.max_evals = 300;
  OptimResult res = minimize(f, x0, opts);
  CHECK(res.f <= f0 + 1e-15);
  CHECK(res.f == doctest::Approx(f(res.x)));
}

TEST_CASE("minimize survives a region where the objective is NaN") {
  // f is NaN left of x = -0.5; the optimizer must treat those trial points
  // as rejected and still improve within the valid region.
  auto f = [](const Vec& x) {
    if (x(0) < -0.5) return std::numeric_limits<double>::quiet_NaN();
    return (x(0) - 2.0) * (x(0) - 2.0);
  };
  Vec x0(1);
  x0 << 0.0;
  OptimOptions opts;
  opts.max_evals = 500;
  OptimResult res = minimize(f, x0, opts);
  CHECK(std::isfinite(res.f));
  CHECK(res.f <= 4.0 + 1e-12);
  CHECK(std::abs(res.x(0) - 2.0) < 1e-3);
}

TEST_CASE("minimize with a tiny budget still reports the incumbent") {
  Vec x0(2);
  x0 << 5.0, 5.0;
  OptimOptions opts;
  opts.max_evals = 3;  // not even one full finite-difference gradient
  auto f = [](const Vec& x) { return x.squaredNorm(); };
  OptimResult res = minimize(f, x0, opts);
  CHECK(res.f <= 50.0 + 1e-12);
  CHECK(res.evals <= 2 * opts.max_evals + 8);  // budget respected up to slack
  CHECK_FALSE(res.converged);
}
