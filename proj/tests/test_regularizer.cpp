#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "odeconv/net_model.hpp"
#include "odeconv/regularizer.hpp"

using namespace odeconv;

namespace {

RoutingMatrix single_od() {
  RoutingMatrix A;
  A.entries = Mat::Ones(1, 1);
  A.link_names = {"l1"};
  A.od_names = {"od1"};
  A.rank = 1;
  return A;
}

RoutingMatrix one_link_two_od() {
  RoutingMatrix A;
  A.entries = Mat::Ones(1, 2);
  A.link_names = {"l1"};
  A.od_names = {"a", "b"};
  A.rank = 1;
  return A;
}

Mat col(std::initializer_list<double> v) {
  Mat m(static_cast<int>(v.size()), 1);
  int t = 0;
  for (double x : v) m(t++, 0) = x;
  return m;
}

}  // namespace

TEST_CASE("running median: spike in a constant series is removed") {
  Mat s = col({1, 1, 9, 1, 1});
  Mat out = smooth_running_median(s, 5);
  // The center position sees the full window {1,1,9,1,1}: median 1.
  CHECK(out(2, 0) == 1.0);
  // Edges use truncated windows; every one still has majority 1s except
  // the even-size ones around the spike.
  CHECK(out(0, 0) == 1.0);  // {1,1,9} -> 1
  CHECK(out(4, 0) == 1.0);  // {9,1,1} -> 1
  CHECK(out(1, 0) == 1.0);  // {1,1,9,1} -> mean of middle two = 1
  CHECK(out(3, 0) == 1.0);  // {1,9,1,1} -> 1
}

TEST_CASE("running median: monotone series is unchanged away from edges") {
  Mat s = col({1, 2, 3, 4, 5, 6, 7});
  Mat out = smooth_running_median(s, 5);
  // Full centered windows reproduce the series; truncated edge windows
  // take the median of what remains: t=0 sees {1,2,3}, t=1 sees
  // {1,2,3,4}, mirrored on the right.
  Mat expect = col({2, 2.5, 3, 4, 5, 5.5, 6});
  for (int t = 0; t < 7; ++t) CHECK(out(t, 0) == expect(t, 0));
}

TEST_CASE("running median: window 1 is the identity") {
  Mat s = col({3, 1, 4, 1, 5});
  Mat out = smooth_running_median(s, 1);
  CHECK((out - s).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("running median: even-size truncated window averages middles") {
  Mat s = col({2, 4, 6, 8});
  Mat out = smooth_running_median(s, 3);
  // t=0 sees {2,4}: (2+4)/2 = 3. t=3 sees {6,8}: 7.
  CHECK(out(0, 0) == 3.0);
  CHECK(out(3, 0) == 7.0);
  CHECK(out(1, 0) == 4.0);
  CHECK(out(2, 0) == 6.0);
}

TEST_CASE("running median: columns are smoothed independently") {
  Mat s(5, 2);
  s.col(0) << 1, 1, 9, 1, 1;
  s.col(1) << 5, 5, 5, 5, 5;
  Mat out = smooth_running_median(s, 5);
  CHECK(out(2, 0) == 1.0);
  for (int t = 0; t < 5; ++t) CHECK(out(t, 1) == 5.0);
}

TEST_CASE("running median rejects bad windows") {
  Mat s = col({1, 2, 3});
  CHECK_THROWS_AS(smooth_running_median(s, 4), UsageError);
  CHECK_THROWS_AS(smooth_running_median(s, 0), UsageError);
  CHECK_THROWS_AS(smooth_running_median(s, 5), UsageError);
}

TEST_CASE("schedule drift fixture: a doubling step gives log 2") {
  // Constant-then-doubled smoothed trajectory; the drift at the jump is
  // exactly log(4) - log(2) = log 2 and zero elsewhere.
  RoutingMatrix A = single_od();
  const int T = 7;
  CalibEstimates est;
  est.x_hat = col({2, 2, 2, 2, 4, 4, 4});
  est.V_hat = Mat::Constant(T, 1, 4.0);
  est.phi_hat = Vec::Constant(T, 0.7);
  est.loglik = Vec::Zero(T);
  est.od_names = {"od1"};
  est.warn.assign(T, 0);
  FlowSeries y;
  y.values = est.x_hat;  // A = I so the estimates are already feasible
  y.names = {"l1"};

  RegularizationSchedule sched =
      compute_schedule(est, A, y, 0.9, 2.0, 0.0, 2.0);
  CHECK(sched.T() == T);
  CHECK(sched.n_od() == 1);

  const double log2 = std::log(2.0);
  for (int t = 0; t < T; ++t) {
    double want_t1 = (t == 4) ? log2 : 0.0;
    CHECK(std::abs(sched.theta1(t, 0) - want_t1) <= 1e-12);
  }

  // theta2 = (1 - rho^2) log(1 + V/x^2) with rho = 0.9: the 0.19 factor.
  for (int t = 0; t < T; ++t) {
    double xs = (t < 4) ? 2.0 : 4.0;
    double want_t2 = 0.19 * std::log1p(4.0 / (xs * xs));
    CHECK(std::abs(sched.theta2(t, 0) - want_t2) <= 1e-12);
  }
  // The t<4 value is the hand fixture 0.19 * log 2.
  CHECK(std::abs(sched.theta2(0, 0) - 0.19 * log2) <= 1e-12);

  // phi_t_hat is copied through untouched.
  for (int t = 0; t < T; ++t) CHECK(sched.phi_t_hat(t) == 0.7);
  CHECK(sched.rho_model == 0.9);
  CHECK(sched.alpha == 2.0);
  CHECK(sched.tau == 2.0);
}

TEST_CASE("schedule applies the feasibility projection before smoothing") {
  // One link shared by two flows, observed load 10, stage-1 point (2, 3):
  // one proportional-fitting sweep rescales it to (4, 6).
  RoutingMatrix A = one_link_two_od();
  CalibEstimates est;
  est.x_hat = Mat(1, 2);
  est.x_hat << 2.0, 3.0;
  est.V_hat = Mat::Constant(1, 2, 1.0);
  est.phi_hat = Vec::Constant(1, 0.5);
  est.loglik = Vec::Zero(1);
  est.od_names = {"a", "b"};
  est.warn.assign(1, 0);
  FlowSeries y;
  y.values = Mat::Constant(1, 1, 10.0);
  y.names = {"l1"};

  RegularizationSchedule sched =
      compute_schedule(est, A, y, 0.9, 2.0, 0.0, 2.0);
  // theta1 at the only time step is zero by definition; theta2 encodes the
  // projected means (4, 6).
  CHECK(sched.theta1(0, 0) == 0.0);
  CHECK(sched.theta1(0, 1) == 0.0);
  CHECK(std::abs(sched.theta2(0, 0) - 0.19 * std::log1p(1.0 / 16.0)) <= 1e-9);
  CHECK(std::abs(sched.theta2(0, 1) - 0.19 * std::log1p(1.0 / 36.0)) <= 1e-9);
}

TEST_CASE("schedule floors tiny estimates before taking logs") {
  // A near-zero stage-1 mean must be lifted to the floor so theta1 stays
  // finite; with an explicit floor of 0.5 the drift is computable exactly.
  RoutingMatrix A = single_od();
  CalibEstimates est;
  est.x_hat = col({1e-9, 2, 2});
  est.V_hat = Mat::Constant(3, 1, 1.0);
  est.phi_hat = Vec::Constant(3, 0.5);
  est.loglik = Vec::Zero(3);
  est.od_names = {"od1"};
  est.warn.assign(3, 0);
  FlowSeries y;
  y.values = est.x_hat;
  y.names = {"l1"};

  RegularizationSchedule sched =
      compute_schedule(est, A, y, 0.9, 2.0, 0.5, 2.0);
  for (int i = 0; i < sched.theta1.size(); ++i) {
    CHECK(std::isfinite(sched.theta1(0, 0)));
  }
  // Window-3 running median of the floored series (0.5, 2, 2) is
  // (1.25, 2, 2); the first drift is log 2 - log 1.25.
  CHECK(std::abs(sched.theta1(1, 0) -
                 (std::log(2.0) - std::log(1.25))) <= 1e-12);
  CHECK(sched.theta1(2, 0) == 0.0);
}

TEST_CASE("default floor keeps the schedule finite for zero estimates") {
  RoutingMatrix A = single_od();
  CalibEstimates est;
  est.x_hat = col({0, 0, 0, 0, 0});
  est.V_hat = Mat::Constant(5, 1, 1.0);
  est.phi_hat = Vec::Constant(5, 0.5);
  est.loglik = Vec::Zero(5);
  est.od_names = {"od1"};
  est.warn.assign(5, 0);
  FlowSeries y;
  y.values = Mat::Zero(5, 1);
  y.names = {"l1"};

  RegularizationSchedule sched =
      compute_schedule(est, A, y, 0.9, 2.0, 0.0, 2.0);
  CHECK(sched.theta1.allFinite());
  CHECK(sched.theta2.allFinite());
  CHECK((sched.theta2.array() > 0.0).all());
}

TEST_CASE("naive schedule matches its closed form") {
  RegularizationSchedule sched = naive_schedule(3, 4, 2.0);
  CHECK(sched.T() == 4);
  CHECK(sched.n_od() == 3);
  CHECK((sched.theta1.array() == 0.0).all());
  const double want = std::log(5.0) / 2.0;
  for (int t = 0; t < 4; ++t) {
    for (int i = 0; i < 3; ++i) {
      CHECK(sched.theta2(t, i) == want);
    }
  }
  for (int t = 0; t < 4; ++t) {
    CHECK(std::abs(sched.phi_t_hat(t) - std::log(2.0)) <= 1e-15);
  }
  CHECK(sched.rho_model == 0.9);
  CHECK(sched.alpha == 2.0);

  RegularizationSchedule custom = naive_schedule(1, 2, 1.0, 0.25, 0.5, 1.0);
  CHECK(custom.phi_t_hat(0) == 0.25);
  CHECK(custom.rho_model == 0.5);
  CHECK(custom.tau == 1.0);
  CHECK(custom.alpha == 1.0);
}

TEST_CASE("compute_schedule validates dimensions") {
  RoutingMatrix A = single_od();
  CalibEstimates est;
  est.x_hat = Mat::Ones(3, 1);
  est.V_hat = Mat::Ones(3, 1);
  est.phi_hat = Vec::Ones(3);
  est.loglik = Vec::Zero(3);
  est.od_names = {"od1"};
  est.warn.assign(3, 0);
  FlowSeries y;
  y.values = Mat::Ones(2, 1);  // wrong T
  y.names = {"l1"};
  CHECK_THROWS_AS(compute_schedule(est, A, y, 0.9, 2.0), UsageError);
}
