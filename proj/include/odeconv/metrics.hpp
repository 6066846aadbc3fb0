#pragma once

#include <vector>

#include "odeconv/types.hpp"

namespace odeconv {

// Time-averaged error norms between an estimated and a true flow series.
struct ErrorReport {
  double l1 = 0.0;       // mean over t of ||xhat_t - x_t||_1
  double l2 = 0.0;       // mean over t of ||xhat_t - x_t||_2
  double se_l1 = 0.0;    // standard error of the per-t L1 norms
  double se_l2 = 0.0;    // standard error of the per-t L2 norms
  Vec per_flow;          // per-OD mean absolute error over time
};

// Computes time-averaged L1/L2 error norms; throws UsageError on shape
// mismatch.  Standard errors are sd(per-t norm)/sqrt(T).
ErrorReport flow_errors(const FlowSeries& estimate, const FlowSeries& truth);

// One-sided Mann-Whitney U test of H1: samples in `greater` tend to be
// larger than samples in `lesser`.  Returns the p-value from the normal
// approximation with tie correction.  Requires both samples non-empty.
double mann_whitney_p_greater(const std::vector<double>& greater,
                              const std::vector<double>& lesser);

// Median of a sample (average of the two middle order statistics for even
// sizes).  Requires a non-empty sample.
double sample_median(std::vector<double> values);

}  // namespace odeconv
