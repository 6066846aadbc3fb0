#include "odeconv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "odeconv/normal.hpp"

namespace odeconv {

ErrorReport flow_errors(const FlowSeries& estimate, const FlowSeries& truth) {
  if (estimate.T() != truth.T() || estimate.dim() != truth.dim()) {
    throw UsageError("flow_errors: estimate and truth shapes differ");
  }
  const int T = truth.T();
  const int n = truth.dim();
  if (T == 0) throw UsageError("flow_errors: empty series");

  ErrorReport rep;
  Vec n1(T), n2(T);
  rep.per_flow = Vec::Zero(n);
  for (int t = 0; t < T; ++t) {
    Vec r = (estimate.values.row(t) - truth.values.row(t)).transpose();
    n1(t) = r.lpNorm<1>();
    n2(t) = r.norm();
    rep.per_flow += r.cwiseAbs();
  }
  rep.per_flow /= T;
  rep.l1 = n1.mean();
  rep.l2 = n2.mean();
  if (T > 1) {
    double v1 = (n1.array() - rep.l1).square().sum() / (T - 1);
    double v2 = (n2.array() - rep.l2).square().sum() / (T - 1);
    rep.se_l1 = std::sqrt(v1 / T);
    rep.se_l2 = std::sqrt(v2 / T);
  }
  return rep;
}

double sample_median(std::vector<double> values) {
  if (values.empty()) throw UsageError("sample_median: empty sample");
  const std::size_t n = values.size();
  auto mid = values.begin() + n / 2;
  std::nth_element(values.begin(), mid, values.end());
  double hi = *mid;
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(values.begin(), mid);
  return 0.5 * (lo + hi);
}

double mann_whitney_p_greater(const std::vector<double>& greater,
                              const std::vector<double>& lesser) {
  const std::size_t n1 = greater.size(), n2 = lesser.size();
  if (n1 == 0 || n2 == 0) {
    throw UsageError("mann_whitney_p_greater: empty sample");
  }
  // Midranks over the pooled sample.
  struct Item {
    double v;
    int group;
  };
  std::vector<Item> pool;
  pool.reserve(n1 + n2);
  for (double v : greater) pool.push_back({v, 0});
  for (double v : lesser) pool.push_back({v, 1});
  std::sort(pool.begin(), pool.end(),
            [](const Item& a, const Item& b) { return a.v < b.v; });
  const std::size_t N = pool.size();
  std::vector<double> rank(N);
  double tie_sum = 0.0;  // sum of (t^3 - t) over tie groups
  for (std::size_t i = 0; i < N;) {
    std::size_t j = i;
    while (j < N && pool[j].v == pool[i].v) ++j;
    double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) rank[k] = mid;
    double t = static_cast<double>(j - i);
    tie_sum += t * t * t - t;
    i = j;
  }
  double r1 = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    if (pool[i].group == 0) r1 += rank[i];
  }
  double u1 = r1 - 0.5 * n1 * (n1 + 1);  // large when `greater` dominates
  double mu = 0.5 * static_cast<double>(n1) * static_cast<double>(n2);
  double nn = static_cast<double>(N);
  double var = (static_cast<double>(n1) * n2 / 12.0) *
               ((nn + 1.0) - tie_sum / (nn * (nn - 1.0)));
  if (var <= 0.0) return u1 > mu ? 0.0 : 1.0;  // all values tied
  // Continuity-corrected normal approximation, upper tail.
  double z = (u1 - mu - 0.5) / std::sqrt(var);
  return 1.0 - norm_cdf(z);
}

}  // namespace odeconv
