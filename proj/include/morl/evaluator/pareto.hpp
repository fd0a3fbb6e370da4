#ifndef MORL_EVALUATOR_PARETO_HPP_
#define MORL_EVALUATOR_PARETO_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "morl/common/error.hpp"

namespace morl::evaluator {

// Both objectives are minimized.
struct ObjectivePoint {
  double a = 0.0;
  double b = 0.0;
};

inline bool dominates(const ObjectivePoint& p, const ObjectivePoint& q) {
  return p.a <= q.a && p.b <= q.b && (p.a < q.a || p.b < q.b);
}

// flags[i] is true when no other point dominates point i. Sort by (a, b) and
// sweep: a point is dominated iff an earlier point in that order has b lower,
// or has equal b with strictly lower a.
inline std::vector<bool> non_dominated_filter(std::span<const ObjectivePoint> points) {
  if (points.empty()) throw EvaluationError("non_dominated_filter: empty record set");
  const std::size_t n = points.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return points[i].a < points[j].a || (points[i].a == points[j].a && points[i].b < points[j].b);
  });
  std::vector<bool> flags(n, true);
  double best_b = std::numeric_limits<double>::infinity();
  double best_b_a = std::numeric_limits<double>::infinity();  // smallest a attaining best_b
  std::size_t k = 0;
  while (k < n) {
    // Group identical a values; within a group, only lower b dominates.
    std::size_t end = k;
    while (end < n && points[order[end]].a == points[order[k]].a) ++end;
    const double group_min_b = points[order[k]].b;
    for (std::size_t g = k; g < end; ++g) {
      const auto& p = points[order[g]];
      const bool by_earlier = best_b < p.b || (best_b == p.b && best_b_a < p.a);
      const bool by_group = group_min_b < p.b;
      flags[order[g]] = !(by_earlier || by_group);
    }
    if (group_min_b < best_b) {
      best_b = group_min_b;
      best_b_a = points[order[k]].a;
    }
    k = end;
  }
  return flags;
}

inline std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

// Spearman rank correlation with average ranks for ties. NaN when either
// input is constant.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw EvaluationError("spearman: need two equal-length series");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace morl::evaluator

#endif  // MORL_EVALUATOR_PARETO_HPP_
