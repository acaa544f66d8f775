#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cyscale/metrics.hpp"

namespace cyscale {

/// Mean QER per budget for one group and strategy.
struct TrajectoryCurve {
  GroupKey key;
  std::optional<Strategy> strategy;
  std::vector<std::pair<int, double>> points;

  /// drop[i] = qer(points[i]) - qer(points[i + 1]).
  std::vector<double> first_differences() const;
};

/// Budgets strictly increasing, values in [0, 1].
void check_curve(const TrajectoryCurve& curve);

/// Parses "1:0.5,2:0.2,3:0.12".
TrajectoryCurve parse_inline_curve(const std::string& text);

struct KneeResult {
  int budget = 0;
  /// Perpendicular distance of every point from the chord, in curve order.
  /// The endpoints are 0 by construction.
  std::vector<double> distances;
  /// More than one interior point reached the maximum distance.
  bool tie = false;
};

/// Normalizes (budget * cost, error) to the unit square and selects the
/// interior point farthest from the chord joining the first and last
/// points. Ties go to the lowest budget. Requires at least 3 points and a
/// positive cost.
KneeResult knee_point(const TrajectoryCurve& curve, double cost_per_attempt);

}  // namespace cyscale
