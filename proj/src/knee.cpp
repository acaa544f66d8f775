#include "cyscale/knee.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace cyscale {

std::vector<double> TrajectoryCurve::first_differences() const {
  std::vector<double> out;
  for (std::size_t i = 1; i < points.size(); ++i) {
    out.push_back(points[i - 1].second - points[i].second);
  }
  return out;
}

void check_curve(const TrajectoryCurve& curve) {
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const auto [budget, value] = curve.points[i];
    if (budget < 1) throw std::invalid_argument("curve budget must be positive");
    if (i > 0 && budget <= curve.points[i - 1].first) {
      throw std::invalid_argument("curve budgets must be strictly increasing (at budget " +
                                  std::to_string(budget) + ")");
    }
    if (!(value >= 0.0 && value <= 1.0)) {
      throw std::invalid_argument("curve value at budget " + std::to_string(budget) +
                                  " is outside [0, 1]");
    }
  }
}

TrajectoryCurve parse_inline_curve(const std::string& text) {
  TrajectoryCurve curve;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("curve point '" + item + "' is not budget:qer");
    int budget = 0;
    double value = 0.0;
    const auto b = item.substr(0, colon);
    const auto v = item.substr(colon + 1);
    auto r1 = std::from_chars(b.data(), b.data() + b.size(), budget);
    auto r2 = std::from_chars(v.data(), v.data() + v.size(), value);
    if (r1.ec != std::errc{} || r1.ptr != b.data() + b.size() || r2.ec != std::errc{} ||
        r2.ptr != v.data() + v.size()) {
      throw std::invalid_argument("curve point '" + item + "' is not budget:qer");
    }
    curve.points.emplace_back(budget, value);
  }
  check_curve(curve);
  return curve;
}

KneeResult knee_point(const TrajectoryCurve& curve, double cost_per_attempt) {
  if (curve.points.size() < 3) {
    throw std::invalid_argument("knee point needs at least 3 curve points, got " +
                                std::to_string(curve.points.size()));
  }
  if (!(cost_per_attempt > 0.0)) throw std::invalid_argument("cost per attempt must be positive");
  check_curve(curve);

  const auto& pts = curve.points;
  const double x_lo = pts.front().first * cost_per_attempt;
  const double x_span = pts.back().first * cost_per_attempt - x_lo;
  const auto [y_min_it, y_max_it] = std::minmax_element(
      pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  const double y_lo = y_min_it->second;
  const double y_span = y_max_it->second - y_lo;

  auto norm = [&](const std::pair<int, double>& p) {
    const double x = (p.first * cost_per_attempt - x_lo) / x_span;
    const double y = y_span > 0.0 ? (p.second - y_lo) / y_span : 0.0;
    return std::pair{x, y};
  };
  const auto [ax, ay] = norm(pts.front());
  const auto [bx, by] = norm(pts.back());
  const double dx = bx - ax;
  const double dy = by - ay;
  const double length = std::hypot(dx, dy);

  KneeResult result;
  double best = -1.0;
  constexpr double tolerance = 1e-12;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto [px, py] = norm(pts[i]);
    const double d = std::abs(dx * (py - ay) - dy * (px - ax)) / length;
    result.distances.push_back(d);
    if (i == 0 || i + 1 == pts.size()) continue;
    if (d > best + tolerance) {
      best = d;
      result.budget = pts[i].first;
      result.tie = false;
    } else if (std::abs(d - best) <= tolerance) {
      result.tie = true;
    }
  }
  return result;
}

}  // namespace cyscale
