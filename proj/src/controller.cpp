#include "cbfbt/controller.hpp"

#include <cmath>
#include <stdexcept>

#include "candidates.hpp"

namespace cbfbt {

Vec2 solve(const ControlRequest& req) {
  const double v_max = req.set.v_max;
  const bool min_dist = req.objective == ControlRequest::Objective::MinDisturbance;

  Vec2 dir = Vec2::Zero();
  if (!min_dist) {
    double n = req.direction.norm();
    if (n < detail::kZeroTol)
      throw std::invalid_argument("solve: MaxProgress with zero direction");
    dir = req.direction / n;
  }

  std::vector<HalfSpace> lines;
  lines.reserve(req.set.constraints.size());
  for (const HalfSpace& c : req.set.constraints) {
    if (c.a.norm() < detail::kZeroTol) {
      if (c.b > detail::kFeasTol)
        throw std::runtime_error("solve: constraint '" + c.source +
                                 "' is infeasible by construction (zero gradient, b > 0)");
      continue;
    }
    lines.push_back(c);
  }

  const Vec2 anchor = min_dist ? req.nominal : Vec2(dir * v_max);
  bool found = false;
  Vec2 best = Vec2::Zero();
  double best_primary = 0.0;  // squared distance (min) / progress (max)
  double best_norm = 0.0;

  for (const Vec2& u : detail::candidate_points(lines, v_max, anchor)) {
    if (u.norm() > v_max + detail::kZeroTol) continue;
    if (!detail::satisfied(lines, u)) continue;
    if (min_dist) {
      double d2 = (u - req.nominal).squaredNorm();
      if (!found || d2 < best_primary - 1e-12) {
        found = true;
        best = u;
        best_primary = d2;
      }
    } else {
      double p = dir.dot(u);
      double n = u.norm();
      bool strictly = !found || p > best_primary + 1e-12;
      bool tie = found && p > best_primary - 1e-12 && n < best_norm - 1e-12;
      if (strictly || tie) {
        if (strictly) best_primary = p;
        found = true;
        best = u;
        best_norm = n;
      }
    }
  }
  if (!found) throw std::runtime_error("solve: admissible set is infeasible");
  return best;
}

Vec2 saturate(const Vec2& u, double v_max, double b) {
  double limit = std::min(v_max, std::max(b, 0.0));
  double n = u.norm();
  if (n <= limit || n == 0.0) return u;
  return u * (limit / n);
}

}  // namespace cbfbt
