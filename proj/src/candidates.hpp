#pragma once

// Internal: candidate enumeration shared by the feasibility test and the
// controller. For half-planes intersected with a disc in 2-D, the feasible
// region (and the optimum of the supported objectives) always contains one
// of: the anchor, its clip to the disc, its projection onto each boundary
// line, a pairwise line intersection, a line-circle intersection, or the
// origin. Generation order is fixed; ties in the solver resolve to the
// lowest index.

#include <cmath>
#include <vector>

#include "cbfbt/cbf.hpp"

namespace cbfbt::detail {

constexpr double kFeasTol = 1e-9;   // constraint satisfaction slack
constexpr double kZeroTol = 1e-12;  // treat ||a|| below this as zero

inline bool satisfied(const std::vector<HalfSpace>& cs, const Vec2& u) {
  for (const HalfSpace& c : cs)
    if (c.a.dot(u) < c.b - kFeasTol) return false;
  return true;
}

inline std::vector<Vec2> candidate_points(const std::vector<HalfSpace>& cs, double v_max,
                                          const Vec2& anchor) {
  std::vector<Vec2> pts;
  pts.reserve(4 + cs.size() * (cs.size() + 3));
  pts.push_back(Vec2::Zero());
  pts.push_back(anchor);
  double an = anchor.norm();
  if (an > v_max && an > 0.0) pts.push_back(anchor * (v_max / an));

  for (const HalfSpace& c : cs) {
    double n2 = c.a.squaredNorm();
    if (n2 < kZeroTol * kZeroTol) continue;
    pts.push_back(anchor + c.a * ((c.b - c.a.dot(anchor)) / n2));
  }
  for (size_t i = 0; i < cs.size(); ++i) {
    if (cs[i].a.squaredNorm() < kZeroTol * kZeroTol) continue;
    for (size_t j = i + 1; j < cs.size(); ++j) {
      if (cs[j].a.squaredNorm() < kZeroTol * kZeroTol) continue;
      double det = cs[i].a.x() * cs[j].a.y() - cs[i].a.y() * cs[j].a.x();
      if (std::abs(det) < 1e-12) continue;
      pts.emplace_back((cs[i].b * cs[j].a.y() - cs[j].b * cs[i].a.y()) / det,
                       (cs[i].a.x() * cs[j].b - cs[j].a.x() * cs[i].b) / det);
    }
  }
  for (const HalfSpace& c : cs) {
    double n2 = c.a.squaredNorm();
    if (n2 < kZeroTol * kZeroTol) continue;
    Vec2 foot = c.a * (c.b / n2);
    double d2 = v_max * v_max - foot.squaredNorm();
    if (d2 < 0.0) continue;
    Vec2 tangent = Vec2(-c.a.y(), c.a.x()) / std::sqrt(n2);
    double t = std::sqrt(d2);
    pts.push_back(foot - tangent * t);
    pts.push_back(foot + tangent * t);
  }
  return pts;
}

}  // namespace cbfbt::detail
