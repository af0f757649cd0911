#pragma once

#include "cbfbt/cbf.hpp"

namespace cbfbt {

/// MinDisturbance: argmin ||u - nominal||^2 over the admissible set.
/// MaxProgress:    argmax direction . u, ties broken toward minimal ||u||.
struct ControlRequest {
  enum class Objective { MinDisturbance, MaxProgress };

  Vec2 nominal = Vec2::Zero();    // MinDisturbance
  Vec2 direction = Vec2::Zero();  // MaxProgress, must be nonzero
  AdmissibleSet set;
  Objective objective = Objective::MinDisturbance;
};

/// Exact 2-D solve by candidate enumeration: the unconstrained optimum, its
/// clip to the norm ball, projections onto each boundary line, pairwise line
/// intersections and line-circle intersections. The result satisfies every
/// constraint to 1e-9 and ||u|| <= v_max + 1e-12. Objective ties closer than
/// 1e-12 resolve to the lowest candidate-generation index. Throws
/// std::runtime_error if the set is infeasible and std::invalid_argument on
/// a zero MaxProgress direction.
Vec2 solve(const ControlRequest& request);

/// Rescales u so that ||u|| <= min(v_max, b); zero stays zero.
Vec2 saturate(const Vec2& u, double v_max, double b);

}  // namespace cbfbt
