#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "cbfbt/bt.hpp"
#include "cbfbt/world.hpp"

namespace cbfbt {

/// Scalar barrier h(x) >= 0 over the world state, as seen by one agent.
/// The time derivative along the agent's own control decomposes as
/// dh/dt = control_coeff . u + drift; other agents' motion is treated as a
/// zero-order-hold disturbance absorbed by the discretization slack.
/// alpha is fixed to the linear class-K function alpha(s) = gamma * s.
struct Cbf {
  std::string id;
  double gamma = 1.0;
  std::function<double(const WorldState&, int)> value;
  std::function<Vec2(const WorldState&, int)> control_coeff;
  std::function<double(const WorldState&, int)> drift;  // optional, 0 if unset

  double drift_at(const WorldState& w, int agent) const {
    return drift ? drift(w, agent) : 0.0;
  }
};

/// Linear control constraint a . u >= b. A zero `a` is vacuous when b <= 0
/// and infeasible-by-construction when b > 0.
struct HalfSpace {
  Vec2 a = Vec2::Zero();
  double b = 0.0;
  std::string source;  // cbf id this was generated from
};

/// Admissibility condition for keeping h >= 0 invariant:
/// a . u >= -gamma*h - drift. Throws std::domain_error if h or the gradient
/// is not finite (declared singularities raise from the Cbf callbacks).
HalfSpace halfspace(const Cbf& cbf, const WorldState& w, int agent);

/// min/max composition of barrier values (And/Or of the underlying
/// conditions, sign-equivalent to the boolean evaluation).
double compose_and(const std::vector<double>& values);
double compose_or(const std::vector<double>& values);

/// Named barriers plus one boolean expression per condition-id, with
/// expression atoms referring to barrier ids.
struct CbfRegistry {
  std::map<std::string, Cbf> atoms;
  std::vector<std::pair<std::string, BooleanExpr>> conditions;  // insertion order

  void add_atom(Cbf cbf);
  void add_condition(const std::string& id, BooleanExpr expr);
  const BooleanExpr& condition_expr(const std::string& id) const;
  const Cbf& atom(const std::string& id) const;
  std::vector<std::string> condition_order() const;
};

/// Composed barrier value of an expression: atoms evaluate their Cbf, And
/// takes the min, Or the max. A -inf atom value marks a condition that is
/// false and unenforceable (e.g. connectivity with no peers).
double expr_value(const BooleanExpr& expr, const CbfRegistry& reg, const WorldState& w,
                  int agent);

enum class AndPolicy {
  Split,       // one half-space per atom along And branches (all enforced)
  ActiveAtom,  // single half-space of the argmin/argmax atom
};

/// Half-spaces that keep the expression's composed barrier nonnegative.
/// Or branches contribute their active (argmax, ties toward the lowest
/// index) child; And branches contribute every child under Split, or the
/// argmin child under ActiveAtom. Atoms with non-finite value are omitted
/// (they cannot be enforced by any control).
std::vector<HalfSpace> expr_halfspaces(const BooleanExpr& expr, const CbfRegistry& reg,
                                       const WorldState& w, int agent,
                                       AndPolicy policy = AndPolicy::Split);

/// Intersection of half-spaces with the norm ball ||u|| <= v_max.
/// `active_prefix` counts how many priority levels build_khat kept.
struct AdmissibleSet {
  std::vector<HalfSpace> constraints;
  double v_max = 1.0;
  int active_prefix = 0;
  bool degraded_to_zero = false;
};

/// Exact nonemptiness test in 2-D via candidate enumeration (origin,
/// projections onto boundary lines, pairwise line intersections,
/// line-circle intersections), with tolerance 1e-9 on the constraints.
bool feasible(const std::vector<HalfSpace>& constraints, double v_max);
bool feasible(const AdmissibleSet& set);

/// Largest feasible prefix of priority-ordered constraint levels
/// (level 1 = highest priority; levels are kept or dropped whole).
/// If even the first level is infeasible the result is the bare norm
/// bound with degraded_to_zero set.
AdmissibleSet build_khat(const std::vector<std::vector<HalfSpace>>& levels, double v_max);

}  // namespace cbfbt
