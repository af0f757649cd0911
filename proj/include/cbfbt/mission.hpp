#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "cbfbt/bt.hpp"
#include "cbfbt/cbf.hpp"
#include "cbfbt/world.hpp"

namespace cbfbt {

using Plan = std::vector<Vec2>;                              // waypoints, in order
using PlanSet = std::shared_ptr<const std::vector<Plan>>;    // one plan per agent
using NominalFn = std::function<Vec2(const WorldState&, int)>;

/// Scalar parameter resolved against WorldParams at evaluation time, so that
/// parameter overrides stay in effect for already-built scenarios.
struct ParamSel {
  enum class Kind { Fixed, MS, MP, RC, RV, WaypointTol };
  Kind kind = Kind::Fixed;
  double value = 0.0;

  double get(const WorldParams& p) const;
  static ParamSel fixed(double v) { return {Kind::Fixed, v}; }
  static ParamSel m_s() { return {Kind::MS, 0.0}; }
  static ParamSel m_p() { return {Kind::MP, 0.0}; }
};

// ---- barrier factories -------------------------------------------------
// Clearance barriers are singular at coincident points (std::domain_error).
// Barriers whose gradient vanishes at a benign point (standing on the
// target) use a zero coefficient there, which yields a vacuous half-space.

Cbf peer_clearance_cbf(std::string id, int peer, ParamSel margin);
Cbf obstacle_clearance_cbf(std::string id, int obstacle, ParamSel margin);
/// h = b - k_b * ||x - q|| - m_b with the worst-case own-burn drift
/// -k_b * v_max. q is the agent's home charger, or a fixed point.
Cbf battery_margin_cbf(std::string id);
Cbf battery_margin_cbf(std::string id, Vec2 point);
Cbf connectivity_peer_cbf(std::string id, int peer);   // h = r_c - ||x_i - x_j||
Cbf charger_visible_cbf(std::string id);               // h = r_v - ||x - q||
Cbf at_point_cbf(std::string id, Vec2 point, ParamSel tol);
Cbf plan_done_cbf(std::string id, PlanSet plans);      // h = index - #waypoints
Cbf constant_cbf(std::string id, double value);

// ---- nominal controllers ------------------------------------------------

NominalFn avoid_entities_nominal(ParamSel margin);  // away from deepest violator
NominalFn goto_plan_nominal(PlanSet plans, double speed_factor = 1.0);
NominalFn search_charger_nominal();
NominalFn dock_nominal(double stop_fraction = 0.25);  // stop at fraction of r_dock
NominalFn rendezvous_nominal();                       // toward nearest peer

/// Advances each agent's waypoint_index past every waypoint within
/// waypoint_tol of its position. Run once per tick before evaluating
/// conditions.
void advance_waypoints(WorldState& w, const std::vector<Plan>& plans);

// ---- scenario assembly ---------------------------------------------------

struct ConditionSpec {
  enum class Type { Safety, BatteryMargin, Connectivity, ChargerVisible, AtPoint, PlanDone };
  std::string id;
  Type type = Type::Safety;
  ParamSel margin = ParamSel::m_s();      // Safety
  std::optional<Vec2> target;             // BatteryMargin / AtPoint fixed point
  ParamSel tol{ParamSel::Kind::WaypointTol, 0.0};  // AtPoint
  double gamma = 1.0;
};

struct ActionSpec {
  enum class Type { GotoPlan, AvoidEntities, SearchCharger, Dock, Rendezvous };
  std::string id;
  Type type = Type::GotoPlan;
  double speed_factor = 1.0;              // GotoPlan
  ParamSel margin = ParamSel::m_s();      // AvoidEntities
  double stop_fraction = 0.25;            // Dock
};

struct ScenarioSpec {
  std::string name;
  WorldState world;
  std::vector<Plan> plans;                // one per agent (or empty)
  std::vector<ConditionSpec> conditions;  // registration order = log order
  std::vector<ActionSpec> actions;
  std::optional<BtNode> tree;
  // tree-less mode: one action under a fixed priority-ordered constraint
  // list, completed when the goal condition holds
  std::string fixed_action;
  std::vector<std::string> fixed_constraints;
  std::string goal_condition;
  bool filter_enabled = true;
  long default_max_ticks = 20000;
};

struct Scenario {
  std::string name;
  WorldState world;
  PlanSet plans;
  std::vector<CbfRegistry> registries;    // per agent
  std::map<std::string, NominalFn> actions;
  std::optional<BtNode> tree;
  std::string fixed_action;
  std::vector<std::string> fixed_constraints;
  std::string goal_condition;
  bool filter_enabled = true;
  long default_max_ticks = 20000;
};

/// Builds per-agent registries and controllers from a declarative spec.
/// Throws std::invalid_argument on inconsistencies (unknown ids, missing
/// plans, tree conditions without a spec, ...).
Scenario assemble_scenario(const ScenarioSpec& spec);

/// Overrides gamma on every barrier atom of one condition.
void set_condition_gamma(Scenario& s, const std::string& condition_id, double gamma);

std::vector<std::string> scenario_names();
ScenarioSpec scenario_spec(const std::string& name);
Scenario build_scenario(const std::string& name);

}  // namespace cbfbt
