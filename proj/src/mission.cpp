#include "cbfbt/mission.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace cbfbt {
namespace {

constexpr double kSingularTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

const AgentState& agent_at(const WorldState& w, int i) {
  if (i < 0 || i >= static_cast<int>(w.agents.size()))
    throw std::out_of_range("agent index " + std::to_string(i) + " out of range");
  return w.agents[static_cast<size_t>(i)];
}

// unit vector from `from` toward `to`; zero when nearly coincident
Vec2 unit_or_zero(const Vec2& from, const Vec2& to) {
  Vec2 d = to - from;
  double n = d.norm();
  return n < kSingularTol ? Vec2(Vec2::Zero()) : Vec2(d / n);
}

std::optional<Vec2> home_charger_pos(const WorldState& w, int i) {
  int hc = agent_at(w, i).home_charger;
  if (hc < 0 || hc >= static_cast<int>(w.chargers.size())) return std::nullopt;
  return w.chargers[static_cast<size_t>(hc)].position;
}

}  // namespace

double ParamSel::get(const WorldParams& p) const {
  switch (kind) {
    case Kind::Fixed: return value;
    case Kind::MS: return p.m_s;
    case Kind::MP: return p.m_p;
    case Kind::RC: return p.r_c;
    case Kind::RV: return p.r_v;
    case Kind::WaypointTol: return p.waypoint_tol;
  }
  return value;
}

Cbf peer_clearance_cbf(std::string id, int peer, ParamSel margin) {
  Cbf c;
  c.id = std::move(id);
  std::string name = c.id;
  c.value = [peer, margin, name](const WorldState& w, int i) {
    double d = (agent_at(w, i).x - agent_at(w, peer).x).norm();
    if (d < kSingularTol)
      throw std::domain_error("singular state for " + name + ": agents " + std::to_string(i) +
                              " and " + std::to_string(peer) + " coincide");
    return d - margin.get(w.params);
  };
  c.control_coeff = [peer, name](const WorldState& w, int i) {
    Vec2 d = agent_at(w, i).x - agent_at(w, peer).x;
    double n = d.norm();
    if (n < kSingularTol)
      throw std::domain_error("singular state for " + name + ": agents " + std::to_string(i) +
                              " and " + std::to_string(peer) + " coincide");
    return Vec2(d / n);
  };
  return c;
}

Cbf obstacle_clearance_cbf(std::string id, int obstacle, ParamSel margin) {
  Cbf c;
  c.id = std::move(id);
  std::string name = c.id;
  auto center = [obstacle](const WorldState& w) -> const Obstacle& {
    if (obstacle < 0 || obstacle >= static_cast<int>(w.obstacles.size()))
      throw std::out_of_range("obstacle index out of range");
    return w.obstacles[static_cast<size_t>(obstacle)];
  };
  c.value = [center, margin, name](const WorldState& w, int i) {
    const Obstacle& o = center(w);
    double d = (agent_at(w, i).x - o.center).norm();
    if (d < kSingularTol)
      throw std::domain_error("singular state for " + name + ": agent " + std::to_string(i) +
                              " at obstacle center");
    return d - o.radius - margin.get(w.params);
  };
  c.control_coeff = [center, name](const WorldState& w, int i) {
    const Obstacle& o = center(w);
    Vec2 d = agent_at(w, i).x - o.center;
    double n = d.norm();
    if (n < kSingularTol)
      throw std::domain_error("singular state for " + name + ": agent " + std::to_string(i) +
                              " at obstacle center");
    return Vec2(d / n);
  };
  return c;
}

namespace {

Cbf battery_margin_impl(std::string id, std::optional<Vec2> fixed_target) {
  Cbf c;
  c.id = std::move(id);
  auto target = [fixed_target](const WorldState& w, int i) -> std::optional<Vec2> {
    if (fixed_target) return fixed_target;
    return home_charger_pos(w, i);
  };
  c.value = [target](const WorldState& w, int i) {
    auto q = target(w, i);
    if (!q) return -kInf;  // nowhere to recharge: margin unsatisfiable
    const AgentState& a = agent_at(w, i);
    return a.b - w.params.k_b * (a.x - *q).norm() - w.params.m_b;
  };
  c.control_coeff = [target](const WorldState& w, int i) {
    auto q = target(w, i);
    if (!q) return Vec2(Vec2::Zero());
    return Vec2(-w.params.k_b * unit_or_zero(*q, agent_at(w, i).x));
  };
  c.drift = [](const WorldState& w, int) { return -w.params.k_b * w.params.v_max; };
  return c;
}

}  // namespace

Cbf battery_margin_cbf(std::string id) { return battery_margin_impl(std::move(id), std::nullopt); }

Cbf battery_margin_cbf(std::string id, Vec2 point) {
  return battery_margin_impl(std::move(id), point);
}

Cbf connectivity_peer_cbf(std::string id, int peer) {
  Cbf c;
  c.id = std::move(id);
  c.value = [peer](const WorldState& w, int i) {
    return w.params.r_c - (agent_at(w, i).x - agent_at(w, peer).x).norm();
  };
  c.control_coeff = [peer](const WorldState& w, int i) {
    return Vec2(-unit_or_zero(agent_at(w, peer).x, agent_at(w, i).x));
  };
  return c;
}

Cbf charger_visible_cbf(std::string id) {
  Cbf c;
  c.id = std::move(id);
  c.value = [](const WorldState& w, int i) {
    auto q = home_charger_pos(w, i);
    if (!q) return -kInf;
    return w.params.r_v - (agent_at(w, i).x - *q).norm();
  };
  c.control_coeff = [](const WorldState& w, int i) {
    auto q = home_charger_pos(w, i);
    if (!q) return Vec2(Vec2::Zero());
    return Vec2(-unit_or_zero(*q, agent_at(w, i).x));
  };
  return c;
}

Cbf at_point_cbf(std::string id, Vec2 point, ParamSel tol) {
  Cbf c;
  c.id = std::move(id);
  c.value = [point, tol](const WorldState& w, int i) {
    return tol.get(w.params) - (agent_at(w, i).x - point).norm();
  };
  c.control_coeff = [point](const WorldState& w, int i) {
    return Vec2(-unit_or_zero(point, agent_at(w, i).x));
  };
  return c;
}

Cbf plan_done_cbf(std::string id, PlanSet plans) {
  Cbf c;
  c.id = std::move(id);
  c.value = [plans](const WorldState& w, int i) {
    agent_at(w, i);
    size_t n = i < static_cast<int>(plans->size()) ? (*plans)[static_cast<size_t>(i)].size() : 0;
    return static_cast<double>(agent_at(w, i).waypoint_index) - static_cast<double>(n);
  };
  c.control_coeff = [](const WorldState&, int) { return Vec2(Vec2::Zero()); };
  return c;
}

Cbf constant_cbf(std::string id, double value) {
  Cbf c;
  c.id = std::move(id);
  c.value = [value](const WorldState&, int) { return value; };
  c.control_coeff = [](const WorldState&, int) { return Vec2(Vec2::Zero()); };
  return c;
}

NominalFn avoid_entities_nominal(ParamSel margin) {
  return [margin](const WorldState& w, int i) {
    const AgentState& self = agent_at(w, i);
    double m = margin.get(w.params);
    double worst = 0.0;  // only entities with clearance below the margin count
    Vec2 away = Vec2::Zero();
    for (size_t j = 0; j < w.agents.size(); ++j) {
      if (static_cast<int>(j) == i) continue;
      double h = (self.x - w.agents[j].x).norm() - m;
      if (h < worst) {
        worst = h;
        away = unit_or_zero(w.agents[j].x, self.x);
      }
    }
    for (const Obstacle& o : w.obstacles) {
      double h = (self.x - o.center).norm() - o.radius - m;
      if (h < worst) {
        worst = h;
        away = unit_or_zero(o.center, self.x);
      }
    }
    if (worst >= 0.0) return Vec2(Vec2::Zero());
    if (away.norm() < kSingularTol) away = Vec2(1.0, 0.0);  // coincident: any direction
    return Vec2(w.params.v_max * away);
  };
}

NominalFn goto_plan_nominal(PlanSet plans, double speed_factor) {
  return [plans, speed_factor](const WorldState& w, int i) {
    const AgentState& self = agent_at(w, i);
    if (i >= static_cast<int>(plans->size())) return Vec2(Vec2::Zero());
    const Plan& plan = (*plans)[static_cast<size_t>(i)];
    if (self.waypoint_index >= static_cast<int>(plan.size())) return Vec2(Vec2::Zero());
    Vec2 target = plan[static_cast<size_t>(self.waypoint_index)];
    return Vec2(speed_factor * w.params.v_max * unit_or_zero(self.x, target));
  };
}

NominalFn search_charger_nominal() {
  return [](const WorldState& w, int i) {
    auto q = home_charger_pos(w, i);
    if (!q) return Vec2(Vec2::Zero());
    return Vec2(w.params.v_max * unit_or_zero(agent_at(w, i).x, *q));
  };
}

NominalFn dock_nominal(double stop_fraction) {
  return [stop_fraction](const WorldState& w, int i) {
    auto q = home_charger_pos(w, i);
    if (!q) return Vec2(Vec2::Zero());
    const AgentState& self = agent_at(w, i);
    if ((self.x - *q).norm() <= stop_fraction * w.params.r_dock) return Vec2(Vec2::Zero());
    return Vec2(w.params.v_max * unit_or_zero(self.x, *q));
  };
}

NominalFn rendezvous_nominal() {
  return [](const WorldState& w, int i) {
    const AgentState& self = agent_at(w, i);
    double best = kInf;
    Vec2 target = Vec2::Zero();
    bool found = false;
    for (size_t j = 0; j < w.agents.size(); ++j) {
      if (static_cast<int>(j) == i) continue;
      double d = (self.x - w.agents[j].x).norm();
      if (d < best) {
        best = d;
        target = w.agents[j].x;
        found = true;
      }
    }
    if (!found) return Vec2(Vec2::Zero());
    return Vec2(w.params.v_max * unit_or_zero(self.x, target));
  };
}

void advance_waypoints(WorldState& w, const std::vector<Plan>& plans) {
  for (size_t i = 0; i < w.agents.size(); ++i) {
    if (i >= plans.size()) continue;
    AgentState& a = w.agents[i];
    const Plan& plan = plans[i];
    while (a.waypoint_index < static_cast<int>(plan.size()) &&
           (a.x - plan[static_cast<size_t>(a.waypoint_index)]).norm() <= w.params.waypoint_tol)
      ++a.waypoint_index;
  }
}

namespace {

void register_condition(CbfRegistry& reg, const ConditionSpec& c, const WorldState& w, int agent,
                        PlanSet plans) {
  auto add = [&](Cbf cbf) {
    cbf.gamma = c.gamma;
    std::string id = cbf.id;
    reg.add_atom(std::move(cbf));
    return id;
  };
  switch (c.type) {
    case ConditionSpec::Type::Safety: {
      std::vector<BooleanExpr> terms;
      for (size_t j = 0; j < w.agents.size(); ++j) {
        if (static_cast<int>(j) == agent) continue;
        terms.push_back(BooleanExpr::make_atom(
            add(peer_clearance_cbf(c.id + ":peer" + std::to_string(j), static_cast<int>(j), c.margin))));
      }
      for (size_t k = 0; k < w.obstacles.size(); ++k)
        terms.push_back(BooleanExpr::make_atom(add(obstacle_clearance_cbf(
            c.id + ":obs" + std::to_string(k), static_cast<int>(k), c.margin))));
      if (terms.empty()) terms.push_back(BooleanExpr::make_atom(add(constant_cbf(c.id + ":none", kInf))));
      reg.add_condition(c.id, BooleanExpr::make_and(std::move(terms)));
      break;
    }
    case ConditionSpec::Type::BatteryMargin: {
      Cbf cbf = c.target ? battery_margin_cbf(c.id + ":margin", *c.target)
                         : battery_margin_cbf(c.id + ":margin");
      reg.add_condition(c.id, BooleanExpr::make_atom(add(std::move(cbf))));
      break;
    }
    case ConditionSpec::Type::Connectivity: {
      std::vector<BooleanExpr> terms;
      for (size_t j = 0; j < w.agents.size(); ++j) {
        if (static_cast<int>(j) == agent) continue;
        terms.push_back(BooleanExpr::make_atom(add(
            connectivity_peer_cbf(c.id + ":peer" + std::to_string(j), static_cast<int>(j)))));
      }
      if (terms.empty()) terms.push_back(BooleanExpr::make_atom(add(constant_cbf(c.id + ":none", -kInf))));
      reg.add_condition(c.id, BooleanExpr::make_or(std::move(terms)));
      break;
    }
    case ConditionSpec::Type::ChargerVisible:
      reg.add_condition(c.id, BooleanExpr::make_atom(add(charger_visible_cbf(c.id + ":range"))));
      break;
    case ConditionSpec::Type::AtPoint: {
      if (!c.target) throw std::invalid_argument("condition " + c.id + ": at-point needs a target");
      reg.add_condition(c.id, BooleanExpr::make_atom(add(at_point_cbf(c.id + ":range", *c.target, c.tol))));
      break;
    }
    case ConditionSpec::Type::PlanDone:
      reg.add_condition(c.id, BooleanExpr::make_atom(add(plan_done_cbf(c.id + ":progress", plans))));
      break;
  }
}

NominalFn make_nominal(const ActionSpec& a, PlanSet plans) {
  switch (a.type) {
    case ActionSpec::Type::GotoPlan: return goto_plan_nominal(plans, a.speed_factor);
    case ActionSpec::Type::AvoidEntities: return avoid_entities_nominal(a.margin);
    case ActionSpec::Type::SearchCharger: return search_charger_nominal();
    case ActionSpec::Type::Dock: return dock_nominal(a.stop_fraction);
    case ActionSpec::Type::Rendezvous: return rendezvous_nominal();
  }
  throw std::invalid_argument("action " + a.id + ": unknown type");
}

}  // namespace

Scenario assemble_scenario(const ScenarioSpec& spec) {
  Scenario s;
  s.name = spec.name;
  s.world = spec.world;
  refresh_docked(s.world);
  if (!spec.plans.empty() && spec.plans.size() != spec.world.agents.size())
    throw std::invalid_argument("plan count must match agent count");
  s.plans = std::make_shared<const std::vector<Plan>>(spec.plans);

  std::set<std::string> cond_ids, act_ids;
  for (const auto& c : spec.conditions)
    if (!cond_ids.insert(c.id).second)
      throw std::invalid_argument("duplicate condition id " + c.id);
  for (const auto& a : spec.actions) {
    if (!act_ids.insert(a.id).second)
      throw std::invalid_argument("duplicate action id " + a.id);
    if (cond_ids.count(a.id)) throw std::invalid_argument("id used for condition and action: " + a.id);
    s.actions.emplace(a.id, make_nominal(a, s.plans));
  }

  for (size_t i = 0; i < s.world.agents.size(); ++i) {
    CbfRegistry reg;
    for (const auto& c : spec.conditions)
      register_condition(reg, c, s.world, static_cast<int>(i), s.plans);
    s.registries.push_back(std::move(reg));
  }

  auto require_condition = [&](const std::string& id, const char* where) {
    if (!cond_ids.count(id))
      throw std::invalid_argument(std::string(where) + " references unknown condition " + id);
  };
  auto require_action = [&](const std::string& id, const char* where) {
    if (!act_ids.count(id))
      throw std::invalid_argument(std::string(where) + " references unknown action " + id);
  };

  if (spec.tree) {
    auto diags = validate_cg_bt(*spec.tree);
    if (!diags.empty())
      throw std::invalid_argument("behavior tree: " + diags.front().node_label + ": " +
                                  diags.front().message);
    for (const auto& id : condition_ids(*spec.tree)) require_condition(id, "behavior tree");
    for (const auto& id : action_ids(*spec.tree)) require_action(id, "behavior tree");
    s.tree = spec.tree;
  } else {
    if (spec.fixed_action.empty())
      throw std::invalid_argument("scenario needs a behavior tree or a fixed action");
    require_action(spec.fixed_action, "controller");
    for (const auto& id : spec.fixed_constraints) require_condition(id, "controller");
    require_condition(spec.goal_condition, "controller");
    s.fixed_action = spec.fixed_action;
    s.fixed_constraints = spec.fixed_constraints;
    s.goal_condition = spec.goal_condition;
  }
  s.filter_enabled = spec.filter_enabled;
  s.default_max_ticks = spec.default_max_ticks;
  return s;
}

void set_condition_gamma(Scenario& s, const std::string& condition_id, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  bool found = false;
  for (auto& reg : s.registries) {
    for (const auto& [id, expr] : reg.conditions) {
      if (id != condition_id) continue;
      found = true;
      for (const auto& atom : atoms_of(expr)) reg.atoms.at(atom).gamma = gamma;
    }
  }
  if (!found) throw std::invalid_argument("unknown condition " + condition_id);
}

std::vector<std::string> scenario_names() {
  return {"simple-a", "simple-b", "simple-c", "coverage"};
}

namespace {

// Single AUV crossing a field with one obstacle in the way. The preferred
// zone around the obstacle is wide enough that sliding along it costs more
// battery than the initial charge allows, forcing a conflict between the
// keep-away preference and the battery margin partway through.
ScenarioSpec simple_spec(const std::string& name) {
  ScenarioSpec s;
  s.name = name;
  s.world.params.dt = 0.1;
  s.world.params.v_max = 1.0;
  s.world.params.k_b = 1.0;
  s.world.params.m_s = 1.0;
  s.world.params.m_p = 5.0;
  s.world.params.m_b = 1.0;
  s.world.params.waypoint_tol = 0.5;

  AgentState a;
  a.x = Vec2(0.0, 0.0);
  a.b = 22.0;
  s.world.agents.push_back(a);
  s.world.obstacles.push_back({Vec2(11.0, -0.9), 0.5});

  const Vec2 goal(20.0, 0.0);
  s.plans = {{goal}};

  s.conditions = {
      {.id = "safe", .type = ConditionSpec::Type::Safety, .margin = ParamSel::m_s()},
      {.id = "battery", .type = ConditionSpec::Type::BatteryMargin, .target = goal},
      {.id = "preferred", .type = ConditionSpec::Type::Safety, .margin = ParamSel::m_p()},
      {.id = "at-point", .type = ConditionSpec::Type::AtPoint, .target = goal},
  };
  s.actions = {
      {.id = "avoid-collisions", .type = ActionSpec::Type::AvoidEntities, .margin = ParamSel::m_s()},
      {.id = "goto-conserving", .type = ActionSpec::Type::GotoPlan, .speed_factor = 0.5},
      {.id = "avoid-unsafe", .type = ActionSpec::Type::AvoidEntities, .margin = ParamSel::m_p()},
      {.id = "goto-point", .type = ActionSpec::Type::GotoPlan},
  };
  s.default_max_ticks = 6000;
  return s;
}

BtNode simple_tree() {
  return sequence("mission",
                  {fallback("keep-safe", {condition("safe"), action("avoid-collisions")}),
                   fallback("keep-battery", {condition("battery"), action("goto-conserving")}),
                   fallback("keep-preferred", {condition("preferred"), action("avoid-unsafe")}),
                   fallback("reach-goal", {condition("at-point"), action("goto-point")})});
}

// Three AUVs with chargers at their start positions. Agents 2 and 3 mow
// adjacent three-lane corridors in lockstep; agent 1 starts below its battery
// margin, so its recharge subtree holds it docked until the margin clears.
// The battery margin is the release threshold: an agent leaves its charger
// with h_b = 0, i.e. zero excursion budget, so the docked agent keeps
// station for the whole mission and the connectivity gap it opens is
// attributable only to its active recharge.
ScenarioSpec coverage_spec() {
  ScenarioSpec s;
  s.name = "coverage";
  s.world.params.dt = 0.1;
  s.world.params.v_max = 1.0;
  s.world.params.k_b = 0.5;
  s.world.params.m_s = 1.0;
  s.world.params.m_b = 45.0;
  s.world.params.r_c = 37.0;
  s.world.params.r_v = 10.0;
  s.world.params.r_dock = 2.0;
  s.world.params.recharge_rate = 0.1;
  s.world.params.waypoint_tol = 0.5;

  const double b0[3] = {30.0, 100.0, 100.0};
  for (int i = 0; i < 3; ++i) {
    AgentState a;
    a.x = Vec2(20.0 * i, 0.0);
    a.b = b0[i];
    a.home_charger = i;
    s.world.agents.push_back(a);
    s.world.chargers.push_back({"c" + std::to_string(i), a.x});
  }
  // off-axis centers so the filtered velocity keeps a tangential component;
  // the wide ring sits on agent 2's middle lane and forces the big detour
  s.world.obstacles.push_back({Vec2(28.35, 10.0), 0.8});
  s.world.obstacles.push_back({Vec2(48.3, 9.0), 0.35});
  s.world.obstacles.push_back({Vec2(8.0, 20.0), 0.5});

  s.plans.push_back({});
  const double H = 18.0, sp = 8.0;
  for (int i = 1; i < 3; ++i) {
    double x0 = 20.0 * i;
    s.plans.push_back({Vec2(x0, H), Vec2(x0 + sp, H), Vec2(x0 + sp, 0.0), Vec2(x0 + 2 * sp, 0.0),
                       Vec2(x0 + 2 * sp, H), Vec2(x0, 0.0)});
  }

  s.conditions = {
      {.id = "safe", .type = ConditionSpec::Type::Safety, .margin = ParamSel::m_s()},
      {.id = "battery", .type = ConditionSpec::Type::BatteryMargin},
      {.id = "charger-visible", .type = ConditionSpec::Type::ChargerVisible},
      {.id = "connected", .type = ConditionSpec::Type::Connectivity},
      {.id = "coverage-done", .type = ConditionSpec::Type::PlanDone},
  };
  s.actions = {
      {.id = "avoid-collisions", .type = ActionSpec::Type::AvoidEntities, .margin = ParamSel::m_s()},
      {.id = "search-charger", .type = ActionSpec::Type::SearchCharger},
      {.id = "dock-with-charger", .type = ActionSpec::Type::Dock},
      {.id = "rendezvous", .type = ActionSpec::Type::Rendezvous},
      {.id = "execute-coverage", .type = ActionSpec::Type::GotoPlan},
  };
  s.tree = sequence(
      "mission",
      {fallback("keep-safe", {condition("safe"), action("avoid-collisions")}),
       fallback("keep-battery",
                {condition("battery"),
                 sequence("recharge",
                          {fallback("find-charger",
                                    {condition("charger-visible"), action("search-charger")}),
                           action("dock-with-charger")})}),
       fallback("keep-connected", {condition("connected"), action("rendezvous")}),
       fallback("cover-field", {condition("coverage-done"), action("execute-coverage")})});
  s.default_max_ticks = 20000;
  return s;
}

}  // namespace

ScenarioSpec scenario_spec(const std::string& name) {
  if (name == "simple-a") {
    ScenarioSpec s = simple_spec(name);
    s.fixed_action = "goto-point";
    s.fixed_constraints = {"safe", "preferred"};
    s.goal_condition = "at-point";
    return s;
  }
  if (name == "simple-b") {
    ScenarioSpec s = simple_spec(name);
    s.tree = simple_tree();
    s.filter_enabled = false;
    return s;
  }
  if (name == "simple-c") {
    ScenarioSpec s = simple_spec(name);
    s.tree = simple_tree();
    return s;
  }
  if (name == "coverage") return coverage_spec();
  throw std::invalid_argument("unknown scenario " + name);
}

Scenario build_scenario(const std::string& name) { return assemble_scenario(scenario_spec(name)); }

}  // namespace cbfbt
