#include "cbfbt/world.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace cbfbt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool at_dock(const WorldState& w, const AgentState& a) {
  if (a.home_charger < 0 || a.home_charger >= static_cast<int>(w.chargers.size()))
    return false;
  return (a.x - w.chargers[a.home_charger].position).norm() <= w.params.r_dock;
}

}  // namespace

void refresh_docked(WorldState& w) {
  for (AgentState& a : w.agents) a.docked = at_dock(w, a);
}

WorldState step(const WorldState& w, const std::vector<Vec2>& controls, StepReport* report) {
  if (controls.size() != w.agents.size())
    throw std::invalid_argument("step: expected " + std::to_string(w.agents.size()) +
                                " controls, got " + std::to_string(controls.size()));
  const WorldParams& p = w.params;
  WorldState next = w;
  next.tick_count = w.tick_count + 1;
  if (report) report->agents.assign(w.agents.size(), {});

  for (size_t i = 0; i < w.agents.size(); ++i) {
    const AgentState& a = w.agents[i];
    const Vec2& u = controls[i];
    double speed = u.norm();
    double limit = std::min(p.v_max, std::max(a.b, 0.0));
    if (speed > limit + 1e-9)
      throw std::invalid_argument("step: control for agent " + std::to_string(i) +
                                  " exceeds min(v_max, b): " + std::to_string(speed) +
                                  " > " + std::to_string(limit));

    AgentState& n = next.agents[i];
    n.x = a.x + u * p.dt;

    double spent = p.k_b * speed * p.dt;
    double recharged = a.docked ? p.recharge_rate * p.dt : 0.0;
    double raw = a.b - spent + recharged;
    n.b = std::clamp(raw, 0.0, 100.0);
    n.docked = at_dock(next, n);

    if (report) {
      auto& r = report->agents[i];
      r.spent = spent;
      r.recharged = recharged;
      r.clamped = raw != n.b;
    }
  }
  return next;
}

SenseReport sense(const WorldState& w, int agent) {
  if (agent < 0 || agent >= static_cast<int>(w.agents.size()))
    throw std::invalid_argument("sense: no agent " + std::to_string(agent));
  const AgentState& a = w.agents[agent];
  const WorldParams& p = w.params;

  SenseReport r;
  r.nearest_agent_dist = kInf;
  for (size_t j = 0; j < w.agents.size(); ++j) {
    if (static_cast<int>(j) == agent) continue;
    double d = (a.x - w.agents[j].x).norm();
    r.nearest_agent_dist = std::min(r.nearest_agent_dist, d);
    if (d <= p.r_c) r.neighbors.push_back(static_cast<int>(j));
  }
  r.connected = !r.neighbors.empty();

  r.nearest_obstacle_dist = kInf;
  for (const Obstacle& o : w.obstacles)
    r.nearest_obstacle_dist =
        std::min(r.nearest_obstacle_dist, (a.x - o.center).norm() - o.radius);

  r.dist_to_home_charger = kInf;
  if (a.home_charger >= 0 && a.home_charger < static_cast<int>(w.chargers.size())) {
    r.dist_to_home_charger = (a.x - w.chargers[a.home_charger].position).norm();
    r.charger_visible = r.dist_to_home_charger <= p.r_v;
  }
  return r;
}

}  // namespace cbfbt
