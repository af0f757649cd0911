#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace cbfbt {

using Vec2 = Eigen::Vector2d;

struct WorldParams {
  double dt = 0.1;            // s
  double v_max = 1.0;         // m/s
  double k_b = 0.1;           // charge per metre of travel
  double m_s = 1.0;           // hard safety margin, m
  double m_p = 3.0;           // preferred safety margin, m
  double m_b = 5.0;           // battery reserve margin, charge
  double r_c = 15.0;          // communication range, m
  double r_v = 10.0;          // charger visibility range, m
  double r_dock = 1.0;        // docking radius, m
  double recharge_rate = 25.0;  // charge per second while docked
  double waypoint_tol = 0.5;  // m
};

struct AgentState {
  Vec2 x = Vec2::Zero();
  double b = 100.0;        // charge, clamped to [0, 100]
  bool docked = false;
  int home_charger = -1;   // index into WorldState::chargers, -1 = none
  int waypoint_index = 0;
};

struct Obstacle {
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
};

struct Charger {
  std::string id;
  Vec2 position = Vec2::Zero();
};

struct WorldState {
  std::vector<AgentState> agents;
  std::vector<Obstacle> obstacles;
  std::vector<Charger> chargers;
  long tick_count = 0;
  WorldParams params;

  double time() const { return static_cast<double>(tick_count) * params.dt; }
};

/// Recomputes every agent's docked flag from its position; call once after
/// constructing a world by hand.
void refresh_docked(WorldState& w);

struct StepReport {
  struct PerAgent {
    double spent = 0.0;      // k_b * ||u|| * dt
    double recharged = 0.0;  // recharge_rate * dt if docked
    bool clamped = false;    // battery hit 0 or 100
  };
  std::vector<PerAgent> agents;
};

/// Explicit Euler step: x' = x + u*dt, b' = clamp(b - k_b*||u||*dt
/// + recharge if docked, 0, 100); docked' is recomputed from x'.
/// Requires one control per agent with ||u|| <= min(v_max, b) + 1e-9
/// (throws std::invalid_argument otherwise). Each agent's update depends
/// only on the pre-step state.
WorldState step(const WorldState& w, const std::vector<Vec2>& controls,
                StepReport* report = nullptr);

struct SenseReport {
  double nearest_agent_dist = 0.0;     // +inf when alone
  double nearest_obstacle_dist = 0.0;  // boundary distance, +inf when none
  double dist_to_home_charger = 0.0;   // +inf when no home charger
  bool charger_visible = false;        // within r_v of home charger
  bool connected = false;              // some peer within r_c
  std::vector<int> neighbors;          // peer indices within r_c
};

SenseReport sense(const WorldState& w, int agent);

}  // namespace cbfbt
