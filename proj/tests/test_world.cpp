#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "cbfbt/world.hpp"

using namespace cbfbt;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

WorldState world_with_agent(Vec2 x, double b = 100.0) {
  WorldState w;
  AgentState a;
  a.x = x;
  a.b = b;
  w.agents.push_back(a);
  return w;
}

}  // namespace

TEST_CASE("step advances position and drains charge by distance") {
  WorldState w = world_with_agent(Vec2(1.0, 2.0), 50.0);
  w.params.dt = 0.1;
  w.params.k_b = 0.5;

  SUBCASE("rest consumes nothing") {
    StepReport report;
    WorldState next = step(w, {Vec2(0.0, 0.0)}, &report);
    CHECK(next.agents[0].x.x() == 1.0);
    CHECK(next.agents[0].x.y() == 2.0);
    CHECK(next.agents[0].b == 50.0);
    CHECK(next.tick_count == 1);
    CHECK(report.agents[0].spent == 0.0);
    CHECK_FALSE(report.agents[0].clamped);
  }
  SUBCASE("full speed burns k_b per metre") {
    WorldState next = step(w, {Vec2(1.0, 0.0)});
    CHECK(next.agents[0].x.x() == doctest::Approx(1.1));
    CHECK(next.agents[0].b == doctest::Approx(49.95));  // 0.5 * 1 * 0.1
  }
  SUBCASE("time tracks the tick count exactly") {
    WorldState next = step(step(w, {Vec2(0, 0)}), {Vec2(0, 0)});
    CHECK(next.tick_count == 2);
    CHECK(next.time() == doctest::Approx(0.2));
  }
}

TEST_CASE("step enforces the saturation contract") {
  WorldState w = world_with_agent(Vec2(0, 0), 100.0);
  w.params.v_max = 1.0;
  CHECK_THROWS_AS(step(w, {}), std::invalid_argument);
  CHECK_THROWS_AS(step(w, {Vec2(1.0, 0.0), Vec2(0.0, 0.0)}), std::invalid_argument);
  CHECK_THROWS_AS(step(w, {Vec2(1.5, 0.0)}), std::invalid_argument);

  // a low battery tightens the bound below v_max
  w.agents[0].b = 0.25;
  CHECK_THROWS_AS(step(w, {Vec2(0.5, 0.0)}), std::invalid_argument);
  CHECK_NOTHROW(step(w, {Vec2(0.25, 0.0)}));

  // a dead battery admits only rest
  w.agents[0].b = 0.0;
  CHECK_THROWS_AS(step(w, {Vec2(0.1, 0.0)}), std::invalid_argument);
  CHECK_NOTHROW(step(w, {Vec2(0.0, 0.0)}));
}

TEST_CASE("battery clamps at both rails and the report says so") {
  SUBCASE("recharge saturates at capacity") {
    WorldState w = world_with_agent(Vec2(0, 0), 99.5);
    w.params.dt = 0.1;
    w.params.recharge_rate = 20.0;
    w.chargers.push_back({"c0", Vec2(0, 0)});
    w.agents[0].home_charger = 0;
    refresh_docked(w);
    REQUIRE(w.agents[0].docked);

    StepReport report;
    WorldState next = step(w, {Vec2(0, 0)}, &report);
    CHECK(next.agents[0].b == 100.0);
    CHECK(report.agents[0].recharged == doctest::Approx(2.0));
    CHECK(report.agents[0].clamped);
  }
  SUBCASE("drain saturates at empty") {
    WorldState w = world_with_agent(Vec2(0, 0), 0.0004);
    w.params.dt = 0.1;
    w.params.k_b = 20.0;
    StepReport report;
    WorldState next = step(w, {Vec2(0.0004, 0.0)}, &report);
    CHECK(next.agents[0].b == 0.0);
    CHECK(report.agents[0].clamped);
  }
}

TEST_CASE("docked is recomputed from the post-step position") {
  WorldState w = world_with_agent(Vec2(0.95, 0.0));
  w.params.dt = 0.1;
  w.params.r_dock = 1.0;
  w.params.recharge_rate = 10.0;
  w.chargers.push_back({"c0", Vec2(0, 0)});
  w.agents[0].home_charger = 0;
  refresh_docked(w);
  REQUIRE(w.agents[0].docked);

  // leaving: this step still recharges (docked at its start), the next does not
  StepReport report;
  WorldState out = step(w, {Vec2(1.0, 0.0)}, &report);
  CHECK_FALSE(out.agents[0].docked);
  CHECK(report.agents[0].recharged == doctest::Approx(1.0));
  StepReport report2;
  step(out, {Vec2(1.0, 0.0)}, &report2);
  CHECK(report2.agents[0].recharged == 0.0);

  // returning: the flag flips on as soon as the new position is inside
  WorldState back = step(out, {Vec2(-1.0, 0.0)}, &report2);
  CHECK(back.agents[0].docked);
  CHECK(report2.agents[0].recharged == 0.0);
}

TEST_CASE("refresh_docked honours missing and out-of-range home chargers") {
  WorldState w = world_with_agent(Vec2(0, 0));
  w.chargers.push_back({"c0", Vec2(0, 0)});
  refresh_docked(w);
  CHECK_FALSE(w.agents[0].docked);  // home_charger = -1

  w.agents[0].home_charger = 5;
  refresh_docked(w);
  CHECK_FALSE(w.agents[0].docked);

  w.agents[0].home_charger = 0;
  refresh_docked(w);
  CHECK(w.agents[0].docked);
}

TEST_CASE("battery bookkeeping closes over a random saturated walk") {
  WorldState w = world_with_agent(Vec2(0, 0), 80.0);
  w.params.dt = 0.1;
  w.params.k_b = 0.2;
  w.params.v_max = 1.0;

  std::mt19937 rng(11u);
  std::uniform_real_distribution<double> comp(-0.7, 0.7);
  double expected_spend = 0.0;
  for (int t = 0; t < 200; ++t) {
    Vec2 u(comp(rng), comp(rng));
    if (u.norm() > 1.0) u /= u.norm();
    expected_spend += w.params.k_b * u.norm() * w.params.dt;
    w = step(w, {u});
  }
  CHECK(std::abs(80.0 - w.agents[0].b - expected_spend) <= 1e-9);
}

TEST_CASE("step reads every agent from the pre-step snapshot") {
  WorldState w;
  AgentState a0, a1;
  a0.x = Vec2(0, 0);
  a1.x = Vec2(1, 0);
  w.agents = {a0, a1};
  w.params.dt = 0.1;
  WorldState fwd = step(w, {Vec2(1, 0), Vec2(1, 0)});

  WorldState swapped;
  swapped.agents = {a1, a0};
  swapped.params = w.params;
  WorldState swapped_fwd = step(swapped, {Vec2(1, 0), Vec2(1, 0)});
  CHECK(fwd.agents[0].x.x() == swapped_fwd.agents[1].x.x());
  CHECK(fwd.agents[1].x.x() == swapped_fwd.agents[0].x.x());
}

TEST_CASE("sense reports neighbourhood, obstacles and charger visibility") {
  WorldState w;
  AgentState a0, a1, a2;
  a0.x = Vec2(0, 0);
  a1.x = Vec2(3, 0);
  a2.x = Vec2(0, 20);
  w.agents = {a0, a1, a2};
  w.params.r_c = 5.0;
  w.params.r_v = 10.0;
  w.obstacles.push_back({Vec2(4.0, 0.0), 1.0});
  w.chargers.push_back({"c0", Vec2(0.0, 6.0)});
  w.agents[0].home_charger = 0;

  SenseReport r = sense(w, 0);
  CHECK(r.nearest_agent_dist == doctest::Approx(3.0));
  CHECK(r.connected);
  CHECK(r.neighbors == std::vector<int>{1});
  CHECK(r.nearest_obstacle_dist == doctest::Approx(3.0));  // boundary, not center
  CHECK(r.dist_to_home_charger == doctest::Approx(6.0));
  CHECK(r.charger_visible);

  SenseReport far = sense(w, 2);
  CHECK_FALSE(far.connected);
  CHECK(far.neighbors.empty());
  CHECK(far.dist_to_home_charger == kInf);  // no home charger assigned
  CHECK_FALSE(far.charger_visible);

  CHECK_THROWS_AS(sense(w, 7), std::invalid_argument);
  CHECK_THROWS_AS(sense(w, -1), std::invalid_argument);
}

TEST_CASE("sense boundary cases sit on the inclusive side") {
  WorldState w;
  AgentState a0, a1;
  a0.x = Vec2(0, 0);
  a1.x = Vec2(5, 0);
  w.agents = {a0, a1};
  w.params.r_c = 5.0;
  w.params.r_v = 5.0;
  w.chargers.push_back({"c0", Vec2(0, 5)});
  w.agents[0].home_charger = 0;

  SenseReport r = sense(w, 0);
  CHECK(r.connected);  // exactly r_c counts
  CHECK(r.charger_visible);
}

TEST_CASE("a lone agent senses infinities") {
  WorldState w = world_with_agent(Vec2(0, 0));
  SenseReport r = sense(w, 0);
  CHECK(r.nearest_agent_dist == kInf);
  CHECK(r.nearest_obstacle_dist == kInf);
  CHECK(r.dist_to_home_charger == kInf);
  CHECK_FALSE(r.connected);
  CHECK_FALSE(r.charger_visible);
}
