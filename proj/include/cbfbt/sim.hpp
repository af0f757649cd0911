#pragma once

#include <map>
#include <string>
#include <vector>

#include "cbfbt/mission.hpp"

namespace cbfbt {

struct SimOptions {
  long max_ticks = -1;  // -1: scenario default
  int threads = 1;      // agents computed in parallel when > 1
  bool dump_constraints = false;
  unsigned seed = 0;    // recorded in metrics; the simulation itself is deterministic
};

enum class TerminalStatus { Completed, Failed, Depleted, MaxTicks };

const char* to_string(TerminalStatus s);

/// One agent-tick of telemetry, captured before the world steps.
struct LogRow {
  long tick = 0;
  int agent = 0;
  double x = 0.0, y = 0.0, b = 0.0;
  std::string action;  // "none" when idle
  int levels = 0;
  int active_prefix = 0;
  bool degraded = false;        // some constraint level was dropped
  std::vector<double> h;        // per condition, scenario order
  double min_peer_dist = 0.0;   // +inf when alone
};

struct ConstraintRow {
  long tick = 0;
  int agent = 0;
  std::string source;
  double ax = 0.0, ay = 0.0, b = 0.0;
  int active_prefix = 0;
};

struct AgentMetrics {
  long action_switches = 0;
  long connectivity_violation_ticks = 0;
  long degraded_ticks = 0;
  std::map<std::string, double> terminal_h;  // per condition, on the final state
};

struct RunMetrics {
  bool completed = false;
  TerminalStatus status = TerminalStatus::MaxTicks;
  long ticks = 0;
  double min_pairwise_distance = 0.0;  // +inf single agent
  double min_battery = 0.0;
  long battery_clamp_events = 0;
  std::vector<AgentMetrics> agents;
  std::map<std::string, double> min_h;  // per condition, over agents and ticks
};

struct RunResult {
  std::string scenario;
  RunMetrics metrics;
  std::vector<std::string> condition_order;
  std::vector<LogRow> rows;
  std::vector<ConstraintRow> constraints;  // populated when dump_constraints
  WorldState final_world;
};

/// Runs the scenario to completion, failure, battery depletion or the tick
/// limit. Agents advance waypoints, evaluate conditions, tick the tree (or
/// apply the fixed action), build the graceful-degradation admissible set and
/// solve for the minimally disturbed control, all against the same
/// start-of-tick world snapshot, then step synchronously.
RunResult run(const Scenario& scenario, const SimOptions& options = {});

std::string format_double(double v);  // shortest %.9g form used by the writers

void write_trajectory_csv(const RunResult& result, const std::string& path);
void write_constraints_csv(const RunResult& result, const std::string& path);
void write_metrics_json(const RunResult& result, const SimOptions& options,
                        const std::string& path);

}  // namespace cbfbt
