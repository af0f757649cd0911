#pragma once

#include <string>

#include "cbfbt/mission.hpp"
#include "cbfbt/sim.hpp"

namespace cbfbt {

/// Renders trajectories, waypoints, obstacle margins, chargers and a capped
/// action-switch legend to a standalone SVG. Output bytes are a pure
/// function of the run result.
void emit_plot(const Scenario& scenario, const RunResult& result, const std::string& path);

}  // namespace cbfbt
