#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "cbfbt/mission.hpp"
#include "cbfbt/sim.hpp"

namespace cbfbt {

struct LoadedConfig {
  Scenario scenario;
  SimOptions options;
};

/// Builds a runnable configuration from JSON. Either a named preset:
///   {"scenario": "simple-c", "params": {...}, "gamma": {...}, ...}
/// or an inline mission with world, plans, conditions, actions and a tree
/// (or a fixed controller). Unknown keys anywhere are rejected with
/// std::invalid_argument naming the offending key.
LoadedConfig config_from_json(const nlohmann::json& j);

LoadedConfig load_config(const std::string& path);

/// Applies a `key=value` override: params.<field>, gamma.<condition-id>,
/// max_ticks, threads or seed.
void apply_override(LoadedConfig& cfg, const std::string& assignment);

}  // namespace cbfbt
