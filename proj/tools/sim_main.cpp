#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cbfbt/config.hpp"
#include "cbfbt/plot.hpp"
#include "cbfbt/sim.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& out_dir, long max_ticks,
                bool have_max_ticks, const std::vector<std::string>& overrides, bool plot,
                bool dump_constraints) {
  cbfbt::LoadedConfig cfg = cbfbt::load_config(config_path);
  for (const std::string& o : overrides) cbfbt::apply_override(cfg, o);
  if (have_max_ticks) cfg.options.max_ticks = max_ticks;
  cfg.options.dump_constraints = dump_constraints;

  std::filesystem::create_directories(out_dir);
  cbfbt::RunResult result = cbfbt::run(cfg.scenario, cfg.options);

  auto out = [&](const char* name) { return (std::filesystem::path(out_dir) / name).string(); };
  cbfbt::write_trajectory_csv(result, out("trajectory.csv"));
  cbfbt::write_metrics_json(result, cfg.options, out("metrics.json"));
  if (dump_constraints) cbfbt::write_constraints_csv(result, out("constraints.csv"));
  if (plot) cbfbt::emit_plot(cfg.scenario, result, out("trajectory.svg"));

  std::cout << cfg.scenario.name << ": " << to_string(result.metrics.status)
            << " after " << result.metrics.ticks << " ticks"
            << " (min_battery=" << cbfbt::format_double(result.metrics.min_battery)
            << ", outputs in " << out_dir << ")\n";
  return result.metrics.completed ? 0 : 2;
}

int validate_command(const std::string& config_path) {
  cbfbt::LoadedConfig cfg = cbfbt::load_config(config_path);
  const cbfbt::Scenario& s = cfg.scenario;
  std::cout << "configuration ok: " << s.name << "\n"
            << "  agents: " << s.world.agents.size()
            << ", obstacles: " << s.world.obstacles.size()
            << ", chargers: " << s.world.chargers.size() << "\n";
  std::cout << "  conditions:";
  for (const auto& c : s.registries.front().condition_order()) std::cout << ' ' << c;
  std::cout << "\n";
  if (s.tree) {
    cbfbt::ConstraintTable table = cbfbt::constraint_table(*s.tree);
    std::cout << "  action invariants:\n";
    for (const auto& row : table.rows) {
      std::cout << "    " << row.action << ":";
      if (row.invariants.empty()) std::cout << " (none)";
      for (const auto& inv : row.invariants) std::cout << ' ' << to_string(inv);
      std::cout << "\n";
    }
  } else {
    std::cout << "  fixed action: " << s.fixed_action << " under [";
    for (size_t i = 0; i < s.fixed_constraints.size(); ++i)
      std::cout << (i ? ", " : "") << s.fixed_constraints[i];
    std::cout << "], goal " << s.goal_condition << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"control-barrier behavior-tree mission simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  long max_ticks = 0;
  std::vector<std::string> overrides;
  bool plot = false, dump_constraints = false;

  CLI::App* cmd_run = app.add_subcommand("run", "run a mission and write telemetry");
  cmd_run->add_option("config", config_path, "mission configuration (JSON)")->required();
  cmd_run->add_option("--out", out_dir, "output directory (default: out)");
  CLI::Option* opt_ticks = cmd_run->add_option("--max-ticks", max_ticks, "tick limit override");
  cmd_run->add_option("--set", overrides,
                      "override key=value (params.*, gamma.*, max_ticks, threads, seed)");
  cmd_run->add_flag("--plot", plot, "also write trajectory.svg");
  cmd_run->add_flag("--dump-constraints", dump_constraints,
                    "also write the per-tick half-space dump");

  CLI::App* cmd_validate = app.add_subcommand("validate", "check a configuration and its tree");
  cmd_validate->add_option("config", config_path, "mission configuration (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand(cmd_run))
      return run_command(config_path, out_dir, max_ticks, opt_ticks->count() > 0, overrides, plot,
                         dump_constraints);
    return validate_command(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
