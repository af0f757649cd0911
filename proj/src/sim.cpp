#include "cbfbt/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "cbfbt/controller.hpp"

namespace cbfbt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDepletedB = 1e-6;

// replaces condition atoms with the registry's barrier expressions
BooleanExpr substitute(const BooleanExpr& e, const CbfRegistry& reg) {
  if (e.kind == BooleanExpr::Kind::Atom) return reg.condition_expr(e.atom);
  std::vector<BooleanExpr> ops;
  ops.reserve(e.operands.size());
  for (const auto& o : e.operands) ops.push_back(substitute(o, reg));
  return e.kind == BooleanExpr::Kind::And ? BooleanExpr::make_and(std::move(ops))
                                          : BooleanExpr::make_or(std::move(ops));
}

using LevelMap = std::map<std::string, std::vector<BooleanExpr>>;

std::vector<LevelMap> precompute_levels(const Scenario& sc) {
  std::vector<LevelMap> per_agent(sc.registries.size());
  if (sc.tree) {
    ConstraintTable table = constraint_table(*sc.tree);
    for (size_t i = 0; i < per_agent.size(); ++i) {
      for (const auto& row : table.rows) {
        std::vector<BooleanExpr> exprs;
        exprs.reserve(row.invariants.size());
        for (const auto& inv : row.invariants) exprs.push_back(substitute(inv, sc.registries[i]));
        per_agent[i].emplace(row.action, std::move(exprs));
      }
    }
  } else {
    for (size_t i = 0; i < per_agent.size(); ++i) {
      std::vector<BooleanExpr> exprs;
      for (const auto& id : sc.fixed_constraints)
        exprs.push_back(sc.registries[i].condition_expr(id));
      per_agent[i].emplace(sc.fixed_action, std::move(exprs));
    }
  }
  return per_agent;
}

struct AgentOut {
  TickStatus status = TickStatus::Running;
  std::string action;  // empty when idle
  Vec2 u = Vec2::Zero();
  int levels = 0;
  int active_prefix = 0;
  bool degraded = false;
  std::vector<double> h;
  std::vector<ConstraintRow> dump;
};

AgentOut compute_agent(const Scenario& sc, const LevelMap& levels, const WorldState& w, int i,
                       long t, bool dump) {
  const CbfRegistry& reg = sc.registries[static_cast<size_t>(i)];
  AgentOut out;
  std::map<std::string, bool> truths;
  for (const auto& [id, expr] : reg.conditions) {
    double v = expr_value(expr, reg, w, i);
    out.h.push_back(v);
    truths[id] = v >= 0.0;
  }

  if (sc.tree) {
    TickResult r = tick(*sc.tree, truths);
    out.status = r.status;
    if (r.active_action) out.action = *r.active_action;
  } else {
    bool done = truths.at(sc.goal_condition);
    out.status = done ? TickStatus::Success : TickStatus::Running;
    if (!done) out.action = sc.fixed_action;
  }
  if (out.status != TickStatus::Running || out.action.empty()) return out;

  Vec2 nominal = sc.actions.at(out.action)(w, i);
  double b = w.agents[static_cast<size_t>(i)].b;
  if (!sc.filter_enabled) {
    out.u = saturate(nominal, w.params.v_max, b);
    return out;
  }

  const std::vector<BooleanExpr>& exprs = levels.at(out.action);
  std::vector<std::vector<HalfSpace>> hs;
  hs.reserve(exprs.size());
  for (const auto& e : exprs) hs.push_back(expr_halfspaces(e, reg, w, i));

  // the admissible set lives inside what the battery can actually deliver,
  // so the saturation below never undoes constraint satisfaction
  double v_eff = std::min(w.params.v_max, std::max(b, 0.0));
  AdmissibleSet set = build_khat(hs, v_eff);
  out.levels = static_cast<int>(exprs.size());
  out.active_prefix = set.active_prefix;
  out.degraded = set.active_prefix < out.levels;

  ControlRequest req;
  req.nominal = nominal;
  req.set = set;
  out.u = saturate(solve(req), w.params.v_max, b);

  if (dump) {
    for (const auto& level : hs)
      for (const auto& c : level)
        out.dump.push_back({t, i, c.source, c.a.x(), c.a.y(), c.b, set.active_prefix});
  }
  return out;
}

void compute_all(const Scenario& sc, const std::vector<LevelMap>& levels, const WorldState& w,
                 long t, bool dump, int threads, std::vector<AgentOut>& outs) {
  size_t n = w.agents.size();
  size_t workers = std::min<size_t>(std::max(threads, 1), n);
  if (workers <= 1) {
    for (size_t i = 0; i < n; ++i)
      outs[i] = compute_agent(sc, levels[i], w, static_cast<int>(i), t, dump);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (size_t k = 0; k < workers; ++k) {
    pool.emplace_back([&, k]() {
      try {
        for (size_t i = k; i < n; i += workers)
          outs[i] = compute_agent(sc, levels[i], w, static_cast<int>(i), t, dump);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double min_peer_distance(const WorldState& w, size_t i) {
  double best = kInf;
  for (size_t j = 0; j < w.agents.size(); ++j)
    if (j != i) best = std::min(best, (w.agents[i].x - w.agents[j].x).norm());
  return best;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

}  // namespace

const char* to_string(TerminalStatus s) {
  switch (s) {
    case TerminalStatus::Completed: return "completed";
    case TerminalStatus::Failed: return "failed";
    case TerminalStatus::Depleted: return "depleted";
    case TerminalStatus::MaxTicks: return "max-ticks";
  }
  return "?";
}

RunResult run(const Scenario& scenario, const SimOptions& options) {
  if (scenario.world.agents.empty()) throw std::invalid_argument("scenario has no agents");
  const long limit = options.max_ticks >= 0 ? options.max_ticks : scenario.default_max_ticks;
  const size_t n = scenario.world.agents.size();
  std::vector<LevelMap> levels = precompute_levels(scenario);

  RunResult res;
  res.scenario = scenario.name;
  res.condition_order = scenario.registries.front().condition_order();
  const size_t n_cond = res.condition_order.size();
  int connected_idx = -1;
  for (size_t c = 0; c < n_cond; ++c)
    if (res.condition_order[c] == "connected") connected_idx = static_cast<int>(c);

  RunMetrics& met = res.metrics;
  met.agents.resize(n);
  met.min_pairwise_distance = kInf;
  met.min_battery = kInf;
  for (const auto& c : res.condition_order) met.min_h[c] = kInf;

  WorldState w = scenario.world;
  std::vector<std::string> prev_action(n);
  bool have_prev = false;
  TerminalStatus status = TerminalStatus::MaxTicks;

  auto note_row = [&](const LogRow& row) {
    met.min_battery = std::min(met.min_battery, row.b);
    for (size_t c = 0; c < n_cond; ++c) {
      double& m = met.min_h[res.condition_order[c]];
      m = std::min(m, row.h[c]);
    }
    AgentMetrics& am = met.agents[static_cast<size_t>(row.agent)];
    if (connected_idx >= 0 && row.h[static_cast<size_t>(connected_idx)] < 0.0)
      ++am.connectivity_violation_ticks;
    if (row.degraded) ++am.degraded_ticks;
    res.rows.push_back(row);
  };
  auto note_pairwise = [&]() {
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j)
        met.min_pairwise_distance =
            std::min(met.min_pairwise_distance, (w.agents[i].x - w.agents[j].x).norm());
  };

  std::vector<AgentOut> outs(n);
  std::vector<Vec2> controls(n);
  for (long t = 0; t < limit; ++t) {
    advance_waypoints(w, *scenario.plans);
    compute_all(scenario, levels, w, t, options.dump_constraints, options.threads, outs);
    note_pairwise();

    for (size_t i = 0; i < n; ++i) {
      AgentOut& o = outs[i];
      LogRow row;
      row.tick = t;
      row.agent = static_cast<int>(i);
      row.x = w.agents[i].x.x();
      row.y = w.agents[i].x.y();
      row.b = w.agents[i].b;
      row.action = o.action.empty() ? "none" : o.action;
      row.levels = o.levels;
      row.active_prefix = o.active_prefix;
      row.degraded = o.degraded;
      row.h = o.h;
      row.min_peer_dist = min_peer_distance(w, i);
      if (have_prev && row.action != prev_action[i]) ++met.agents[i].action_switches;
      prev_action[i] = row.action;
      note_row(row);
      controls[i] = o.u;
      for (auto& d : o.dump) res.constraints.push_back(std::move(d));
      o.dump.clear();
    }
    have_prev = true;

    bool all_success = true, any_failure = false;
    for (const auto& o : outs) {
      all_success = all_success && o.status == TickStatus::Success;
      any_failure = any_failure || o.status == TickStatus::Failure;
    }
    if (all_success) {
      status = TerminalStatus::Completed;
      break;
    }
    if (any_failure) {
      status = TerminalStatus::Failed;
      break;
    }

    StepReport report;
    w = step(w, controls, &report);
    for (const auto& pa : report.agents)
      if (pa.clamped) ++met.battery_clamp_events;

    bool all_depleted = true;
    for (const auto& a : w.agents) all_depleted = all_depleted && a.b < kDepletedB;
    if (all_depleted) {
      status = TerminalStatus::Depleted;
      break;
    }
  }

  // close the telemetry with the post-step state when the loop ended on a step
  advance_waypoints(w, *scenario.plans);
  if (res.rows.empty() || res.rows.back().tick < w.tick_count) {
    note_pairwise();
    for (size_t i = 0; i < n; ++i) {
      LogRow row;
      row.tick = w.tick_count;
      row.agent = static_cast<int>(i);
      row.x = w.agents[i].x.x();
      row.y = w.agents[i].x.y();
      row.b = w.agents[i].b;
      row.action = "none";
      for (const auto& [id, expr] : scenario.registries[i].conditions)
        row.h.push_back(expr_value(expr, scenario.registries[i], w, static_cast<int>(i)));
      row.min_peer_dist = min_peer_distance(w, i);
      note_row(row);
    }
  }

  for (size_t i = 0; i < n; ++i)
    for (const auto& [id, expr] : scenario.registries[i].conditions)
      met.agents[i].terminal_h[id] = expr_value(expr, scenario.registries[i], w, static_cast<int>(i));

  met.status = status;
  met.completed = status == TerminalStatus::Completed;
  met.ticks = w.tick_count;
  res.final_world = std::move(w);
  return res;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_trajectory_csv(const RunResult& result, const std::string& path) {
  std::ofstream f = open_output(path);
  f << "format_version,tick,time,agent,x,y,b,action,levels,active_prefix,degraded";
  for (const auto& c : result.condition_order) f << ",h_" << c;
  f << ",min_peer_dist\n";
  double dt = result.final_world.params.dt;
  for (const auto& r : result.rows) {
    f << "1," << r.tick << ',' << format_double(static_cast<double>(r.tick) * dt) << ','
      << r.agent << ',' << format_double(r.x) << ',' << format_double(r.y) << ','
      << format_double(r.b) << ',' << r.action << ',' << r.levels << ',' << r.active_prefix << ','
      << (r.degraded ? 1 : 0);
    for (double h : r.h) f << ',' << format_double(h);
    f << ',' << format_double(r.min_peer_dist) << '\n';
  }
}

void write_constraints_csv(const RunResult& result, const std::string& path) {
  std::ofstream f = open_output(path);
  f << "format_version,tick,agent,source,a_x,a_y,b,active_prefix\n";
  for (const auto& c : result.constraints)
    f << "1," << c.tick << ',' << c.agent << ',' << c.source << ',' << format_double(c.ax) << ','
      << format_double(c.ay) << ',' << format_double(c.b) << ',' << c.active_prefix << '\n';
}

void write_metrics_json(const RunResult& result, const SimOptions& options,
                        const std::string& path) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["scenario"] = result.scenario;
  j["completed"] = result.metrics.completed;
  j["terminal_status"] = to_string(result.metrics.status);
  j["ticks"] = result.metrics.ticks;
  j["seed"] = options.seed;
  j["min_pairwise_distance"] = result.metrics.min_pairwise_distance;
  j["min_battery"] = result.metrics.min_battery;
  j["battery_clamp_events"] = result.metrics.battery_clamp_events;
  nlohmann::ordered_json min_h = nlohmann::ordered_json::object();
  for (const auto& c : result.condition_order) min_h[c] = result.metrics.min_h.at(c);
  j["min_h"] = min_h;
  j["agents"] = nlohmann::ordered_json::array();
  for (const auto& a : result.metrics.agents) {
    nlohmann::ordered_json ja;
    ja["action_switches"] = a.action_switches;
    ja["connectivity_violation_ticks"] = a.connectivity_violation_ticks;
    ja["degraded_ticks"] = a.degraded_ticks;
    nlohmann::ordered_json th = nlohmann::ordered_json::object();
    for (const auto& c : result.condition_order) th[c] = a.terminal_h.at(c);
    ja["terminal_h"] = th;
    j["agents"].push_back(ja);
  }
  std::ofstream f = open_output(path);
  f << j.dump(2) << '\n';
}

}  // namespace cbfbt
