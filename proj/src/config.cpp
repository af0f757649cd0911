#include "cbfbt/config.hpp"

#include <fstream>
#include <initializer_list>
#include <stdexcept>

namespace cbfbt {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& ctx, const std::string& msg) {
  throw std::invalid_argument(ctx + ": " + msg);
}

void expect_keys(const json& j, const std::string& ctx,
                 std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(ctx, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) fail(ctx, "unknown key '" + it.key() + "'");
  }
}

double get_num(const json& j, const std::string& ctx) {
  if (!j.is_number()) fail(ctx, "expected a number");
  return j.get<double>();
}

std::string get_str(const json& j, const std::string& ctx) {
  if (!j.is_string()) fail(ctx, "expected a string");
  return j.get<std::string>();
}

Vec2 get_vec2(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 2) fail(ctx, "expected [x, y]");
  return Vec2(get_num(j[0], ctx), get_num(j[1], ctx));
}

ParamSel get_margin(const json& j, const std::string& ctx) {
  if (j.is_number()) return ParamSel::fixed(j.get<double>());
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "m_s") return ParamSel::m_s();
    if (s == "m_p") return ParamSel::m_p();
    if (s == "waypoint_tol") return {ParamSel::Kind::WaypointTol, 0.0};
    fail(ctx, "unknown parameter reference '" + s + "'");
  }
  fail(ctx, "expected a number or parameter name");
}

void apply_params(WorldParams& p, const json& j) {
  expect_keys(j, "params",
              {"dt", "v_max", "k_b", "m_s", "m_p", "m_b", "r_c", "r_v", "r_dock",
               "recharge_rate", "waypoint_tol"});
  auto set = [&](const char* k, double& field) {
    if (j.contains(k)) field = get_num(j.at(k), std::string("params.") + k);
  };
  set("dt", p.dt);
  set("v_max", p.v_max);
  set("k_b", p.k_b);
  set("m_s", p.m_s);
  set("m_p", p.m_p);
  set("m_b", p.m_b);
  set("r_c", p.r_c);
  set("r_v", p.r_v);
  set("r_dock", p.r_dock);
  set("recharge_rate", p.recharge_rate);
  set("waypoint_tol", p.waypoint_tol);
}

WorldState parse_world(const json& j) {
  expect_keys(j, "world", {"agents", "obstacles", "chargers"});
  WorldState w;
  if (!j.contains("agents") || !j.at("agents").is_array() || j.at("agents").empty())
    fail("world", "needs a non-empty agents array");
  for (const auto& ja : j.at("agents")) {
    expect_keys(ja, "world.agents[]", {"x", "b", "home_charger"});
    AgentState a;
    a.x = get_vec2(ja.at("x"), "world.agents[].x");
    if (ja.contains("b")) a.b = get_num(ja.at("b"), "world.agents[].b");
    if (ja.contains("home_charger"))
      a.home_charger = static_cast<int>(get_num(ja.at("home_charger"), "world.agents[].home_charger"));
    w.agents.push_back(a);
  }
  if (j.contains("obstacles"))
    for (const auto& jo : j.at("obstacles")) {
      expect_keys(jo, "world.obstacles[]", {"center", "radius"});
      w.obstacles.push_back({get_vec2(jo.at("center"), "world.obstacles[].center"),
                             get_num(jo.at("radius"), "world.obstacles[].radius")});
    }
  if (j.contains("chargers"))
    for (const auto& jc : j.at("chargers")) {
      expect_keys(jc, "world.chargers[]", {"id", "position"});
      w.chargers.push_back({get_str(jc.at("id"), "world.chargers[].id"),
                            get_vec2(jc.at("position"), "world.chargers[].position")});
    }
  for (const auto& a : w.agents)
    if (a.home_charger >= static_cast<int>(w.chargers.size()))
      fail("world", "home_charger index out of range");
  return w;
}

std::vector<Plan> parse_plans(const json& j) {
  if (!j.is_array()) fail("plans", "expected an array of waypoint lists");
  std::vector<Plan> plans;
  for (const auto& jp : j) {
    if (!jp.is_array()) fail("plans", "expected an array of waypoint lists");
    Plan p;
    for (const auto& jw : jp) p.push_back(get_vec2(jw, "plans[][]"));
    plans.push_back(std::move(p));
  }
  return plans;
}

ConditionSpec parse_condition(const json& j) {
  expect_keys(j, "conditions[]", {"id", "type", "margin", "target", "tol", "gamma"});
  ConditionSpec c;
  c.id = get_str(j.at("id"), "conditions[].id");
  std::string ctx = "condition " + c.id;
  std::string type = get_str(j.at("type"), ctx + ".type");
  auto forbid = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys)
      if (j.contains(k)) fail(ctx, std::string("key '") + k + "' does not apply to type " + type);
  };
  if (type == "safety") {
    c.type = ConditionSpec::Type::Safety;
    forbid({"target", "tol"});
    if (j.contains("margin")) c.margin = get_margin(j.at("margin"), ctx + ".margin");
  } else if (type == "battery-margin") {
    c.type = ConditionSpec::Type::BatteryMargin;
    forbid({"margin", "tol"});
    if (j.contains("target") && !(j.at("target").is_string() &&
                                  j.at("target").get<std::string>() == "home-charger"))
      c.target = get_vec2(j.at("target"), ctx + ".target");
  } else if (type == "connectivity") {
    c.type = ConditionSpec::Type::Connectivity;
    forbid({"margin", "target", "tol"});
  } else if (type == "charger-visible") {
    c.type = ConditionSpec::Type::ChargerVisible;
    forbid({"margin", "target", "tol"});
  } else if (type == "at-point") {
    c.type = ConditionSpec::Type::AtPoint;
    forbid({"margin"});
    if (!j.contains("target")) fail(ctx, "at-point needs a target");
    c.target = get_vec2(j.at("target"), ctx + ".target");
    if (j.contains("tol")) c.tol = get_margin(j.at("tol"), ctx + ".tol");
  } else if (type == "plan-done") {
    c.type = ConditionSpec::Type::PlanDone;
    forbid({"margin", "target", "tol"});
  } else {
    fail(ctx, "unknown type '" + type + "'");
  }
  if (j.contains("gamma")) {
    c.gamma = get_num(j.at("gamma"), ctx + ".gamma");
    if (!(c.gamma > 0.0)) fail(ctx, "gamma must be positive");
  }
  return c;
}

ActionSpec parse_action(const json& j) {
  expect_keys(j, "actions[]", {"id", "type", "speed_factor", "margin", "stop_fraction"});
  ActionSpec a;
  a.id = get_str(j.at("id"), "actions[].id");
  std::string ctx = "action " + a.id;
  std::string type = get_str(j.at("type"), ctx + ".type");
  auto forbid = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys)
      if (j.contains(k)) fail(ctx, std::string("key '") + k + "' does not apply to type " + type);
  };
  if (type == "goto-plan") {
    a.type = ActionSpec::Type::GotoPlan;
    forbid({"margin", "stop_fraction"});
    if (j.contains("speed_factor")) a.speed_factor = get_num(j.at("speed_factor"), ctx);
  } else if (type == "avoid-entities") {
    a.type = ActionSpec::Type::AvoidEntities;
    forbid({"speed_factor", "stop_fraction"});
    if (j.contains("margin")) a.margin = get_margin(j.at("margin"), ctx + ".margin");
  } else if (type == "search-charger") {
    a.type = ActionSpec::Type::SearchCharger;
    forbid({"speed_factor", "margin", "stop_fraction"});
  } else if (type == "dock") {
    a.type = ActionSpec::Type::Dock;
    forbid({"speed_factor", "margin"});
    if (j.contains("stop_fraction")) a.stop_fraction = get_num(j.at("stop_fraction"), ctx);
  } else if (type == "rendezvous") {
    a.type = ActionSpec::Type::Rendezvous;
    forbid({"speed_factor", "margin", "stop_fraction"});
  } else {
    fail(ctx, "unknown type '" + type + "'");
  }
  return a;
}

BtNode parse_tree(const json& j) {
  expect_keys(j, "tree node", {"kind", "label", "id", "children"});
  std::string kind = get_str(j.at("kind"), "tree node.kind");
  std::string label = get_str(j.at("label"), "tree node.label");
  std::string id = j.contains("id") ? get_str(j.at("id"), "tree node.id") : "";
  if (kind == "condition" || kind == "action") {
    if (j.contains("children")) fail("tree node " + label, "leaves take no children");
    return kind == "condition" ? condition(label, id) : action(label, id);
  }
  if (kind != "sequence" && kind != "fallback")
    fail("tree node " + label, "unknown kind '" + kind + "'");
  if (!id.empty()) fail("tree node " + label, "composites take no id");
  std::vector<BtNode> children;
  if (j.contains("children"))
    for (const auto& jc : j.at("children")) children.push_back(parse_tree(jc));
  return kind == "sequence" ? sequence(label, std::move(children))
                            : fallback(label, std::move(children));
}

}  // namespace

LoadedConfig config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("configuration: expected a JSON object");
  if (j.contains("format_version") &&
      !(j.at("format_version").is_number_integer() && j.at("format_version").get<int>() == 1))
    throw std::invalid_argument("configuration: unsupported format_version");

  LoadedConfig cfg;
  ScenarioSpec spec;
  if (j.contains("scenario")) {
    expect_keys(j, "configuration",
                {"format_version", "scenario", "params", "gamma", "filter", "max_ticks",
                 "threads", "seed"});
    spec = scenario_spec(get_str(j.at("scenario"), "scenario"));
  } else {
    expect_keys(j, "configuration",
                {"format_version", "name", "world", "plans", "params", "conditions", "actions",
                 "tree", "controller", "filter", "gamma", "max_ticks", "threads", "seed"});
    spec.name = j.contains("name") ? get_str(j.at("name"), "name") : "custom";
    if (!j.contains("world")) throw std::invalid_argument("configuration: missing world");
    spec.world = parse_world(j.at("world"));
    if (j.contains("plans")) spec.plans = parse_plans(j.at("plans"));
    if (!spec.plans.empty() && spec.plans.size() != spec.world.agents.size())
      throw std::invalid_argument("plans: need one waypoint list per agent");
    if (!j.contains("conditions") || !j.contains("actions"))
      throw std::invalid_argument("configuration: missing conditions or actions");
    for (const auto& jc : j.at("conditions")) spec.conditions.push_back(parse_condition(jc));
    for (const auto& ja : j.at("actions")) spec.actions.push_back(parse_action(ja));
    if (j.contains("tree") == j.contains("controller"))
      throw std::invalid_argument("configuration: needs exactly one of tree or controller");
    if (j.contains("tree")) {
      spec.tree = parse_tree(j.at("tree"));
    } else {
      const json& jc = j.at("controller");
      expect_keys(jc, "controller", {"action", "constraints", "goal"});
      spec.fixed_action = get_str(jc.at("action"), "controller.action");
      if (jc.contains("constraints"))
        for (const auto& c : jc.at("constraints"))
          spec.fixed_constraints.push_back(get_str(c, "controller.constraints[]"));
      spec.goal_condition = get_str(jc.at("goal"), "controller.goal");
    }
  }
  if (j.contains("params")) apply_params(spec.world.params, j.at("params"));
  if (j.contains("filter")) {
    if (!j.at("filter").is_boolean()) throw std::invalid_argument("filter: expected a boolean");
    spec.filter_enabled = j.at("filter").get<bool>();
  }
  if (j.contains("max_ticks")) {
    if (!j.at("max_ticks").is_number_integer() || j.at("max_ticks").get<long>() < 0)
      throw std::invalid_argument("max_ticks: expected a nonnegative integer");
    spec.default_max_ticks = j.at("max_ticks").get<long>();
  }

  cfg.scenario = assemble_scenario(spec);

  if (j.contains("gamma")) {
    const json& jg = j.at("gamma");
    if (!jg.is_object()) throw std::invalid_argument("gamma: expected an object");
    for (auto it = jg.begin(); it != jg.end(); ++it)
      set_condition_gamma(cfg.scenario, it.key(), get_num(it.value(), "gamma." + it.key()));
  }
  if (j.contains("threads")) {
    if (!j.at("threads").is_number_integer() || j.at("threads").get<int>() < 1)
      throw std::invalid_argument("threads: expected a positive integer");
    cfg.options.threads = j.at("threads").get<int>();
  }
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned())
      throw std::invalid_argument("seed: expected a nonnegative integer");
    cfg.options.seed = j.at("seed").get<unsigned>();
  }
  return cfg;
}

LoadedConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return config_from_json(j);
}

void apply_override(LoadedConfig& cfg, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override '" + assignment + "': expected key=value");
  std::string key = assignment.substr(0, eq);
  std::string value = assignment.substr(eq + 1);
  auto as_num = [&]() {
    try {
      size_t used = 0;
      double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument("override " + key + ": '" + value + "' is not a number");
    }
  };
  if (key.rfind("params.", 0) == 0) {
    nlohmann::json jp;
    jp[key.substr(7)] = as_num();
    apply_params(cfg.scenario.world.params, jp);
    return;
  }
  if (key.rfind("gamma.", 0) == 0) {
    set_condition_gamma(cfg.scenario, key.substr(6), as_num());
    return;
  }
  if (key == "max_ticks") {
    long v = static_cast<long>(as_num());
    if (v < 0) throw std::invalid_argument("override max_ticks: must be nonnegative");
    cfg.options.max_ticks = v;
    return;
  }
  if (key == "threads") {
    int v = static_cast<int>(as_num());
    if (v < 1) throw std::invalid_argument("override threads: must be positive");
    cfg.options.threads = v;
    return;
  }
  if (key == "seed") {
    cfg.options.seed = static_cast<unsigned>(as_num());
    return;
  }
  throw std::invalid_argument("override '" + key + "': unknown key");
}

}  // namespace cbfbt
