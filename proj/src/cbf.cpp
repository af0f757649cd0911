#include "cbfbt/cbf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "candidates.hpp"

namespace cbfbt {

using detail::kFeasTol;
using detail::kZeroTol;

HalfSpace halfspace(const Cbf& cbf, const WorldState& w, int agent) {
  double h = cbf.value(w, agent);
  Vec2 a = cbf.control_coeff(w, agent);
  double drift = cbf.drift_at(w, agent);
  if (!std::isfinite(h) || !a.allFinite() || !std::isfinite(drift))
    throw std::domain_error("halfspace: non-finite barrier '" + cbf.id + "' for agent " +
                            std::to_string(agent));
  return HalfSpace{a, -cbf.gamma * h - drift, cbf.id};
}

double compose_and(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("compose_and: empty");
  return *std::min_element(values.begin(), values.end());
}

double compose_or(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("compose_or: empty");
  return *std::max_element(values.begin(), values.end());
}

void CbfRegistry::add_atom(Cbf cbf) {
  std::string id = cbf.id;
  if (!atoms.emplace(id, std::move(cbf)).second)
    throw std::invalid_argument("registry: duplicate atom '" + id + "'");
}

void CbfRegistry::add_condition(const std::string& id, BooleanExpr expr) {
  for (const auto& [cid, _] : conditions)
    if (cid == id) throw std::invalid_argument("registry: duplicate condition '" + id + "'");
  for (const std::string& atom : atoms_of(expr))
    if (!atoms.count(atom))
      throw std::invalid_argument("registry: condition '" + id + "' references unknown atom '" +
                                  atom + "'");
  conditions.emplace_back(id, std::move(expr));
}

const BooleanExpr& CbfRegistry::condition_expr(const std::string& id) const {
  for (const auto& [cid, expr] : conditions)
    if (cid == id) return expr;
  throw std::invalid_argument("registry: unknown condition '" + id + "'");
}

const Cbf& CbfRegistry::atom(const std::string& id) const {
  auto it = atoms.find(id);
  if (it == atoms.end()) throw std::invalid_argument("registry: unknown atom '" + id + "'");
  return it->second;
}

std::vector<std::string> CbfRegistry::condition_order() const {
  std::vector<std::string> out;
  out.reserve(conditions.size());
  for (const auto& [id, _] : conditions) out.push_back(id);
  return out;
}

double expr_value(const BooleanExpr& e, const CbfRegistry& reg, const WorldState& w,
                  int agent) {
  switch (e.kind) {
    case BooleanExpr::Kind::Atom:
      return reg.atom(e.atom).value(w, agent);
    case BooleanExpr::Kind::And: {
      double v = std::numeric_limits<double>::infinity();
      for (const BooleanExpr& o : e.operands) v = std::min(v, expr_value(o, reg, w, agent));
      return v;
    }
    case BooleanExpr::Kind::Or: {
      double v = -std::numeric_limits<double>::infinity();
      for (const BooleanExpr& o : e.operands) v = std::max(v, expr_value(o, reg, w, agent));
      return v;
    }
  }
  throw std::logic_error("expr_value: bad expr kind");
}

namespace {

constexpr double kTieTol = 1e-9;  // composed-value ties resolve to the lowest index

void collect_halfspaces(const BooleanExpr& e, const CbfRegistry& reg, const WorldState& w,
                        int agent, AndPolicy policy, std::vector<HalfSpace>& out) {
  switch (e.kind) {
    case BooleanExpr::Kind::Atom: {
      const Cbf& cbf = reg.atom(e.atom);
      if (!std::isfinite(cbf.value(w, agent))) return;  // unenforceable, omit
      out.push_back(halfspace(cbf, w, agent));
      return;
    }
    case BooleanExpr::Kind::Or: {
      size_t best = 0;
      double best_v = expr_value(e.operands[0], reg, w, agent);
      for (size_t i = 1; i < e.operands.size(); ++i) {
        double v = expr_value(e.operands[i], reg, w, agent);
        if (v > best_v + kTieTol) {
          best_v = v;
          best = i;
        }
      }
      collect_halfspaces(e.operands[best], reg, w, agent, policy, out);
      return;
    }
    case BooleanExpr::Kind::And: {
      if (policy == AndPolicy::Split) {
        for (const BooleanExpr& o : e.operands)
          collect_halfspaces(o, reg, w, agent, policy, out);
        return;
      }
      size_t best = 0;
      double best_v = expr_value(e.operands[0], reg, w, agent);
      for (size_t i = 1; i < e.operands.size(); ++i) {
        double v = expr_value(e.operands[i], reg, w, agent);
        if (v < best_v - kTieTol) {
          best_v = v;
          best = i;
        }
      }
      collect_halfspaces(e.operands[best], reg, w, agent, policy, out);
      return;
    }
  }
  throw std::logic_error("expr_halfspaces: bad expr kind");
}

}  // namespace

std::vector<HalfSpace> expr_halfspaces(const BooleanExpr& expr, const CbfRegistry& reg,
                                       const WorldState& w, int agent, AndPolicy policy) {
  std::vector<HalfSpace> out;
  collect_halfspaces(expr, reg, w, agent, policy, out);
  return out;
}

bool feasible(const std::vector<HalfSpace>& constraints, double v_max) {
  if (v_max < 0.0) return false;
  std::vector<HalfSpace> lines;
  lines.reserve(constraints.size());
  for (const HalfSpace& c : constraints) {
    if (c.a.norm() < kZeroTol) {
      if (c.b > kFeasTol) return false;  // 0 . u >= b > 0
      continue;                          // vacuous
    }
    lines.push_back(c);
  }
  for (const Vec2& u : detail::candidate_points(lines, v_max, Vec2::Zero()))
    if (u.norm() <= v_max + kZeroTol && detail::satisfied(lines, u)) return true;
  return false;
}

bool feasible(const AdmissibleSet& set) { return feasible(set.constraints, set.v_max); }

AdmissibleSet build_khat(const std::vector<std::vector<HalfSpace>>& levels, double v_max) {
  AdmissibleSet set;
  set.v_max = v_max;
  std::vector<HalfSpace> acc;
  for (const auto& level : levels) {
    std::vector<HalfSpace> trial = acc;
    trial.insert(trial.end(), level.begin(), level.end());
    if (!feasible(trial, v_max)) break;
    acc = std::move(trial);
    ++set.active_prefix;
  }
  set.degraded_to_zero = !levels.empty() && set.active_prefix == 0;
  set.constraints = std::move(acc);
  return set;
}

}  // namespace cbfbt
