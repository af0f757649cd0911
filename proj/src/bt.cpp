#include "cbfbt/bt.hpp"

#include <set>
#include <stdexcept>

namespace cbfbt {

const char* to_string(TickStatus s) {
  switch (s) {
    case TickStatus::Success: return "Success";
    case TickStatus::Failure: return "Failure";
    case TickStatus::Running: return "Running";
  }
  return "?";
}

BtNode fallback(std::string label, std::vector<BtNode> children) {
  return BtNode{BtNode::Kind::Fallback, std::move(label), "", std::move(children)};
}

BtNode sequence(std::string label, std::vector<BtNode> children) {
  return BtNode{BtNode::Kind::Sequence, std::move(label), "", std::move(children)};
}

BtNode action(std::string label, std::string id) {
  if (id.empty()) id = label;
  return BtNode{BtNode::Kind::Action, std::move(label), std::move(id), {}};
}

BtNode condition(std::string label, std::string id) {
  if (id.empty()) id = label;
  return BtNode{BtNode::Kind::Condition, std::move(label), std::move(id), {}};
}

namespace {

void collect_ids(const BtNode& n, BtNode::Kind kind, std::vector<std::string>& out) {
  if (n.kind == kind) out.push_back(n.id);
  for (const BtNode& c : n.children) collect_ids(c, kind, out);
}

TickStatus tick_node(const BtNode& n, const std::map<std::string, bool>& results,
                     std::optional<std::string>& active) {
  switch (n.kind) {
    case BtNode::Kind::Condition: {
      auto it = results.find(n.id);
      if (it == results.end())
        throw std::invalid_argument("tick: no result for condition '" + n.id + "'");
      return it->second ? TickStatus::Success : TickStatus::Failure;
    }
    case BtNode::Kind::Action:
      active = n.id;
      return TickStatus::Running;
    case BtNode::Kind::Fallback: {
      if (n.children.empty())
        throw std::logic_error("tick: Fallback '" + n.label + "' has no children");
      for (const BtNode& c : n.children) {
        TickStatus s = tick_node(c, results, active);
        if (s != TickStatus::Failure) return s;
      }
      return TickStatus::Failure;
    }
    case BtNode::Kind::Sequence: {
      if (n.children.empty())
        throw std::logic_error("tick: Sequence '" + n.label + "' has no children");
      for (const BtNode& c : n.children) {
        TickStatus s = tick_node(c, results, active);
        if (s != TickStatus::Success) return s;
      }
      return TickStatus::Success;
    }
  }
  throw std::logic_error("tick: bad node kind");
}

}  // namespace

TickResult tick(const BtNode& tree, const std::map<std::string, bool>& condition_results) {
  for (const std::string& id : condition_ids(tree))
    if (!condition_results.count(id))
      throw std::invalid_argument("tick: no result for condition '" + id + "'");
  TickResult r;
  r.status = tick_node(tree, condition_results, r.active_action);
  return r;
}

BooleanExpr BooleanExpr::make_atom(std::string id) {
  BooleanExpr e;
  e.kind = Kind::Atom;
  e.atom = std::move(id);
  return e;
}

BooleanExpr BooleanExpr::make_and(std::vector<BooleanExpr> ops) {
  if (ops.empty()) throw std::invalid_argument("BooleanExpr: And with no operands");
  if (ops.size() == 1) return ops.front();
  BooleanExpr e;
  e.kind = Kind::And;
  e.operands = std::move(ops);
  return e;
}

BooleanExpr BooleanExpr::make_or(std::vector<BooleanExpr> ops) {
  if (ops.empty()) throw std::invalid_argument("BooleanExpr: Or with no operands");
  if (ops.size() == 1) return ops.front();
  BooleanExpr e;
  e.kind = Kind::Or;
  e.operands = std::move(ops);
  return e;
}

BooleanExpr expand(const BtNode& n) {
  switch (n.kind) {
    case BtNode::Kind::Condition:
      return BooleanExpr::make_atom(n.id);
    case BtNode::Kind::Action:
      throw std::invalid_argument("expand: action '" + n.label + "' in condition subtree");
    case BtNode::Kind::Fallback:
    case BtNode::Kind::Sequence: {
      if (n.children.empty())
        throw std::invalid_argument("expand: composite '" + n.label + "' has no children");
      std::vector<BooleanExpr> ops;
      ops.reserve(n.children.size());
      for (const BtNode& c : n.children) ops.push_back(expand(c));
      return n.kind == BtNode::Kind::Fallback ? BooleanExpr::make_or(std::move(ops))
                                              : BooleanExpr::make_and(std::move(ops));
    }
  }
  throw std::logic_error("expand: bad node kind");
}

bool eval(const BooleanExpr& e, const std::map<std::string, bool>& assignment) {
  switch (e.kind) {
    case BooleanExpr::Kind::Atom: {
      auto it = assignment.find(e.atom);
      if (it == assignment.end())
        throw std::invalid_argument("eval: no value for atom '" + e.atom + "'");
      return it->second;
    }
    case BooleanExpr::Kind::And:
      for (const BooleanExpr& o : e.operands)
        if (!eval(o, assignment)) return false;
      return true;
    case BooleanExpr::Kind::Or:
      for (const BooleanExpr& o : e.operands)
        if (eval(o, assignment)) return true;
      return false;
  }
  throw std::logic_error("eval: bad expr kind");
}

std::vector<std::string> atoms_of(const BooleanExpr& expr) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto walk = [&](auto&& self, const BooleanExpr& e) -> void {
    if (e.kind == BooleanExpr::Kind::Atom) {
      if (seen.insert(e.atom).second) out.push_back(e.atom);
      return;
    }
    for (const BooleanExpr& o : e.operands) self(self, o);
  };
  walk(walk, expr);
  return out;
}

std::vector<std::string> condition_ids(const BtNode& tree) {
  std::vector<std::string> out;
  collect_ids(tree, BtNode::Kind::Condition, out);
  return out;
}

std::vector<std::string> action_ids(const BtNode& tree) {
  std::vector<std::string> out;
  collect_ids(tree, BtNode::Kind::Action, out);
  return out;
}

namespace {

bool is_condition_subtree(const BtNode& n, std::vector<Diagnostic>& diags) {
  switch (n.kind) {
    case BtNode::Kind::Condition:
      return true;
    case BtNode::Kind::Action:
      diags.push_back({n.label, "action in condition position"});
      return false;
    default: {
      if (n.children.empty()) {
        diags.push_back({n.label, "composite node has no children"});
        return false;
      }
      bool ok = true;
      for (const BtNode& c : n.children) ok &= is_condition_subtree(c, diags);
      return ok;
    }
  }
}

void check_cg_sequence(const BtNode& n, bool nested, std::vector<Diagnostic>& diags);

// action position: an Action leaf or a nested condition-goal tree
void check_action_position(const BtNode& n, std::vector<Diagnostic>& diags) {
  if (n.kind == BtNode::Kind::Action) return;
  if (n.kind == BtNode::Kind::Sequence) {
    check_cg_sequence(n, /*nested=*/true, diags);
    return;
  }
  diags.push_back({n.label, "action position is neither an action nor a nested sequence"});
}

void check_cg_sequence(const BtNode& n, bool nested, std::vector<Diagnostic>& diags) {
  if (n.kind != BtNode::Kind::Sequence) {
    diags.push_back({n.label, "root of a condition-goal tree must be a Sequence"});
    return;
  }
  if (n.children.empty()) {
    diags.push_back({n.label, "Sequence has no children"});
    return;
  }
  for (size_t i = 0; i < n.children.size(); ++i) {
    const BtNode& c = n.children[i];
    bool last = i + 1 == n.children.size();
    if (c.kind == BtNode::Kind::Fallback && c.children.size() == 2) {
      is_condition_subtree(c.children[0], diags);
      check_action_position(c.children[1], diags);
      continue;
    }
    // a nested tree may end with a bare action position; the enclosing
    // pair's condition is what bounds it
    if (nested && last && c.kind != BtNode::Kind::Condition) {
      check_action_position(c, diags);
      continue;
    }
    diags.push_back({c.label, "child of Sequence is not a Fallback(condition, action) pair"});
  }
}

}  // namespace

std::vector<Diagnostic> validate_cg_bt(const BtNode& tree) {
  std::vector<Diagnostic> diags;

  std::set<std::string> labels;
  auto walk = [&](auto&& self, const BtNode& n) -> void {
    if (!labels.insert(n.label).second)
      diags.push_back({n.label, "duplicate node label"});
    bool composite = n.kind == BtNode::Kind::Fallback || n.kind == BtNode::Kind::Sequence;
    if (!composite && !n.children.empty())
      diags.push_back({n.label, "leaf node has children"});
    for (const BtNode& c : n.children) self(self, c);
  };
  walk(walk, tree);

  std::set<std::string> acts;
  for (const std::string& id : action_ids(tree))
    if (!acts.insert(id).second)
      diags.push_back({id, "duplicate action id"});

  check_cg_sequence(tree, /*nested=*/false, diags);
  return diags;
}

const ConstraintTable::Row* ConstraintTable::find(const std::string& action_id) const {
  for (const Row& r : rows)
    if (r.action == action_id) return &r;
  return nullptr;
}

namespace {

void table_walk(const BtNode& seq, std::vector<BooleanExpr> inherited, ConstraintTable& out);

void table_handle(const BtNode& pos, const std::vector<BooleanExpr>& constraints,
                  ConstraintTable& out) {
  if (pos.kind == BtNode::Kind::Action) {
    out.rows.push_back({pos.id, constraints});
  } else {
    table_walk(pos, constraints, out);
  }
}

void table_walk(const BtNode& seq, std::vector<BooleanExpr> acc, ConstraintTable& out) {
  for (const BtNode& c : seq.children) {
    if (c.kind == BtNode::Kind::Fallback && c.children.size() == 2) {
      table_handle(c.children[1], acc, out);
      acc.push_back(expand(c.children[0]));
    } else {
      table_handle(c, acc, out);  // trailing bare action position
    }
  }
}

}  // namespace

ConstraintTable constraint_table(const BtNode& tree) {
  auto diags = validate_cg_bt(tree);
  if (!diags.empty())
    throw std::invalid_argument("constraint_table: tree is not in condition-goal shape: '" +
                                diags.front().node_label + "': " + diags.front().message);
  ConstraintTable t;
  table_walk(tree, {}, t);
  return t;
}

std::string to_string(const BooleanExpr& expr) {
  if (expr.kind == BooleanExpr::Kind::Atom) return expr.atom;
  std::string sep = expr.kind == BooleanExpr::Kind::And ? " & " : " | ";
  std::string out = "(";
  for (size_t i = 0; i < expr.operands.size(); ++i) {
    if (i) out += sep;
    out += to_string(expr.operands[i]);
  }
  return out + ")";
}

}  // namespace cbfbt
