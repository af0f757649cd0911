#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cbfbt {

enum class TickStatus { Success, Failure, Running };

const char* to_string(TickStatus s);

/// Immutable behavior-tree node. Composites (Fallback/Sequence) own their
/// children by value; leaves carry an id used to look up condition results
/// or action controllers.
struct BtNode {
  enum class Kind { Fallback, Sequence, Action, Condition };

  Kind kind = Kind::Condition;
  std::string label;  // unique within a tree
  std::string id;     // condition-id / action-id for leaves (defaults to label)
  std::vector<BtNode> children;
};

BtNode fallback(std::string label, std::vector<BtNode> children);
BtNode sequence(std::string label, std::vector<BtNode> children);
BtNode action(std::string label, std::string id = "");
BtNode condition(std::string label, std::string id = "");

struct TickResult {
  TickStatus status = TickStatus::Failure;
  std::optional<std::string> active_action;  // action id that returned Running
};

/// One tick of the classic memoryless semantics: Fallback returns the first
/// non-Failure child status, Sequence the first non-Success one. Conditions
/// map their boolean result to Success/Failure and never return Running;
/// actions model continuous controllers and always return Running.
/// Every condition-id present in the tree must have an entry in
/// `condition_results` (throws std::invalid_argument otherwise).
TickResult tick(const BtNode& tree, const std::map<std::string, bool>& condition_results);

/// Boolean expression over condition atoms (also reused with CBF atoms).
/// Composite nodes have >= 1 operand.
struct BooleanExpr {
  enum class Kind { Atom, And, Or };

  Kind kind = Kind::Atom;
  std::string atom;
  std::vector<BooleanExpr> operands;

  static BooleanExpr make_atom(std::string id);
  static BooleanExpr make_and(std::vector<BooleanExpr> ops);
  static BooleanExpr make_or(std::vector<BooleanExpr> ops);
};

/// Maps a condition subtree to its boolean expression: Condition leaf -> atom,
/// Fallback -> Or of children, Sequence -> And of children. Action nodes are
/// a structural error (throws std::invalid_argument).
BooleanExpr expand(const BtNode& condition_subtree);

bool eval(const BooleanExpr& expr, const std::map<std::string, bool>& assignment);

/// Infix rendering, e.g. "(safe & (visible | battery))".
std::string to_string(const BooleanExpr& expr);

/// Condition-ids appearing in an expression, in first-occurrence order.
std::vector<std::string> atoms_of(const BooleanExpr& expr);

/// Condition-ids / action-ids appearing in a tree, in tick order.
std::vector<std::string> condition_ids(const BtNode& tree);
std::vector<std::string> action_ids(const BtNode& tree);

struct Diagnostic {
  std::string node_label;
  std::string message;
};

/// Structural check against the condition-goal shape:
/// a Sequence of Fallback(condition-subtree, action-position) pairs, where an
/// action position holds either an Action leaf or a nested tree of the same
/// shape. A nested tree (not the root) may end with a bare action position:
/// its completion is signalled by the enclosing pair's condition. Also checks
/// label uniqueness, composite arity and action-id uniqueness. Returns every
/// violation found, empty if the tree is well-formed.
std::vector<Diagnostic> validate_cg_bt(const BtNode& tree);

/// Priority-ordered invariants per action: for each action leaf, the expanded
/// condition expressions of all pairs to its left, at every nesting level,
/// parent-level constraints first. Throws std::invalid_argument (first
/// diagnostic message) if the tree does not validate.
struct ConstraintTable {
  struct Row {
    std::string action;
    std::vector<BooleanExpr> invariants;
  };
  std::vector<Row> rows;

  const Row* find(const std::string& action_id) const;
};

ConstraintTable constraint_table(const BtNode& tree);

}  // namespace cbfbt
