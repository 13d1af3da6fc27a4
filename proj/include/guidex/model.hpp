#pragma once

// Core domain types: variables, predicates, decision trees, assignments and
// the records derived from executing them.

#include <compare>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace guidex {

/// Value of a single clinical variable: boolean, numeric, or categorical.
using Value = std::variant<bool, double, std::string>;

/// Variable valuation keyed by name. May be partial.
using Assignment = std::map<std::string, Value, std::less<>>;

std::string to_string(const Value& value);

enum class VarKind { boolean, categorical, numeric };

std::string_view to_string(VarKind kind);

/// Declaration of one clinical variable. Instances are only obtainable
/// through the validating factories below.
class VariableSpec {
 public:
  static VariableSpec boolean(std::string name);
  static VariableSpec categorical(std::string name, std::vector<std::string> values);
  /// `grid` is the finite enumeration domain used by abduction and sampling;
  /// it must be strictly increasing and lie inside [min, max].
  static VariableSpec numeric(std::string name, std::optional<std::string> unit, double min,
                              double max, std::vector<double> grid);

  const std::string& name() const { return name_; }
  VarKind kind() const { return kind_; }
  const std::vector<std::string>& values() const { return values_; }
  const std::optional<std::string>& unit() const { return unit_; }
  double min() const { return min_; }
  double max() const { return max_; }
  const std::vector<double>& grid() const { return grid_; }

  /// True when `value` has this variable's kind and lies inside its domain
  /// (numeric values may be anywhere in [min, max], not only on the grid).
  bool admits(const Value& value) const;

  /// Finite enumeration domain: {false, true}, the declared categories, or the grid.
  std::vector<Value> domain() const;

  bool operator==(const VariableSpec&) const = default;

 private:
  VariableSpec() = default;

  std::string name_;
  VarKind kind_ = VarKind::boolean;
  std::vector<std::string> values_;
  std::optional<std::string> unit_;
  double min_ = 0.0;
  double max_ = 0.0;
  std::vector<double> grid_;
};

bool is_identifier(std::string_view name);

enum class Op { lt, le, gt, ge, eq, is, in };

std::string_view to_string(Op op);
std::optional<Op> parse_op(std::string_view text);

/// Predicate literal: boolean constant, real, category, or category set (`in`).
using Literal = std::variant<bool, double, std::string, std::vector<std::string>>;

struct Predicate {
  std::string var;
  Op op = Op::eq;
  Literal value;

  bool operator==(const Predicate&) const = default;
};

std::string to_string(const Predicate& predicate);

/// Throws ModelError unless `predicate` is legal for `spec`: the operator
/// matches the kind and the literal lies in the declared domain.
void check_predicate(const VariableSpec& spec, const Predicate& predicate);

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Immutable tree node: either a leaf carrying an output index or a binary
/// branch on an atomic predicate.
struct Node {
  struct Branch {
    Predicate predicate;
    NodePtr then_node;
    NodePtr else_node;
  };

  std::variant<std::size_t, Branch> content;

  static NodePtr leaf(std::size_t output_index);
  static NodePtr branch(Predicate predicate, NodePtr then_node, NodePtr else_node);

  bool is_leaf() const { return std::holds_alternative<std::size_t>(content); }
  std::size_t leaf_index() const { return std::get<std::size_t>(content); }
  const Branch& branch() const { return std::get<Branch>(content); }
};

bool operator==(const Node& lhs, const Node& rhs);

struct Date {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;

  /// Parses `YYYY-MM-DD`; throws ModelError on malformed or impossible dates.
  static Date parse(std::string_view text);
  std::string to_string() const;

  auto operator<=>(const Date&) const = default;
};

struct GuidelineMeta {
  std::string guideline_id;
  std::string source_org;
  std::string disease_or_drug;
  std::string age_group;
  std::string race;
  std::string gender;
  Date publication_date;

  bool operator==(const GuidelineMeta&) const = default;
};

struct TreeSource {
  std::string guideline_id;
  std::string chunk_id;

  bool operator==(const TreeSource&) const = default;
};

/// Executable form of one guideline recommendation.
///
/// The constructor enforces the structural invariants: unique, well-formed
/// variable names; leaf indices inside the output list; predicates that
/// reference declared variables with kind-legal operators and in-domain
/// literals. Semantic findings (unused variables, repeated labels, dead
/// branches) are reported by validate_tree instead.
class DecisionTree {
 public:
  DecisionTree(std::string id, TreeSource source, GuidelineMeta metadata,
               std::vector<VariableSpec> variables, std::vector<std::string> outputs,
               std::optional<std::size_t> no_action_index, NodePtr root);

  const std::string& id() const { return id_; }
  const TreeSource& source() const { return source_; }
  const GuidelineMeta& metadata() const { return metadata_; }
  const std::vector<VariableSpec>& variables() const { return variables_; }
  const std::vector<std::string>& outputs() const { return outputs_; }
  std::optional<std::size_t> no_action_index() const { return no_action_index_; }
  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }

  const VariableSpec* find_variable(std::string_view name) const;
  std::optional<std::size_t> output_index(std::string_view label) const;
  bool is_no_action(std::string_view label) const;
  std::size_t leaf_count() const;
  std::size_t node_count() const;

  friend bool operator==(const DecisionTree& lhs, const DecisionTree& rhs);

 private:
  std::string id_;
  TreeSource source_;
  GuidelineMeta metadata_;
  std::vector<VariableSpec> variables_;
  std::vector<std::string> outputs_;
  std::optional<std::size_t> no_action_index_;
  NodePtr root_;
};

/// Union of two assignments. Throws ConflictError naming the first key on
/// which they disagree.
Assignment merge_assignments(const Assignment& base, const Assignment& overlay);

/// Sub-assignment holding only the listed names that are present.
Assignment restrict_to(const Assignment& assignment, const std::vector<std::string>& names);

struct PathStep {
  Predicate predicate;
  bool taken = false;

  bool operator==(const PathStep&) const = default;
};

using ExecutionPath = std::vector<PathStep>;

/// Set of complete hidden-variable assignments consistent with an observation.
class AbductionClass {
 public:
  AbductionClass() = default;
  explicit AbductionClass(std::vector<Assignment> members);

  const std::vector<Assignment>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  bool contains(const Assignment& hidden) const;

  /// Set equality, independent of member order.
  friend bool operator==(const AbductionClass& lhs, const AbductionClass& rhs);

 private:
  std::vector<Assignment> members_;
};

}  // namespace guidex
