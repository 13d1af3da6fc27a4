#pragma once

// Decision-tree documents: parsing, canonical serialization, mechanical
// validation, and path enumeration with per-path constraint sets.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "guidex/canonical_json.hpp"
#include "guidex/model.hpp"

namespace guidex {

inline constexpr int kTreeSchemaVersion = 1;

/// Parses a tree document. Throws ParseError (syntax, schema, or invariant).
DecisionTree parse_tree(std::string_view document);
DecisionTree tree_from_json(const Json& document);

/// Canonical bytes of `tree`; parse_tree(serialize_tree(t)) == t.
std::string serialize_tree(const DecisionTree& tree);
Json tree_to_json(const DecisionTree& tree);

Json value_to_json(const Value& value);
/// Maps a JSON scalar back to a Value by JSON type; throws ParseError otherwise.
Value value_from_json(const Json& value, const std::string& where);
Json predicate_to_json(const Predicate& predicate);
Json path_to_json(const ExecutionPath& path);
Json assignment_to_json(const Assignment& assignment);
Assignment assignment_from_json(const Json& object, const std::string& where);

struct BooleanSet {
  bool allow_false = true;
  bool allow_true = true;

  bool empty() const { return !allow_false && !allow_true; }
  bool contains(bool v) const { return v ? allow_true : allow_false; }
  bool operator==(const BooleanSet&) const = default;
};

struct CategorySet {
  std::vector<std::string> allowed;  // declared order

  bool empty() const { return allowed.empty(); }
  bool contains(const std::string& v) const;
  bool operator==(const CategorySet&) const = default;
};

/// Interval with open/closed endpoints, minus finitely many excluded points
/// (from negated `eq`). An `eq` predicate collapses it to a closed point.
struct NumericRange {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_closed = true;
  bool hi_closed = true;
  std::vector<double> excluded;

  bool empty() const;
  bool contains(double x) const;
  std::optional<double> pinned() const;
  std::vector<double> grid_points(const std::vector<double>& grid) const;

  bool operator==(const NumericRange&) const = default;
};

using VarConstraint = std::variant<BooleanSet, CategorySet, NumericRange>;

/// Per-variable admissible sets; a conjunction of predicates under polarity.
class ConstraintSet {
 public:
  /// Every declared variable at its full declared domain.
  static ConstraintSet unconstrained(const DecisionTree& tree);

  /// Narrows by `predicate` evaluated to `taken`.
  void apply(const Predicate& predicate, bool taken);

  bool satisfiable() const;
  /// Satisfiable with every numeric variable restricted to its grid.
  bool grid_satisfiable(const DecisionTree& tree) const;
  /// True when every value present in `x` lies in its admissible set.
  bool admits(const Assignment& x) const;

  const VarConstraint& at(std::string_view name) const;
  const std::map<std::string, VarConstraint, std::less<>>& entries() const { return entries_; }

  bool operator==(const ConstraintSet&) const = default;

 private:
  std::map<std::string, VarConstraint, std::less<>> entries_;
};

Json constraints_to_json(const ConstraintSet& constraints);

struct PathSpec {
  std::size_t path_id = 0;
  ExecutionPath steps;
  std::size_t leaf_output_index = 0;
  ConstraintSet constraints;
  /// Node locator of the leaf, e.g. `root/then/else`.
  std::string locator;
};

/// One PathSpec per leaf, depth-first with then before else.
std::vector<PathSpec> enumerate_paths(const DecisionTree& tree);

/// Throws Error for an unknown path id.
ConstraintSet path_constraints(const DecisionTree& tree, std::size_t path_id);

enum class Severity { error, warning };

struct Finding {
  Severity severity = Severity::error;
  std::string code;
  std::string message;
  std::string locator;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool ok() const;
  bool has(std::string_view code) const;
};

Json report_to_json(const ValidationReport& report);

/// Mechanically checkable validation. Errors: dead_branch, unused_variable,
/// duplicate_output. Warnings: no_action_missing, unreachable_output,
/// grid_unsatisfiable.
ValidationReport validate_tree(const DecisionTree& tree);

}  // namespace guidex
