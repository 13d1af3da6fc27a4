#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "guidex/model.hpp"

namespace guidex {

struct ExecutionResult {
  std::string output_label;
  std::size_t output_index = 0;
  ExecutionPath path;

  bool operator==(const ExecutionResult&) const = default;
};

/// Outcome of walking a tree over a possibly partial assignment.
struct ResidualResult {
  /// Set when every predicate met on the realized walk was resolvable.
  std::optional<ExecutionResult> decided;
  /// Output indices reachable under some completion of the assignment.
  std::set<std::size_t> reachable_outputs;
  /// Unassigned variables tested on live branches; empty when decided.
  std::set<std::string> blocking;

  bool is_decided() const { return decided.has_value(); }
};

/// Throws ExecutionError when `x` names undeclared variables, carries values
/// outside their declared domain, or (if `require_complete`) misses variables.
void check_assignment(const DecisionTree& tree, const Assignment& x, bool require_complete);

bool evaluate(const Predicate& predicate, const Value& value);

/// f(X) with the activated path.
ExecutionResult execute(const DecisionTree& tree, const Assignment& x);

ResidualResult partial_execute(const DecisionTree& tree, const Assignment& x);

/// Complete hidden assignments (grid values for numerics) that reproduce
/// `y_obs` together with `observed`.
AbductionClass abduce(const DecisionTree& tree, const Assignment& observed,
                      const std::vector<std::string>& hidden_names, std::string_view y_obs);

/// True iff executing observed ∪ hidden yields `y_obs`.
bool check_consistency(const DecisionTree& tree, const Assignment& observed,
                       const Assignment& hidden, std::string_view y_obs);

}  // namespace guidex
