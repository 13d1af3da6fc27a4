#include "guidex/executor.hpp"

#include <algorithm>
#include <functional>

#include "guidex/error.hpp"
#include "guidex/tree_format.hpp"

namespace guidex {

void check_assignment(const DecisionTree& tree, const Assignment& x, bool require_complete) {
  for (const auto& [name, value] : x) {
    const VariableSpec* spec = tree.find_variable(name);
    if (!spec) throw ExecutionError("unknown variable '" + name + "'");
    if (!spec->admits(value)) {
      throw ExecutionError("value " + to_string(value) + " is not admissible for " +
                           std::string(to_string(spec->kind())) + " variable '" + name + "'");
    }
  }
  if (!require_complete) return;
  std::string missing;
  for (const auto& v : tree.variables()) {
    if (!x.count(v.name())) missing += (missing.empty() ? "" : ", ") + v.name();
  }
  if (!missing.empty()) throw ExecutionError("incomplete assignment; missing: " + missing);
}

bool evaluate(const Predicate& predicate, const Value& value) {
  switch (predicate.op) {
    case Op::is:
      return std::get<bool>(value) == std::get<bool>(predicate.value);
    case Op::in: {
      const auto& set = std::get<std::vector<std::string>>(predicate.value);
      return std::find(set.begin(), set.end(), std::get<std::string>(value)) != set.end();
    }
    case Op::eq:
      if (const auto* s = std::get_if<std::string>(&predicate.value)) {
        return std::get<std::string>(value) == *s;
      }
      return std::get<double>(value) == std::get<double>(predicate.value);
    default:
      break;
  }
  const double x = std::get<double>(value);
  const double t = std::get<double>(predicate.value);
  switch (predicate.op) {
    case Op::lt: return x < t;
    case Op::le: return x <= t;
    case Op::gt: return x > t;
    case Op::ge: return x >= t;
    default: return false;
  }
}

ExecutionResult execute(const DecisionTree& tree, const Assignment& x) {
  check_assignment(tree, x, true);
  ExecutionResult result;
  const Node* node = &tree.root();
  while (!node->is_leaf()) {
    const auto& b = node->branch();
    const bool taken = evaluate(b.predicate, x.find(b.predicate.var)->second);
    result.path.push_back(PathStep{b.predicate, taken});
    node = taken ? b.then_node.get() : b.else_node.get();
  }
  result.output_index = node->leaf_index();
  result.output_label = tree.outputs()[result.output_index];
  return result;
}

namespace {

// Explores every branch still reachable under some completion of `x`.
void explore(const Node& node, const Assignment& x, const ConstraintSet& constraints,
             ResidualResult& out) {
  if (node.is_leaf()) {
    out.reachable_outputs.insert(node.leaf_index());
    return;
  }
  const auto& b = node.branch();
  if (auto it = x.find(b.predicate.var); it != x.end()) {
    const bool taken = evaluate(b.predicate, it->second);
    explore(taken ? *b.then_node : *b.else_node, x, constraints, out);
    return;
  }
  out.blocking.insert(b.predicate.var);
  for (bool taken : {true, false}) {
    ConstraintSet narrowed = constraints;
    narrowed.apply(b.predicate, taken);
    if (narrowed.satisfiable()) explore(taken ? *b.then_node : *b.else_node, x, narrowed, out);
  }
}

}  // namespace

ResidualResult partial_execute(const DecisionTree& tree, const Assignment& x) {
  check_assignment(tree, x, false);
  ResidualResult out;
  ExecutionResult walk;
  const Node* node = &tree.root();
  while (!node->is_leaf()) {
    const auto& b = node->branch();
    auto it = x.find(b.predicate.var);
    if (it == x.end()) {
      explore(*node, x, ConstraintSet::unconstrained(tree), out);
      return out;
    }
    const bool taken = evaluate(b.predicate, it->second);
    walk.path.push_back(PathStep{b.predicate, taken});
    node = taken ? b.then_node.get() : b.else_node.get();
  }
  walk.output_index = node->leaf_index();
  walk.output_label = tree.outputs()[walk.output_index];
  out.reachable_outputs.insert(walk.output_index);
  out.decided = std::move(walk);
  return out;
}

AbductionClass abduce(const DecisionTree& tree, const Assignment& observed,
                      const std::vector<std::string>& hidden_names, std::string_view y_obs) {
  if (!tree.output_index(y_obs)) {
    throw Error("'" + std::string(y_obs) + "' is not an output of tree '" + tree.id() + "'");
  }
  check_assignment(tree, observed, false);
  std::vector<const VariableSpec*> hidden;
  for (const auto& v : tree.variables()) {
    const bool is_hidden =
        std::find(hidden_names.begin(), hidden_names.end(), v.name()) != hidden_names.end();
    const bool is_observed = observed.count(v.name()) > 0;
    if (is_hidden && is_observed) {
      throw Error("variable '" + v.name() + "' is both observed and hidden");
    }
    if (!is_hidden && !is_observed) {
      throw Error("variable '" + v.name() + "' is neither observed nor hidden");
    }
    if (is_hidden) hidden.push_back(&v);
  }
  if (hidden.size() != hidden_names.size()) throw Error("hidden set names undeclared variables");

  std::set<std::size_t> targets;
  for (std::size_t i = 0; i < tree.outputs().size(); ++i) {
    if (tree.outputs()[i] == y_obs) targets.insert(i);
  }

  std::vector<Assignment> members;
  Assignment current;

  // All completions of hidden[k..] once the outcome no longer depends on them.
  std::function<void(std::size_t)> expand = [&](std::size_t k) {
    if (k == hidden.size()) {
      members.push_back(current);
      return;
    }
    for (const auto& value : hidden[k]->domain()) {
      current[hidden[k]->name()] = value;
      expand(k + 1);
    }
    current.erase(hidden[k]->name());
  };

  std::function<void(std::size_t)> search = [&](std::size_t k) {
    const ResidualResult residual = partial_execute(tree, merge_assignments(observed, current));
    if (residual.is_decided()) {
      if (targets.count(residual.decided->output_index)) expand(k);
      return;
    }
    const bool live = std::any_of(residual.reachable_outputs.begin(),
                                  residual.reachable_outputs.end(),
                                  [&](std::size_t i) { return targets.count(i) > 0; });
    if (!live || k == hidden.size()) return;
    for (const auto& value : hidden[k]->domain()) {
      current[hidden[k]->name()] = value;
      search(k + 1);
    }
    current.erase(hidden[k]->name());
  };

  search(0);
  return AbductionClass(std::move(members));
}

bool check_consistency(const DecisionTree& tree, const Assignment& observed,
                       const Assignment& hidden, std::string_view y_obs) {
  return execute(tree, merge_assignments(observed, hidden)).output_label == y_obs;
}

}  // namespace guidex
