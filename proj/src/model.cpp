#include "guidex/model.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <utility>

#include "guidex/canonical_json.hpp"
#include "guidex/error.hpp"

namespace guidex {

std::string to_string(const Value& value) {
  if (const bool* b = std::get_if<bool>(&value)) return *b ? "true" : "false";
  if (const double* d = std::get_if<double>(&value)) return format_number(*d);
  return std::get<std::string>(value);
}

std::string_view to_string(VarKind kind) {
  switch (kind) {
    case VarKind::boolean: return "boolean";
    case VarKind::categorical: return "categorical";
    case VarKind::numeric: return "numeric";
  }
  return "?";
}

bool is_identifier(std::string_view name) {
  if (name.empty() || name.front() < 'a' || name.front() > 'z') return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

namespace {

void require_identifier(const std::string& name) {
  if (!is_identifier(name)) {
    throw ModelError("variable name '" + name + "' does not match [a-z][a-z0-9_]*");
  }
}

bool is_tree_id(std::string_view id) {
  if (id.empty()) return false;
  auto alnum = [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
  };
  if (!alnum(id.front())) return false;
  return std::all_of(id.begin(), id.end(),
                     [&](char c) { return alnum(c) || c == '.' || c == '_' || c == '-'; });
}

}  // namespace

VariableSpec VariableSpec::boolean(std::string name) {
  require_identifier(name);
  VariableSpec spec;
  spec.name_ = std::move(name);
  spec.kind_ = VarKind::boolean;
  return spec;
}

VariableSpec VariableSpec::categorical(std::string name, std::vector<std::string> values) {
  require_identifier(name);
  if (values.empty()) throw ModelError("categorical variable '" + name + "' has no values");
  std::set<std::string> seen;
  for (const auto& v : values) {
    if (!seen.insert(v).second) {
      throw ModelError("categorical variable '" + name + "' repeats value '" + v + "'");
    }
  }
  VariableSpec spec;
  spec.name_ = std::move(name);
  spec.kind_ = VarKind::categorical;
  spec.values_ = std::move(values);
  return spec;
}

VariableSpec VariableSpec::numeric(std::string name, std::optional<std::string> unit, double min,
                                   double max, std::vector<double> grid) {
  require_identifier(name);
  if (!std::isfinite(min) || !std::isfinite(max) || min > max) {
    throw ModelError("numeric variable '" + name + "' has an invalid range");
  }
  if (grid.empty()) throw ModelError("numeric variable '" + name + "' has an empty grid");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || grid[i] < min || grid[i] > max) {
      throw ModelError("numeric variable '" + name + "' has grid value " + format_number(grid[i]) +
                       " outside [min, max]");
    }
    if (i > 0 && grid[i] <= grid[i - 1]) {
      throw ModelError("numeric variable '" + name + "' grid is not strictly increasing");
    }
  }
  VariableSpec spec;
  spec.name_ = std::move(name);
  spec.kind_ = VarKind::numeric;
  spec.unit_ = std::move(unit);
  spec.min_ = min == 0.0 ? 0.0 : min;
  spec.max_ = max == 0.0 ? 0.0 : max;
  spec.grid_ = std::move(grid);
  return spec;
}

bool VariableSpec::admits(const Value& value) const {
  switch (kind_) {
    case VarKind::boolean:
      return std::holds_alternative<bool>(value);
    case VarKind::categorical: {
      const auto* s = std::get_if<std::string>(&value);
      return s && std::find(values_.begin(), values_.end(), *s) != values_.end();
    }
    case VarKind::numeric: {
      const auto* d = std::get_if<double>(&value);
      return d && std::isfinite(*d) && *d >= min_ && *d <= max_;
    }
  }
  return false;
}

std::vector<Value> VariableSpec::domain() const {
  std::vector<Value> out;
  switch (kind_) {
    case VarKind::boolean:
      out = {Value(false), Value(true)};
      break;
    case VarKind::categorical:
      for (const auto& v : values_) out.emplace_back(v);
      break;
    case VarKind::numeric:
      for (double g : grid_) out.emplace_back(g);
      break;
  }
  return out;
}

std::string_view to_string(Op op) {
  switch (op) {
    case Op::lt: return "lt";
    case Op::le: return "le";
    case Op::gt: return "gt";
    case Op::ge: return "ge";
    case Op::eq: return "eq";
    case Op::is: return "is";
    case Op::in: return "in";
  }
  return "?";
}

std::optional<Op> parse_op(std::string_view text) {
  for (Op op : {Op::lt, Op::le, Op::gt, Op::ge, Op::eq, Op::is, Op::in}) {
    if (to_string(op) == text) return op;
  }
  return std::nullopt;
}

std::string to_string(const Predicate& predicate) {
  std::string literal;
  if (const auto* set = std::get_if<std::vector<std::string>>(&predicate.value)) {
    literal = "{";
    for (std::size_t i = 0; i < set->size(); ++i) literal += (i ? "," : "") + (*set)[i];
    literal += "}";
  } else {
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (!std::is_same_v<T, std::vector<std::string>>) literal = to_string(Value(v));
        },
        predicate.value);
  }
  return predicate.var + " " + std::string(to_string(predicate.op)) + " " + literal;
}

void check_predicate(const VariableSpec& spec, const Predicate& predicate) {
  auto fail = [&](const std::string& why) {
    throw ModelError("predicate '" + to_string(predicate) + "': " + why);
  };
  switch (spec.kind()) {
    case VarKind::boolean:
      if (predicate.op != Op::is) fail("boolean variables only support 'is'");
      if (!std::holds_alternative<bool>(predicate.value)) fail("literal must be true or false");
      break;
    case VarKind::categorical: {
      const auto& values = spec.values();
      auto declared = [&](const std::string& v) {
        return std::find(values.begin(), values.end(), v) != values.end();
      };
      if (predicate.op == Op::eq) {
        const auto* s = std::get_if<std::string>(&predicate.value);
        if (!s) fail("literal must be a category string");
        if (!declared(*s)) fail("'" + *s + "' is not a declared value");
      } else if (predicate.op == Op::in) {
        const auto* set = std::get_if<std::vector<std::string>>(&predicate.value);
        if (!set || set->empty()) fail("literal must be a non-empty list of categories");
        std::set<std::string> seen;
        for (const auto& v : *set) {
          if (!declared(v)) fail("'" + v + "' is not a declared value");
          if (!seen.insert(v).second) fail("'" + v + "' is repeated");
        }
      } else {
        fail("categorical variables only support 'eq' and 'in'");
      }
      break;
    }
    case VarKind::numeric: {
      if (predicate.op == Op::is || predicate.op == Op::in) {
        fail("numeric variables only support lt, le, gt, ge, eq");
      }
      const auto* d = std::get_if<double>(&predicate.value);
      if (!d) fail("literal must be a number");
      if (!std::isfinite(*d) || *d < spec.min() || *d > spec.max()) {
        fail("threshold outside [" + format_number(spec.min()) + ", " + format_number(spec.max()) +
             "]");
      }
      break;
    }
  }
}

NodePtr Node::leaf(std::size_t output_index) {
  return std::make_shared<const Node>(Node{output_index});
}

NodePtr Node::branch(Predicate predicate, NodePtr then_node, NodePtr else_node) {
  if (!then_node || !else_node) throw ModelError("branch node is missing a child");
  return std::make_shared<const Node>(
      Node{Branch{std::move(predicate), std::move(then_node), std::move(else_node)}});
}

bool operator==(const Node& lhs, const Node& rhs) {
  if (lhs.is_leaf() != rhs.is_leaf()) return false;
  if (lhs.is_leaf()) return lhs.leaf_index() == rhs.leaf_index();
  const auto& a = lhs.branch();
  const auto& b = rhs.branch();
  return a.predicate == b.predicate && *a.then_node == *b.then_node && *a.else_node == *b.else_node;
}

Date Date::parse(std::string_view text) {
  auto bad = [&] { return ModelError("malformed date '" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  auto field = [&](std::size_t pos, std::size_t len) {
    int out = 0;
    auto first = text.data() + pos;
    auto [ptr, ec] = std::from_chars(first, first + len, out);
    if (ec != std::errc() || ptr != first + len) throw bad();
    return out;
  };
  Date date{field(0, 4), static_cast<unsigned>(field(5, 2)), static_cast<unsigned>(field(8, 2))};
  std::chrono::year_month_day ymd{std::chrono::year{date.year}, std::chrono::month{date.month},
                                  std::chrono::day{date.day}};
  if (!ymd.ok()) throw bad();
  return date;
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", year, month, day);
  return buf;
}

DecisionTree::DecisionTree(std::string id, TreeSource source, GuidelineMeta metadata,
                           std::vector<VariableSpec> variables, std::vector<std::string> outputs,
                           std::optional<std::size_t> no_action_index, NodePtr root)
    : id_(std::move(id)),
      source_(std::move(source)),
      metadata_(std::move(metadata)),
      variables_(std::move(variables)),
      outputs_(std::move(outputs)),
      no_action_index_(no_action_index),
      root_(std::move(root)) {
  if (!is_tree_id(id_)) {
    throw ModelError("tree id '" + id_ + "' does not match [A-Za-z0-9][A-Za-z0-9._-]*");
  }
  if (outputs_.empty()) throw ModelError("tree '" + id_ + "' declares no outputs");
  if (no_action_index_ && *no_action_index_ >= outputs_.size()) {
    throw ModelError("no_action_index " + std::to_string(*no_action_index_) + " is out of range");
  }
  std::set<std::string> names;
  for (const auto& v : variables_) {
    if (!names.insert(v.name()).second) {
      throw ModelError("variable '" + v.name() + "' is declared twice");
    }
  }
  if (!root_) throw ModelError("tree '" + id_ + "' has no root");

  std::vector<const Node*> stack{root_.get()};
  while (!stack.empty()) {
    const Node* node = stack.back();
    stack.pop_back();
    if (node->is_leaf()) {
      if (node->leaf_index() >= outputs_.size()) {
        throw ModelError("leaf index " + std::to_string(node->leaf_index()) +
                         " is out of range for " + std::to_string(outputs_.size()) + " outputs");
      }
      continue;
    }
    const auto& branch = node->branch();
    const VariableSpec* spec = find_variable(branch.predicate.var);
    if (!spec) {
      throw ModelError("predicate references undeclared variable '" + branch.predicate.var + "'");
    }
    check_predicate(*spec, branch.predicate);
    stack.push_back(branch.else_node.get());
    stack.push_back(branch.then_node.get());
  }
}

const VariableSpec* DecisionTree::find_variable(std::string_view name) const {
  for (const auto& v : variables_) {
    if (v.name() == name) return &v;
  }
  return nullptr;
}

std::optional<std::size_t> DecisionTree::output_index(std::string_view label) const {
  for (std::size_t i = 0; i < outputs_.size(); ++i) {
    if (outputs_[i] == label) return i;
  }
  return std::nullopt;
}

bool DecisionTree::is_no_action(std::string_view label) const {
  return no_action_index_ && outputs_[*no_action_index_] == label;
}

namespace {

template <typename F>
void visit_nodes(const Node& node, F&& f) {
  f(node);
  if (!node.is_leaf()) {
    visit_nodes(*node.branch().then_node, f);
    visit_nodes(*node.branch().else_node, f);
  }
}

}  // namespace

std::size_t DecisionTree::leaf_count() const {
  std::size_t n = 0;
  visit_nodes(*root_, [&](const Node& node) { n += node.is_leaf(); });
  return n;
}

std::size_t DecisionTree::node_count() const {
  std::size_t n = 0;
  visit_nodes(*root_, [&](const Node&) { ++n; });
  return n;
}

bool operator==(const DecisionTree& lhs, const DecisionTree& rhs) {
  return lhs.id_ == rhs.id_ && lhs.source_ == rhs.source_ && lhs.metadata_ == rhs.metadata_ &&
         lhs.variables_ == rhs.variables_ && lhs.outputs_ == rhs.outputs_ &&
         lhs.no_action_index_ == rhs.no_action_index_ && *lhs.root_ == *rhs.root_;
}

Assignment merge_assignments(const Assignment& base, const Assignment& overlay) {
  Assignment out = base;
  for (const auto& [key, value] : overlay) {
    auto [it, inserted] = out.emplace(key, value);
    if (!inserted) {
      if (!(it->second == value)) throw ConflictError(key);
      it->second = value;
    }
  }
  return out;
}

Assignment restrict_to(const Assignment& assignment, const std::vector<std::string>& names) {
  Assignment out;
  for (const auto& name : names) {
    if (auto it = assignment.find(name); it != assignment.end()) out.insert(*it);
  }
  return out;
}

AbductionClass::AbductionClass(std::vector<Assignment> members) : members_(std::move(members)) {}

bool AbductionClass::contains(const Assignment& hidden) const {
  return std::find(members_.begin(), members_.end(), hidden) != members_.end();
}

bool operator==(const AbductionClass& lhs, const AbductionClass& rhs) {
  std::set<Assignment> a(lhs.members_.begin(), lhs.members_.end());
  std::set<Assignment> b(rhs.members_.begin(), rhs.members_.end());
  return a == b;
}

}  // namespace guidex
