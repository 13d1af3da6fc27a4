#include "guidex/tree_format.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <set>

#include "guidex/error.hpp"

namespace guidex {

namespace {

ParseError schema_error(const std::string& where, const std::string& message) {
  return ParseError(ParseError::Kind::schema, where, message);
}

std::string type_name(const Json& j) { return j.type_name(); }

// Strict view over one JSON object: unknown keys are rejected up front.
class ObjectReader {
 public:
  ObjectReader(const Json& json, std::string path, std::initializer_list<std::string_view> allowed)
      : json_(json), path_(std::move(path)) {
    if (!json_.is_object()) throw schema_error(path_, "expected object, got " + type_name(json_));
    for (const auto& [key, _] : json_.items()) {
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
        throw schema_error(field(key), "unknown field");
      }
    }
  }

  std::string field(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  bool has(std::string_view key) const { return json_.contains(key); }

  const Json& required(std::string_view key) const {
    auto it = json_.find(key);
    if (it == json_.end()) throw schema_error(field(key), "missing required field");
    return *it;
  }

  std::string string(std::string_view key) const {
    const Json& j = required(key);
    if (!j.is_string()) throw schema_error(field(key), "expected string, got " + type_name(j));
    return j.get<std::string>();
  }

  double number(std::string_view key) const {
    const Json& j = required(key);
    if (!j.is_number()) throw schema_error(field(key), "expected number, got " + type_name(j));
    return j.get<double>();
  }

  const Json& array(std::string_view key) const {
    const Json& j = required(key);
    if (!j.is_array()) throw schema_error(field(key), "expected array, got " + type_name(j));
    return j;
  }

 private:
  const Json& json_;
  std::string path_;
};

std::size_t read_index(const Json& j, const std::string& where) {
  if (!j.is_number_unsigned()) {
    throw schema_error(where, "expected non-negative integer, got " + type_name(j));
  }
  return j.get<std::size_t>();
}

std::vector<std::string> read_strings(const Json& array, const std::string& where) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < array.size(); ++i) {
    if (!array[i].is_string()) {
      throw schema_error(where + "[" + std::to_string(i) + "]", "expected string");
    }
    out.push_back(array[i].get<std::string>());
  }
  return out;
}

VariableSpec read_variable(const Json& j, const std::string& where) {
  ObjectReader probe(j, where, {"name", "kind", "values", "unit", "min", "max", "grid"});
  const std::string kind = probe.string("kind");
  const std::string name = probe.string("name");
  try {
    if (kind == "boolean") {
      ObjectReader r(j, where, {"name", "kind"});
      return VariableSpec::boolean(name);
    }
    if (kind == "categorical") {
      ObjectReader r(j, where, {"name", "kind", "values"});
      return VariableSpec::categorical(name, read_strings(r.array("values"), r.field("values")));
    }
    if (kind == "numeric") {
      ObjectReader r(j, where, {"name", "kind", "unit", "min", "max", "grid"});
      std::optional<std::string> unit;
      if (r.has("unit")) unit = r.string("unit");
      std::vector<double> grid;
      const Json& g = r.array("grid");
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!g[i].is_number()) {
          throw schema_error(r.field("grid") + "[" + std::to_string(i) + "]", "expected number");
        }
        grid.push_back(g[i].get<double>());
      }
      return VariableSpec::numeric(name, unit, r.number("min"), r.number("max"), std::move(grid));
    }
  } catch (const ModelError& e) {
    throw ParseError(ParseError::Kind::invariant, where, e.what());
  }
  throw schema_error(where + ".kind", "unknown variable kind '" + kind + "'");
}

Literal read_literal(const Json& j, const std::string& where) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_array()) return read_strings(j, where);
  throw schema_error(where, "unsupported literal of type " + type_name(j));
}

NodePtr read_node(const Json& j, const std::string& where,
                  const std::vector<VariableSpec>& variables) {
  if (j.is_object() && j.contains("leaf")) {
    ObjectReader r(j, where, {"leaf"});
    return Node::leaf(read_index(r.required("leaf"), r.field("leaf")));
  }
  ObjectReader r(j, where, {"if", "then", "else"});
  ObjectReader cond(r.required("if"), r.field("if"), {"var", "op", "value"});
  Predicate predicate;
  predicate.var = cond.string("var");
  const std::string op = cond.string("op");
  auto parsed = parse_op(op);
  if (!parsed) throw schema_error(cond.field("op"), "unknown operator '" + op + "'");
  predicate.op = *parsed;
  predicate.value = read_literal(cond.required("value"), cond.field("value"));

  // Category sets are stored in declared order so equal sets serialize equally.
  if (auto* set = std::get_if<std::vector<std::string>>(&predicate.value)) {
    auto it = std::find_if(variables.begin(), variables.end(),
                           [&](const VariableSpec& v) { return v.name() == predicate.var; });
    if (it != variables.end() && it->kind() == VarKind::categorical) {
      const auto& order = it->values();
      auto rank = [&](const std::string& s) {
        return std::find(order.begin(), order.end(), s) - order.begin();
      };
      std::stable_sort(set->begin(), set->end(),
                       [&](const auto& a, const auto& b) { return rank(a) < rank(b); });
    }
  }
  auto then_node = read_node(r.required("then"), r.field("then"), variables);
  auto else_node = read_node(r.required("else"), r.field("else"), variables);
  return Node::branch(std::move(predicate), std::move(then_node), std::move(else_node));
}

}  // namespace

DecisionTree tree_from_json(const Json& document) {
  ObjectReader r(document, "",
                 {"schema_version", "id", "source", "metadata", "variables", "outputs",
                  "no_action_index", "root"});
  const Json& version = r.required("schema_version");
  if (!version.is_number_integer() || version.get<long long>() != kTreeSchemaVersion) {
    throw schema_error("schema_version", "unsupported schema version " + version.dump());
  }
  ObjectReader src(r.required("source"), "source", {"guideline_id", "chunk_id"});
  TreeSource source{src.string("guideline_id"), src.string("chunk_id")};

  ObjectReader meta(r.required("metadata"), "metadata",
                    {"disease_or_drug", "age_group", "race", "gender", "publication_date"});
  GuidelineMeta metadata;
  metadata.guideline_id = source.guideline_id;
  metadata.disease_or_drug = meta.string("disease_or_drug");
  metadata.age_group = meta.string("age_group");
  metadata.race = meta.string("race");
  metadata.gender = meta.string("gender");
  try {
    metadata.publication_date = Date::parse(meta.string("publication_date"));
  } catch (const ModelError& e) {
    throw schema_error("metadata.publication_date", e.what());
  }

  std::vector<VariableSpec> variables;
  const Json& vars = r.array("variables");
  for (std::size_t i = 0; i < vars.size(); ++i) {
    variables.push_back(read_variable(vars[i], "variables[" + std::to_string(i) + "]"));
  }
  std::vector<std::string> outputs = read_strings(r.array("outputs"), "outputs");

  std::optional<std::size_t> no_action;
  const Json& na = r.required("no_action_index");
  if (!na.is_null()) no_action = read_index(na, "no_action_index");

  NodePtr root = read_node(r.required("root"), "root", variables);
  try {
    return DecisionTree(r.string("id"), std::move(source), std::move(metadata),
                        std::move(variables), std::move(outputs), no_action, std::move(root));
  } catch (const ModelError& e) {
    throw ParseError(ParseError::Kind::invariant, "", e.what());
  }
}

DecisionTree parse_tree(std::string_view document) {
  Json json;
  try {
    json = Json::parse(document);
  } catch (const Json::parse_error& e) {
    throw ParseError(ParseError::Kind::syntax, "byte " + std::to_string(e.byte), e.what());
  }
  return tree_from_json(json);
}

Json value_to_json(const Value& value) {
  return std::visit([](const auto& v) { return Json(v); }, value);
}

Value value_from_json(const Json& value, const std::string& where) {
  if (value.is_boolean()) return value.get<bool>();
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) return value.get<std::string>();
  throw schema_error(where, "expected boolean, number or string, got " + type_name(value));
}

Json predicate_to_json(const Predicate& predicate) {
  Json out = Json::object();
  out["var"] = predicate.var;
  out["op"] = std::string(to_string(predicate.op));
  out["value"] = std::visit([](const auto& v) { return Json(v); }, predicate.value);
  return out;
}

Json path_to_json(const ExecutionPath& path) {
  Json out = Json::array();
  for (const auto& step : path) {
    Json j = predicate_to_json(step.predicate);
    j["taken"] = step.taken;
    out.push_back(std::move(j));
  }
  return out;
}

Json assignment_to_json(const Assignment& assignment) {
  Json out = Json::object();
  for (const auto& [name, value] : assignment) out[name] = value_to_json(value);
  return out;
}

Assignment assignment_from_json(const Json& object, const std::string& where) {
  if (!object.is_object()) throw schema_error(where, "expected object");
  Assignment out;
  for (const auto& [name, value] : object.items()) {
    out.emplace(name, value_from_json(value, where + "." + name));
  }
  return out;
}

namespace {

Json node_to_json(const Node& node) {
  Json out = Json::object();
  if (node.is_leaf()) {
    out["leaf"] = node.leaf_index();
    return out;
  }
  const auto& b = node.branch();
  out["if"] = predicate_to_json(b.predicate);
  out["then"] = node_to_json(*b.then_node);
  out["else"] = node_to_json(*b.else_node);
  return out;
}

Json variable_to_json(const VariableSpec& v) {
  Json out = Json::object();
  out["name"] = v.name();
  out["kind"] = std::string(to_string(v.kind()));
  if (v.kind() == VarKind::categorical) out["values"] = v.values();
  if (v.kind() == VarKind::numeric) {
    if (v.unit()) out["unit"] = *v.unit();
    out["min"] = v.min();
    out["max"] = v.max();
    out["grid"] = v.grid();
  }
  return out;
}

}  // namespace

Json tree_to_json(const DecisionTree& tree) {
  Json out = Json::object();
  out["schema_version"] = kTreeSchemaVersion;
  out["id"] = tree.id();
  out["source"] = {{"guideline_id", tree.source().guideline_id},
                   {"chunk_id", tree.source().chunk_id}};
  const auto& m = tree.metadata();
  out["metadata"] = {{"disease_or_drug", m.disease_or_drug},
                     {"age_group", m.age_group},
                     {"race", m.race},
                     {"gender", m.gender},
                     {"publication_date", m.publication_date.to_string()}};
  out["variables"] = Json::array();
  for (const auto& v : tree.variables()) out["variables"].push_back(variable_to_json(v));
  out["outputs"] = tree.outputs();
  out["no_action_index"] = tree.no_action_index() ? Json(*tree.no_action_index()) : Json(nullptr);
  out["root"] = node_to_json(tree.root());
  return out;
}

std::string serialize_tree(const DecisionTree& tree) { return canonical_dump(tree_to_json(tree)); }

// ---------------------------------------------------------------------------
// Constraint sets

bool CategorySet::contains(const std::string& v) const {
  return std::find(allowed.begin(), allowed.end(), v) != allowed.end();
}

bool NumericRange::contains(double x) const {
  if (x < lo || x > hi) return false;
  if (x == lo && !lo_closed) return false;
  if (x == hi && !hi_closed) return false;
  return std::find(excluded.begin(), excluded.end(), x) == excluded.end();
}

bool NumericRange::empty() const {
  if (lo > hi) return true;
  if (lo == hi) return !contains(lo);
  // A non-degenerate interval minus finitely many points is never empty.
  return false;
}

std::optional<double> NumericRange::pinned() const {
  if (lo == hi && lo_closed && hi_closed) return lo;
  return std::nullopt;
}

std::vector<double> NumericRange::grid_points(const std::vector<double>& grid) const {
  std::vector<double> out;
  std::copy_if(grid.begin(), grid.end(), std::back_inserter(out),
               [&](double g) { return contains(g); });
  return out;
}

namespace {

void tighten_lower(NumericRange& r, double v, bool closed) {
  if (v > r.lo) {
    r.lo = v;
    r.lo_closed = closed;
  } else if (v == r.lo) {
    r.lo_closed = r.lo_closed && closed;
  }
}

void tighten_upper(NumericRange& r, double v, bool closed) {
  if (v < r.hi) {
    r.hi = v;
    r.hi_closed = closed;
  } else if (v == r.hi) {
    r.hi_closed = r.hi_closed && closed;
  }
}

void narrow(NumericRange& r, Op op, double v, bool taken) {
  switch (op) {
    case Op::lt: taken ? tighten_upper(r, v, false) : tighten_lower(r, v, true); break;
    case Op::le: taken ? tighten_upper(r, v, true) : tighten_lower(r, v, false); break;
    case Op::gt: taken ? tighten_lower(r, v, false) : tighten_upper(r, v, true); break;
    case Op::ge: taken ? tighten_lower(r, v, true) : tighten_upper(r, v, false); break;
    case Op::eq:
      if (taken) {
        tighten_lower(r, v, true);
        tighten_upper(r, v, true);
      } else if (std::find(r.excluded.begin(), r.excluded.end(), v) == r.excluded.end()) {
        r.excluded.push_back(v);
        std::sort(r.excluded.begin(), r.excluded.end());
      }
      break;
    default:
      throw Error("operator not applicable to numeric variables");
  }
}

void narrow(CategorySet& s, const Predicate& p, bool taken) {
  std::vector<std::string> members;
  if (const auto* one = std::get_if<std::string>(&p.value)) {
    members.push_back(*one);
  } else {
    members = std::get<std::vector<std::string>>(p.value);
  }
  auto in_members = [&](const std::string& v) {
    return std::find(members.begin(), members.end(), v) != members.end();
  };
  std::erase_if(s.allowed, [&](const std::string& v) { return in_members(v) != taken; });
}

}  // namespace

ConstraintSet ConstraintSet::unconstrained(const DecisionTree& tree) {
  ConstraintSet out;
  for (const auto& v : tree.variables()) {
    switch (v.kind()) {
      case VarKind::boolean:
        out.entries_.emplace(v.name(), BooleanSet{});
        break;
      case VarKind::categorical:
        out.entries_.emplace(v.name(), CategorySet{v.values()});
        break;
      case VarKind::numeric:
        out.entries_.emplace(v.name(), NumericRange{v.min(), v.max(), true, true, {}});
        break;
    }
  }
  return out;
}

void ConstraintSet::apply(const Predicate& predicate, bool taken) {
  auto it = entries_.find(predicate.var);
  if (it == entries_.end()) throw Error("constraint on undeclared variable '" + predicate.var + "'");
  std::visit(
      [&](auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, BooleanSet>) {
          const bool literal = std::get<bool>(predicate.value);
          const bool admitted = taken ? literal : !literal;
          c.allow_true = c.allow_true && admitted;
          c.allow_false = c.allow_false && !admitted;
        } else if constexpr (std::is_same_v<T, CategorySet>) {
          narrow(c, predicate, taken);
        } else {
          narrow(c, predicate.op, std::get<double>(predicate.value), taken);
        }
      },
      it->second);
}

bool ConstraintSet::satisfiable() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const auto& e) {
    return std::visit([](const auto& c) { return !c.empty(); }, e.second);
  });
}

bool ConstraintSet::grid_satisfiable(const DecisionTree& tree) const {
  if (!satisfiable()) return false;
  for (const auto& v : tree.variables()) {
    if (v.kind() != VarKind::numeric) continue;
    if (std::get<NumericRange>(at(v.name())).grid_points(v.grid()).empty()) return false;
  }
  return true;
}

bool ConstraintSet::admits(const Assignment& x) const {
  for (const auto& [name, value] : x) {
    auto it = entries_.find(name);
    if (it == entries_.end()) return false;
    bool ok = std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, BooleanSet>) {
            const auto* b = std::get_if<bool>(&value);
            return b && c.contains(*b);
          } else if constexpr (std::is_same_v<T, CategorySet>) {
            const auto* s = std::get_if<std::string>(&value);
            return s && c.contains(*s);
          } else {
            const auto* d = std::get_if<double>(&value);
            return d && c.contains(*d);
          }
        },
        it->second);
    if (!ok) return false;
  }
  return true;
}

const VarConstraint& ConstraintSet::at(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error("no constraint for variable '" + std::string(name) + "'");
  return it->second;
}

Json constraints_to_json(const ConstraintSet& constraints) {
  Json out = Json::object();
  for (const auto& [name, c] : constraints.entries()) {
    out[name] = std::visit(
        [](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          Json j = Json::object();
          if constexpr (std::is_same_v<T, BooleanSet>) {
            j["values"] = Json::array();
            if (v.allow_false) j["values"].push_back(false);
            if (v.allow_true) j["values"].push_back(true);
          } else if constexpr (std::is_same_v<T, CategorySet>) {
            j["values"] = v.allowed;
          } else {
            j["lo"] = v.lo;
            j["lo_closed"] = v.lo_closed;
            j["hi"] = v.hi;
            j["hi_closed"] = v.hi_closed;
            if (!v.excluded.empty()) j["excluded"] = v.excluded;
          }
          return j;
        },
        c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Paths and validation

namespace {

void collect_paths(const DecisionTree& tree, const Node& node, ExecutionPath& steps,
                   ConstraintSet& constraints, const std::string& locator,
                   std::vector<PathSpec>& out) {
  if (node.is_leaf()) {
    out.push_back(PathSpec{out.size(), steps, node.leaf_index(), constraints, locator});
    return;
  }
  const auto& b = node.branch();
  for (bool taken : {true, false}) {
    ConstraintSet narrowed = constraints;
    narrowed.apply(b.predicate, taken);
    steps.push_back(PathStep{b.predicate, taken});
    collect_paths(tree, taken ? *b.then_node : *b.else_node, steps, narrowed,
                  locator + (taken ? "/then" : "/else"), out);
    steps.pop_back();
  }
}

}  // namespace

std::vector<PathSpec> enumerate_paths(const DecisionTree& tree) {
  std::vector<PathSpec> out;
  ExecutionPath steps;
  ConstraintSet constraints = ConstraintSet::unconstrained(tree);
  collect_paths(tree, tree.root(), steps, constraints, "root", out);
  return out;
}

ConstraintSet path_constraints(const DecisionTree& tree, std::size_t path_id) {
  auto paths = enumerate_paths(tree);
  if (path_id >= paths.size()) {
    throw Error("unknown path_id " + std::to_string(path_id) + " (tree has " +
                std::to_string(paths.size()) + " paths)");
  }
  return std::move(paths[path_id].constraints);
}

bool ValidationReport::ok() const {
  return std::none_of(findings.begin(), findings.end(),
                      [](const Finding& f) { return f.severity == Severity::error; });
}

bool ValidationReport::has(std::string_view code) const {
  return std::any_of(findings.begin(), findings.end(),
                     [&](const Finding& f) { return f.code == code; });
}

Json report_to_json(const ValidationReport& report) {
  Json out = Json::object();
  out["ok"] = report.ok();
  out["findings"] = Json::array();
  for (const auto& f : report.findings) {
    out["findings"].push_back({{"severity", f.severity == Severity::error ? "error" : "warning"},
                               {"code", f.code},
                               {"message", f.message},
                               {"locator", f.locator}});
  }
  return out;
}

namespace {

struct Walker {
  const DecisionTree& tree;
  ValidationReport& report;
  std::vector<bool> reachable_output;
  std::set<std::string> used;

  void walk(const Node& node, const ConstraintSet& constraints, const std::string& locator) {
    if (node.is_leaf()) {
      reachable_output[node.leaf_index()] = true;
      if (!constraints.grid_satisfiable(tree)) {
        report.findings.push_back(
            {Severity::warning, "grid_unsatisfiable",
             "path is satisfiable but no grid assignment reaches it; sampling falls back to "
             "interval midpoints",
             locator});
      }
      return;
    }
    const auto& b = node.branch();
    used.insert(b.predicate.var);
    for (bool taken : {true, false}) {
      ConstraintSet narrowed = constraints;
      narrowed.apply(b.predicate, taken);
      const std::string child = locator + (taken ? "/then" : "/else");
      const Node& next = taken ? *b.then_node : *b.else_node;
      if (!narrowed.satisfiable()) {
        report.findings.push_back({Severity::error, "dead_branch",
                                   "no input satisfies '" + to_string(b.predicate) + "' = " +
                                       (taken ? "true" : "false") + " on this path",
                                   child});
        mark_used(next);
        continue;
      }
      walk(next, narrowed, child);
    }
  }

  void mark_used(const Node& node) {
    if (node.is_leaf()) return;
    used.insert(node.branch().predicate.var);
    mark_used(*node.branch().then_node);
    mark_used(*node.branch().else_node);
  }
};

}  // namespace

ValidationReport validate_tree(const DecisionTree& tree) {
  ValidationReport report;
  Walker walker{tree, report, std::vector<bool>(tree.outputs().size(), false), {}};
  walker.walk(tree.root(), ConstraintSet::unconstrained(tree), "root");

  const auto& vars = tree.variables();
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (!walker.used.count(vars[i].name())) {
      report.findings.push_back({Severity::error, "unused_variable",
                                 "variable '" + vars[i].name() + "' is never tested",
                                 "variables[" + std::to_string(i) + "]"});
    }
  }
  const auto& outputs = tree.outputs();
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (std::find(outputs.begin(), outputs.begin() + static_cast<std::ptrdiff_t>(i), outputs[i]) !=
        outputs.begin() + static_cast<std::ptrdiff_t>(i)) {
      report.findings.push_back({Severity::error, "duplicate_output",
                                 "output label '" + outputs[i] + "' is repeated",
                                 "outputs[" + std::to_string(i) + "]"});
    }
  }
  if (!tree.no_action_index()) {
    report.findings.push_back({Severity::warning, "no_action_missing",
                               "no output is flagged as no-action; balancing is disabled",
                               "no_action_index"});
  }
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (!walker.reachable_output[i]) {
      report.findings.push_back({Severity::warning, "unreachable_output",
                                 "output '" + outputs[i] + "' is not reached by any live path",
                                 "outputs[" + std::to_string(i) + "]"});
    }
  }
  return report;
}

}  // namespace guidex
