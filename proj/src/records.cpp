#include "guidex/records.hpp"

#include <charconv>

#include "guidex/error.hpp"
#include "guidex/tree_format.hpp"

namespace guidex {

namespace {

ParseError record_error(const std::string& where, const std::string& message) {
  return ParseError(ParseError::Kind::schema, where, message);
}

const Json& field(const Json& record, const char* key) {
  if (!record.is_object()) throw record_error("", "record is not an object");
  auto it = record.find(key);
  if (it == record.end()) throw record_error(key, "missing required field");
  return *it;
}

std::string string_field(const Json& record, const char* key) {
  const Json& j = field(record, key);
  if (!j.is_string()) throw record_error(key, "expected string");
  return j.get<std::string>();
}

std::optional<std::string> optional_text(const Json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw record_error(key, "expected string or null");
  return it->get<std::string>();
}

Json optional_text_json(const std::optional<std::string>& text) {
  return text ? Json(*text) : Json(nullptr);
}

void expect_type(const Json& record, const char* type) {
  if (string_field(record, "type") != type) {
    throw record_error("type", std::string("expected record type '") + type + "'");
  }
}

Predicate predicate_from_json(const Json& j, const std::string& where) {
  Predicate p;
  p.var = string_field(j, "var");
  auto op = parse_op(string_field(j, "op"));
  if (!op) throw record_error(where + ".op", "unknown operator");
  p.op = *op;
  const Json& v = field(j, "value");
  if (v.is_array()) {
    p.value = v.get<std::vector<std::string>>();
  } else {
    p.value = std::visit([](auto&& x) -> Literal { return x; }, value_from_json(v, where));
  }
  return p;
}

// Trailing path id in a `<tree>:f:<path>:<draw>` source id embedded in a
// counterfactual instance id; 0 when absent.
std::size_t source_path_of(const std::string& instance_id) {
  auto f = instance_id.find(":f:");
  if (f == std::string::npos) return 0;
  std::size_t out = 0;
  const char* begin = instance_id.data() + f + 3;
  std::from_chars(begin, instance_id.data() + instance_id.size(), out);
  return out;
}

}  // namespace

Json factual_to_json(const FactualInstance& inst) {
  Json out = Json::object();
  out["instance_id"] = inst.instance_id;
  out["tree_id"] = inst.tree_id;
  out["type"] = "factual";
  out["assignment"] = assignment_to_json(inst.assignment);
  out["label"] = inst.label;
  out["path_id"] = inst.path_id;
  out["path"] = path_to_json(inst.path);
  out["question_text"] = optional_text_json(inst.question_text);
  out["rationale_text"] = optional_text_json(inst.rationale_text);
  return out;
}

FactualInstance factual_from_json(const Json& record) {
  expect_type(record, "factual");
  FactualInstance inst;
  inst.instance_id = string_field(record, "instance_id");
  inst.tree_id = string_field(record, "tree_id");
  inst.assignment = assignment_from_json(field(record, "assignment"), "assignment");
  inst.label = string_field(record, "label");
  const Json& path_id = field(record, "path_id");
  if (!path_id.is_number_unsigned()) throw record_error("path_id", "expected integer");
  inst.path_id = path_id.get<std::size_t>();
  const Json& path = field(record, "path");
  if (!path.is_array()) throw record_error("path", "expected array");
  for (std::size_t i = 0; i < path.size(); ++i) {
    const std::string where = "path[" + std::to_string(i) + "]";
    const Json& taken = field(path[i], "taken");
    if (!taken.is_boolean()) throw record_error(where + ".taken", "expected boolean");
    inst.path.push_back(PathStep{predicate_from_json(path[i], where), taken.get<bool>()});
  }
  inst.question_text = optional_text(record, "question_text");
  inst.rationale_text = optional_text(record, "rationale_text");
  return inst;
}

Json counterfactual_to_json(const CounterfactualInstance& inst, bool redact_gold) {
  Json out = Json::object();
  out["instance_id"] = inst.instance_id;
  out["tree_id"] = inst.tree_id;
  out["type"] = "counterfactual";
  out["observed"] = assignment_to_json(inst.observed);
  out["hidden_names"] = inst.hidden_names;
  if (!redact_gold) out["hidden_values"] = assignment_to_json(inst.hidden_values);
  out["intervention"] = {{"var", inst.intervention.var},
                         {"original", value_to_json(inst.intervention.original)},
                         {"new", value_to_json(inst.intervention.replacement)}};
  out["y_obs"] = inst.y_obs;
  out["y_cf"] = inst.y_cf;
  if (!redact_gold) {
    Json members = Json::array();
    for (const auto& m : inst.abduction_class.members()) members.push_back(assignment_to_json(m));
    out["abduction_class"] = std::move(members);
  }
  out["rationale_text"] = optional_text_json(inst.rationale_text);
  return out;
}

CounterfactualInstance counterfactual_from_json(const Json& record) {
  expect_type(record, "counterfactual");
  CounterfactualInstance inst;
  inst.instance_id = string_field(record, "instance_id");
  inst.tree_id = string_field(record, "tree_id");
  inst.observed = assignment_from_json(field(record, "observed"), "observed");
  const Json& names = field(record, "hidden_names");
  if (!names.is_array()) throw record_error("hidden_names", "expected array");
  for (const auto& n : names) {
    if (!n.is_string()) throw record_error("hidden_names", "expected strings");
    inst.hidden_names.push_back(n.get<std::string>());
  }
  inst.hidden_values = assignment_from_json(field(record, "hidden_values"), "hidden_values");
  const Json& iv = field(record, "intervention");
  inst.intervention.var = string_field(iv, "var");
  inst.intervention.original = value_from_json(field(iv, "original"), "intervention.original");
  inst.intervention.replacement = value_from_json(field(iv, "new"), "intervention.new");
  inst.y_obs = string_field(record, "y_obs");
  inst.y_cf = string_field(record, "y_cf");
  const Json& cls = field(record, "abduction_class");
  if (!cls.is_array()) throw record_error("abduction_class", "expected array");
  std::vector<Assignment> members;
  for (const auto& m : cls) members.push_back(assignment_from_json(m, "abduction_class"));
  inst.abduction_class = AbductionClass(std::move(members));
  inst.rationale_text = optional_text(record, "rationale_text");
  inst.source_path_id = source_path_of(inst.instance_id);
  return inst;
}

std::string factual_jsonl(const std::vector<FactualInstance>& instances) {
  std::string out;
  for (const auto& inst : instances) out += canonical_dump(factual_to_json(inst)) + "\n";
  return out;
}

std::string counterfactual_jsonl(const std::vector<CounterfactualInstance>& instances,
                                 bool redact_gold) {
  std::string out;
  for (const auto& inst : instances) {
    out += canonical_dump(counterfactual_to_json(inst, redact_gold)) + "\n";
  }
  return out;
}

std::vector<Json> parse_jsonl(std::string_view text) {
  std::vector<Json> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw ParseError(ParseError::Kind::syntax, "line " + std::to_string(line_no), e.what());
    }
  }
  return out;
}

}  // namespace guidex
