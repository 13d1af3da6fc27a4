#include "guidex/verifier.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "guidex/error.hpp"
#include "guidex/executor.hpp"
#include "guidex/instance_store.hpp"
#include "guidex/tree_format.hpp"

namespace guidex {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::size_t count_of(std::string_view text, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

struct Block {
  std::string_view name;
  std::string_view content;
};

ParsedResponse format_failure(std::string code) {
  ParsedResponse out;
  out.format_error = std::move(code);
  return out;
}

std::optional<std::map<std::string, std::string>> parse_hidden(std::string_view content) {
  std::map<std::string, std::string> claims;
  if (trim(content).empty()) return std::nullopt;
  while (true) {
    const auto sep = content.find(';');
    std::string_view part = trim(content.substr(0, sep));
    const auto eq = part.find('=');
    if (eq == std::string_view::npos) return std::nullopt;
    std::string name(trim(part.substr(0, eq)));
    std::string value(trim(part.substr(eq + 1)));
    if (!is_identifier(name) || value.empty()) return std::nullopt;
    if (!claims.emplace(std::move(name), std::move(value)).second) return std::nullopt;
    if (sep == std::string_view::npos) break;
    content.remove_prefix(sep + 1);
  }
  return claims;
}

}  // namespace

ParsedResponse parse_response(std::string_view text, ResponseKind kind) {
  const std::vector<std::string_view> expected =
      kind == ResponseKind::factual ? std::vector<std::string_view>{"think", "answer"}
                                    : std::vector<std::string_view>{"think", "hidden", "answer"};
  for (auto tag : expected) {
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    if (text.find(open) == std::string_view::npos || text.find(close) == std::string_view::npos) {
      return format_failure("missing_block");
    }
  }
  for (std::string_view tag : {"think", "hidden", "answer"}) {
    const std::size_t want =
        std::find(expected.begin(), expected.end(), tag) != expected.end() ? 1 : 0;
    if (count_of(text, "<" + std::string(tag) + ">") != want ||
        count_of(text, "</" + std::string(tag) + ">") != want) {
      return format_failure("bad_order");
    }
  }

  // Blocks must appear in order, back to back modulo whitespace.
  std::vector<Block> blocks;
  std::string_view rest = trim(text);
  for (auto tag : expected) {
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    if (rest.substr(0, open.size()) != open) return format_failure("bad_order");
    rest.remove_prefix(open.size());
    const auto end = rest.find(close);
    if (end == std::string_view::npos) return format_failure("bad_order");
    blocks.push_back(Block{tag, rest.substr(0, end)});
    rest = trim(rest.substr(end + close.size()));
  }
  if (!rest.empty()) return format_failure("bad_order");

  ParsedResponse out;
  for (const auto& block : blocks) {
    if (block.name == "think") {
      out.think_text = std::string(block.content);
    } else if (block.name == "hidden") {
      out.hidden_claims = parse_hidden(block.content);
      if (!out.hidden_claims) {
        out.format_error = "bad_hidden_syntax";
        return out;
      }
    } else {
      out.answer_text = std::string(trim(block.content));
    }
  }
  if (out.answer_text->empty()) {
    out.format_error = "empty_answer";
    return out;
  }
  out.format_ok = true;
  return out;
}

std::string normalize_label(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : trim(text)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::optional<Assignment> interpret_claims(const DecisionTree& tree,
                                           const std::map<std::string, std::string>& claims) {
  Assignment out;
  for (const auto& [name, text] : claims) {
    const VariableSpec* spec = tree.find_variable(name);
    if (!spec) return std::nullopt;
    switch (spec->kind()) {
      case VarKind::boolean: {
        const std::string v = normalize_label(text);
        if (v != "true" && v != "false") return std::nullopt;
        out[name] = v == "true";
        break;
      }
      case VarKind::categorical: {
        const std::string v = normalize_label(text);
        auto it = std::find_if(spec->values().begin(), spec->values().end(),
                               [&](const std::string& d) { return normalize_label(d) == v; });
        if (it == spec->values().end()) return std::nullopt;
        out[name] = *it;
        break;
      }
      case VarKind::numeric: {
        double d = 0.0;
        const char* end = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(text.data(), end, d);
        if (ec != std::errc() || ptr != end || !std::isfinite(d)) return std::nullopt;
        out[name] = d;
        break;
      }
    }
  }
  return out;
}

bool assignments_match(const Assignment& claimed, const Assignment& gold) {
  if (claimed.size() != gold.size()) return false;
  for (const auto& [name, value] : gold) {
    auto it = claimed.find(name);
    if (it == claimed.end()) return false;
    const auto* a = std::get_if<double>(&value);
    const auto* b = std::get_if<double>(&it->second);
    if (a && b) {
      if (std::fabs(*a - *b) > kNumericRelTolerance * std::max(std::fabs(*a), std::fabs(*b))) {
        return false;
      }
    } else if (!(value == it->second)) {
      return false;
    }
  }
  return true;
}

RewardBreakdown factual_reward(const ParsedResponse& parsed, const FactualInstance& instance) {
  RewardBreakdown out;
  if (!parsed.format_ok) {
    out.format = -1;
    out.total = -1;
    return out;
  }
  const bool match = normalize_label(*parsed.answer_text) == normalize_label(instance.label);
  out.answer_match = match;
  out.answer = match ? 1 : 0;
  out.total = *out.answer;
  return out;
}

RewardBreakdown counterfactual_reward(const ParsedResponse& parsed,
                                      const CounterfactualInstance& instance,
                                      const DecisionTree& tree, RewardMode mode) {
  RewardBreakdown out;
  if (!parsed.format_ok || !parsed.hidden_claims) {
    out.format = -1;
    out.total = -1;
    return out;
  }
  bool hidden_match = false;
  bool consistency = false;
  if (auto claims = interpret_claims(tree, *parsed.hidden_claims)) {
    if (mode == RewardMode::strict) {
      hidden_match = assignments_match(*claims, instance.hidden_values);
    } else {
      const auto& members = instance.abduction_class.members();
      hidden_match = std::any_of(members.begin(), members.end(),
                                 [&](const Assignment& m) { return assignments_match(*claims, m); });
    }
    try {
      consistency = check_consistency(tree, instance.factual_context(), *claims, instance.y_obs);
    } catch (const Error&) {
      consistency = false;
    }
  }
  const bool answer_match = normalize_label(*parsed.answer_text) == normalize_label(instance.y_cf);
  out.hidden_match = hidden_match;
  out.consistency = consistency;
  out.answer_match = answer_match;
  out.answer = (hidden_match && consistency && answer_match) ? 1 : 0;
  out.total = *out.answer;
  return out;
}

ScoreItem score_one(const InstanceStore& store, const std::string& instance_id,
                    std::string_view response, RewardMode mode) {
  ScoreItem item{instance_id, std::nullopt, std::nullopt};
  if (const auto* f = store.factual(instance_id)) {
    item.reward = factual_reward(parse_response(response, ResponseKind::factual), *f);
  } else if (const auto* cf = store.counterfactual(instance_id)) {
    const DecisionTree* tree = store.tree(cf->tree_id);
    item.reward = counterfactual_reward(parse_response(response, ResponseKind::counterfactual),
                                        *cf, *tree, mode);
  } else {
    item.error = "unknown_instance";
  }
  return item;
}

std::vector<ScoreItem> score_batch(const InstanceStore& store,
                                   const std::vector<std::pair<std::string, std::string>>& responses,
                                   RewardMode mode) {
  std::vector<ScoreItem> out;
  out.reserve(responses.size());
  for (const auto& [id, text] : responses) out.push_back(score_one(store, id, text, mode));
  return out;
}

Json score_item_to_json(const ScoreItem& item) {
  auto opt_bool = [](const std::optional<bool>& b) { return b ? Json(*b) : Json(nullptr); };
  Json out = Json::object();
  out["instance_id"] = item.instance_id;
  if (item.reward) {
    const auto& r = *item.reward;
    out["reward"] = r.total;
    out["format"] = r.format;
    out["answer"] = r.answer ? Json(*r.answer) : Json(nullptr);
    out["hidden_match"] = opt_bool(r.hidden_match);
    out["consistency"] = opt_bool(r.consistency);
  } else {
    out["reward"] = nullptr;
    out["format"] = nullptr;
    out["answer"] = nullptr;
    out["hidden_match"] = nullptr;
    out["consistency"] = nullptr;
  }
  out["error"] = item.error ? Json(*item.error) : Json(nullptr);
  return out;
}

}  // namespace guidex
