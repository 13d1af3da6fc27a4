#pragma once

// Response parsing and the reward algebra: r(o) = -1 on format failure,
// otherwise the 0/1 task-specific correctness indicator.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "guidex/canonical_json.hpp"
#include "guidex/model.hpp"
#include "guidex/qa_counterfactual.hpp"
#include "guidex/qa_factual.hpp"

namespace guidex {

class InstanceStore;

enum class ResponseKind { factual, counterfactual };

/// `strict` credits only the gold hidden state; `equivalence` credits any
/// member of the abduction class.
enum class RewardMode { strict, equivalence };

/// Response grammar:
///   factual:        <think>...</think><answer>...</answer>
///   counterfactual: <think>...</think><hidden>name=value(; name=value)*</hidden><answer>...</answer>
/// Whitespace around and between blocks is ignored.
struct ParsedResponse {
  std::optional<std::string> think_text;
  /// Raw `name=value` pairs; values are interpreted per variable kind when scored.
  std::optional<std::map<std::string, std::string>> hidden_claims;
  std::optional<std::string> answer_text;
  bool format_ok = false;
  /// missing_block | bad_order | empty_answer | bad_hidden_syntax
  std::optional<std::string> format_error;
};

ParsedResponse parse_response(std::string_view text, ResponseKind kind);

/// Trim, ASCII case-fold, and collapse whitespace runs to one space.
std::string normalize_label(std::string_view text);

/// Interprets raw hidden claims against the tree's variable kinds. nullopt
/// when a name is undeclared or a value does not parse for its kind.
std::optional<Assignment> interpret_claims(const DecisionTree& tree,
                                           const std::map<std::string, std::string>& claims);

inline constexpr double kNumericRelTolerance = 1e-9;

/// Equal keys; booleans and categories exactly, numbers within the relative tolerance.
bool assignments_match(const Assignment& claimed, const Assignment& gold);

struct RewardBreakdown {
  int format = 0;                      // r_fmt: -1 or 0
  std::optional<int> answer;           // r_answer: 0/1, absent on format failure
  std::optional<bool> hidden_match;    // counterfactual only
  std::optional<bool> consistency;     // counterfactual only
  std::optional<bool> answer_match;    // final-answer factor
  int total = 0;                       // r(o)

  bool operator==(const RewardBreakdown&) const = default;
};

RewardBreakdown factual_reward(const ParsedResponse& parsed, const FactualInstance& instance);

RewardBreakdown counterfactual_reward(const ParsedResponse& parsed,
                                      const CounterfactualInstance& instance,
                                      const DecisionTree& tree, RewardMode mode);

struct ScoreItem {
  std::string instance_id;
  std::optional<RewardBreakdown> reward;
  std::optional<std::string> error;  // "unknown_instance"

  bool operator==(const ScoreItem&) const = default;
};

/// Scores a single response, dispatching on the stored instance kind.
ScoreItem score_one(const InstanceStore& store, const std::string& instance_id,
                    std::string_view response, RewardMode mode);

/// Order-preserving; unknown ids yield per-item error records.
std::vector<ScoreItem> score_batch(const InstanceStore& store,
                                   const std::vector<std::pair<std::string, std::string>>& responses,
                                   RewardMode mode);

/// Reward-service reply object.
Json score_item_to_json(const ScoreItem& item);

}  // namespace guidex
