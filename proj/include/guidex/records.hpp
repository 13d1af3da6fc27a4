#pragma once

// Dataset record format (one canonical JSON object per line).

#include <string>
#include <string_view>
#include <vector>

#include "guidex/canonical_json.hpp"
#include "guidex/qa_counterfactual.hpp"
#include "guidex/qa_factual.hpp"

namespace guidex {

Json factual_to_json(const FactualInstance& instance);
FactualInstance factual_from_json(const Json& record);

/// With `redact_gold`, hidden_values and abduction_class are omitted: the
/// projection a training loop may show a model.
Json counterfactual_to_json(const CounterfactualInstance& instance, bool redact_gold = false);
CounterfactualInstance counterfactual_from_json(const Json& record);

std::string factual_jsonl(const std::vector<FactualInstance>& instances);
std::string counterfactual_jsonl(const std::vector<CounterfactualInstance>& instances,
                                 bool redact_gold = false);

/// Non-empty lines of a JSONL document, parsed. Throws ParseError with the
/// line number on malformed input.
std::vector<Json> parse_jsonl(std::string_view text);

}  // namespace guidex
