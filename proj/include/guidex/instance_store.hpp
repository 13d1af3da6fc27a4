#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "guidex/model.hpp"
#include "guidex/qa_counterfactual.hpp"
#include "guidex/qa_factual.hpp"

namespace guidex {

/// Read-only index of trees and dataset instances used for scoring.
class InstanceStore {
 public:
  /// Loads every `*.json` tree under `trees_dir` plus the given datasets
  /// (either may be absent) and cross-references them. Throws Error on a
  /// missing tree, a duplicate id, or an instance that fails re-execution.
  static InstanceStore load(const std::filesystem::path& trees_dir,
                            const std::optional<std::filesystem::path>& factual_jsonl,
                            const std::optional<std::filesystem::path>& counterfactual_jsonl);

  void add_tree(DecisionTree tree);
  void add(FactualInstance instance);
  void add(CounterfactualInstance instance);

  const DecisionTree* tree(const std::string& id) const;
  const FactualInstance* factual(const std::string& id) const;
  const CounterfactualInstance* counterfactual(const std::string& id) const;

  std::size_t tree_count() const { return trees_.size(); }
  std::size_t factual_count() const { return factual_.size(); }
  std::size_t counterfactual_count() const { return counterfactual_.size(); }

 private:
  const DecisionTree& require_tree(const std::string& tree_id, const std::string& instance_id) const;

  std::map<std::string, DecisionTree, std::less<>> trees_;
  std::map<std::string, FactualInstance, std::less<>> factual_;
  std::map<std::string, CounterfactualInstance, std::less<>> counterfactual_;
};

}  // namespace guidex
