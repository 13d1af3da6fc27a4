#pragma once

// Counterfactual QA synthesis: observed / hidden / intervention partition,
// outcome-changing interventions, and abduction classes for the hidden part.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "guidex/model.hpp"
#include "guidex/qa_factual.hpp"

namespace guidex {

struct Intervention {
  std::string var;
  Value original;
  Value replacement;

  bool operator==(const Intervention&) const = default;
};

struct CounterfactualInstance {
  std::string instance_id;
  std::string tree_id;
  Assignment observed;
  std::vector<std::string> hidden_names;
  Assignment hidden_values;  // gold; never shown to a model
  Intervention intervention;
  std::string y_obs;
  std::string y_cf;
  AbductionClass abduction_class;
  std::optional<std::string> rationale_text;
  /// Path of the factual instance this scenario was built from. Used as the
  /// coverage unit when balancing; not part of the record format.
  std::size_t source_path_id = 0;

  /// Observed context plus the pre-intervention value: the factual world.
  Assignment factual_context() const;

  bool operator==(const CounterfactualInstance&) const = default;
};

struct CfConfig {
  std::uint64_t seed = 0;
  std::size_t hidden_count = 1;
  bool identifiable_only = true;
  std::size_t per_tree = 16;
  /// Partition draws attempted per factual pool entry.
  std::size_t draws_per_source = 3;

  /// Throws Error when counts are zero or the tree leaves no room for one
  /// observed and one intervention variable.
  void check(const DecisionTree& tree) const;
};

struct Partition {
  Assignment observed;
  std::vector<std::string> hidden_names;  // declared order
  std::string intervention_var;
};

/// Seeded split of the variables. Hidden and intervention variables come
/// from the variables consulted on the factual path; nullopt when that path
/// consults fewer than hidden_count + 1 variables.
std::optional<Partition> partition_variables(const DecisionTree& tree, const Assignment& x,
                                             const CfConfig& cfg, std::size_t draw_index);

/// First value of `var` in a seeded scan of its domain whose execution
/// output differs from f(x); nullopt when no value changes the outcome.
std::optional<Value> propose_intervention(const DecisionTree& tree, const Assignment& x,
                                          const std::string& var, std::uint64_t seed);

struct CfStats {
  std::size_t scenarios = 0;           // partition + intervention scan executed
  std::size_t changed = 0;             // an outcome-changing value exists
  std::size_t discarded_unchanged = 0;
  std::size_t discarded_unidentifiable = 0;
  std::size_t discarded_off_grid = 0;  // gold hidden value not enumerable
  std::size_t partition_failed = 0;
  std::size_t duplicates = 0;

  CfStats& operator+=(const CfStats& other);
};

struct CfSet {
  std::vector<CounterfactualInstance> instances;
  CfStats stats;
};

CfSet generate_counterfactual_set(const DecisionTree& tree,
                                  const std::vector<FactualInstance>& factual_pool,
                                  const CfConfig& cfg);

/// Balance over y_cf with the factual rule; coverage unit is the source path.
Balanced<CounterfactualInstance> balance_counterfactuals(
    std::vector<CounterfactualInstance> instances, const DecisionTree& tree, double cap,
    std::uint64_t seed);

bool identifiability(const CounterfactualInstance& instance);

/// Throws Error describing the first violated record invariant.
void check_counterfactual(const DecisionTree& tree, const CounterfactualInstance& instance);

}  // namespace guidex
