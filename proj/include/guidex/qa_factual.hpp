#pragma once

// Factual QA synthesis: path-covering assignment sampling and output balance.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guidex/model.hpp"

namespace guidex {

struct FactualInstance {
  std::string instance_id;
  std::string tree_id;
  Assignment assignment;
  std::string label;
  std::size_t path_id = 0;
  ExecutionPath path;
  std::optional<std::string> question_text;
  std::optional<std::string> rationale_text;

  bool operator==(const FactualInstance&) const = default;
};

struct FactualConfig {
  std::uint64_t seed = 0;
  std::size_t per_path = 1;
  double no_action_cap = 0.5;

  /// Throws Error if per_path is zero or the cap lies outside (0, 1].
  void check() const;
};

/// Deterministic in (tree id, path id, draw index, seed). Throws Error when
/// the path's constraint set is unsatisfiable.
Assignment sample_assignment_for_path(const DecisionTree& tree, std::size_t path_id,
                                      std::size_t draw_index, std::uint64_t seed);

template <typename Instance>
struct Balanced {
  std::vector<Instance> instances;
  /// Set when the cap could not be met without dropping path coverage.
  bool balance_infeasible = false;
  std::size_t removed = 0;
};

using FactualSet = Balanced<FactualInstance>;

/// Removes seeded-random no-action instances until their share is within
/// `cap`, never removing the last instance of a covered path.
FactualSet balance_outputs(std::vector<FactualInstance> instances, const DecisionTree& tree,
                           double cap, std::uint64_t seed);

/// Covers every satisfiable root-to-leaf path with up to `per_path` distinct
/// assignments, then applies balance_outputs. Throws Error when no path is
/// satisfiable.
FactualSet generate_factual_set(const DecisionTree& tree, const FactualConfig& cfg);

struct BalancePlan {
  std::vector<bool> keep;
  bool infeasible = false;
};

/// Shared balancing core: `no_action[i]` marks capped items and
/// `coverage_key[i]` the unit whose last member must survive.
BalancePlan plan_balance(const std::vector<bool>& no_action,
                         const std::vector<std::size_t>& coverage_key, double cap,
                         std::uint64_t seed, std::string_view context);

}  // namespace guidex
