#include "guidex/qa_factual.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "guidex/error.hpp"
#include "guidex/executor.hpp"
#include "guidex/rng.hpp"
#include "guidex/tree_format.hpp"

namespace guidex {

void FactualConfig::check() const {
  if (per_path == 0) throw Error("per_path must be positive");
  if (!(no_action_cap > 0.0 && no_action_cap <= 1.0)) {
    throw Error("no_action_cap must lie in (0, 1]");
  }
}

namespace {

// Midpoint of a range with no usable grid point. Half-open endpoints and
// excluded points are stepped away from by span/1000.
double interval_midpoint(const NumericRange& range) {
  if (auto pin = range.pinned()) return *pin;
  const double mid = range.lo + (range.hi - range.lo) / 2.0;
  if (range.contains(mid)) return mid;
  const double step = (range.hi - range.lo) / 1000.0;
  for (int k = 1; k < 1000; ++k) {
    for (double candidate : {mid + k * step, mid - k * step}) {
      if (range.contains(candidate)) return candidate;
    }
  }
  throw Error("no representable point inside numeric range");
}

Assignment sample_path(const DecisionTree& tree, const PathSpec& path, std::size_t draw_index,
                       std::uint64_t seed) {
  if (!path.constraints.satisfiable()) {
    throw Error("path " + std::to_string(path.path_id) + " of tree '" + tree.id() +
                "' is unsatisfiable");
  }
  Rng rng(seed, "factual|" + tree.id() + "|" + std::to_string(path.path_id) + "|" +
                    std::to_string(draw_index));
  Assignment out;
  for (const auto& var : tree.variables()) {
    const VarConstraint& c = path.constraints.at(var.name());
    if (const auto* b = std::get_if<BooleanSet>(&c)) {
      std::vector<bool> options;
      if (b->allow_false) options.push_back(false);
      if (b->allow_true) options.push_back(true);
      out[var.name()] = static_cast<bool>(options[rng.uniform_index(options.size())]);
    } else if (const auto* s = std::get_if<CategorySet>(&c)) {
      out[var.name()] = s->allowed[rng.uniform_index(s->allowed.size())];
    } else {
      const auto& range = std::get<NumericRange>(c);
      if (auto pin = range.pinned()) {
        out[var.name()] = *pin;
        continue;
      }
      const auto points = range.grid_points(var.grid());
      out[var.name()] =
          points.empty() ? interval_midpoint(range) : points[rng.uniform_index(points.size())];
    }
  }
  return out;
}

// Number of distinct assignments sample_path can produce, saturated at `cap`.
std::size_t distinct_choices(const DecisionTree& tree, const PathSpec& path, std::size_t cap) {
  std::size_t total = 1;
  for (const auto& var : tree.variables()) {
    const VarConstraint& c = path.constraints.at(var.name());
    std::size_t n = 1;
    if (const auto* b = std::get_if<BooleanSet>(&c)) {
      n = static_cast<std::size_t>(b->allow_false) + static_cast<std::size_t>(b->allow_true);
    } else if (const auto* s = std::get_if<CategorySet>(&c)) {
      n = s->allowed.size();
    } else {
      const auto& range = std::get<NumericRange>(c);
      if (!range.pinned()) n = std::max<std::size_t>(1, range.grid_points(var.grid()).size());
    }
    total = std::min(cap, total * n);
  }
  return total;
}

}  // namespace

Assignment sample_assignment_for_path(const DecisionTree& tree, std::size_t path_id,
                                      std::size_t draw_index, std::uint64_t seed) {
  auto paths = enumerate_paths(tree);
  if (path_id >= paths.size()) throw Error("unknown path_id " + std::to_string(path_id));
  return sample_path(tree, paths[path_id], draw_index, seed);
}

BalancePlan plan_balance(const std::vector<bool>& no_action,
                         const std::vector<std::size_t>& coverage_key, double cap,
                         std::uint64_t seed, std::string_view context) {
  const std::size_t n = no_action.size();
  BalancePlan plan{std::vector<bool>(n, true), false};
  std::size_t capped = static_cast<std::size_t>(std::count(no_action.begin(), no_action.end(), true));
  std::size_t total = n;
  auto within_cap = [&] { return static_cast<double>(capped) <= cap * static_cast<double>(total); };
  if (capped == 0 || within_cap()) return plan;
  if (capped == n) {
    plan.infeasible = true;
    return plan;
  }

  std::map<std::size_t, std::size_t> members;
  for (std::size_t key : coverage_key) ++members[key];
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    if (no_action[i]) order.push_back(i);
  }
  Rng rng(seed, "balance|" + std::string(context));
  rng.shuffle(order);

  for (std::size_t i : order) {
    if (within_cap()) break;
    if (members[coverage_key[i]] <= 1) continue;
    --members[coverage_key[i]];
    plan.keep[i] = false;
    --capped;
    --total;
  }
  plan.infeasible = !within_cap();
  return plan;
}

FactualSet balance_outputs(std::vector<FactualInstance> instances, const DecisionTree& tree,
                           double cap, std::uint64_t seed) {
  if (!(cap > 0.0 && cap <= 1.0)) throw Error("no_action_cap must lie in (0, 1]");
  FactualSet out;
  if (!tree.no_action_index()) {
    out.instances = std::move(instances);
    return out;
  }
  std::vector<bool> no_action;
  std::vector<std::size_t> keys;
  for (const auto& inst : instances) {
    no_action.push_back(tree.is_no_action(inst.label));
    keys.push_back(inst.path_id);
  }
  const BalancePlan plan = plan_balance(no_action, keys, cap, seed, "factual|" + tree.id());
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (plan.keep[i]) {
      out.instances.push_back(std::move(instances[i]));
    } else {
      ++out.removed;
    }
  }
  out.balance_infeasible = plan.infeasible;
  return out;
}

FactualSet generate_factual_set(const DecisionTree& tree, const FactualConfig& cfg) {
  cfg.check();
  std::vector<FactualInstance> instances;
  bool any_satisfiable = false;
  for (const auto& path : enumerate_paths(tree)) {
    if (!path.constraints.satisfiable()) continue;
    any_satisfiable = true;
    const std::size_t target = distinct_choices(tree, path, cfg.per_path);
    const std::size_t max_draws = 32 * cfg.per_path + 32;
    std::set<Assignment> seen;
    for (std::size_t draw = 0; draw < max_draws && seen.size() < target; ++draw) {
      Assignment x = sample_path(tree, path, draw, cfg.seed);
      if (!seen.insert(x).second) continue;
      ExecutionResult result = execute(tree, x);
      if (result.path != path.steps) {
        throw Error("sampled assignment for path " + std::to_string(path.path_id) +
                    " executed along a different path");
      }
      FactualInstance inst;
      inst.instance_id =
          tree.id() + ":f:" + std::to_string(path.path_id) + ":" + std::to_string(draw);
      inst.tree_id = tree.id();
      inst.assignment = std::move(x);
      inst.label = std::move(result.output_label);
      inst.path_id = path.path_id;
      inst.path = std::move(result.path);
      instances.push_back(std::move(inst));
    }
  }
  if (!any_satisfiable) throw Error("tree '" + tree.id() + "' has no satisfiable path");
  return balance_outputs(std::move(instances), tree, cfg.no_action_cap, cfg.seed);
}

}  // namespace guidex
