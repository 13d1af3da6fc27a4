#include "guidex/qa_counterfactual.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "guidex/error.hpp"
#include "guidex/executor.hpp"
#include "guidex/rng.hpp"
#include "guidex/tree_format.hpp"

namespace guidex {

Assignment CounterfactualInstance::factual_context() const {
  Assignment out = observed;
  out[intervention.var] = intervention.original;
  return out;
}

void CfConfig::check(const DecisionTree& tree) const {
  if (hidden_count == 0) throw Error("hidden_count must be positive");
  if (per_tree == 0) throw Error("per_tree must be positive");
  if (draws_per_source == 0) throw Error("draws_per_source must be positive");
  if (tree.variables().size() < hidden_count + 2) {
    throw Error("tree '" + tree.id() + "' has " + std::to_string(tree.variables().size()) +
                " variables; hidden_count " + std::to_string(hidden_count) +
                " leaves no room for an observed and an intervention variable");
  }
}

CfStats& CfStats::operator+=(const CfStats& o) {
  scenarios += o.scenarios;
  changed += o.changed;
  discarded_unchanged += o.discarded_unchanged;
  discarded_unidentifiable += o.discarded_unidentifiable;
  discarded_off_grid += o.discarded_off_grid;
  partition_failed += o.partition_failed;
  duplicates += o.duplicates;
  return *this;
}

namespace {

std::string context_of(const DecisionTree& tree, const Assignment& x) {
  return tree.id() + "|" + canonical_dump(assignment_to_json(x));
}

}  // namespace

std::optional<Partition> partition_variables(const DecisionTree& tree, const Assignment& x,
                                             const CfConfig& cfg, std::size_t draw_index) {
  cfg.check(tree);
  const ExecutionResult factual = execute(tree, x);
  std::vector<std::string> consulted;
  for (const auto& step : factual.path) {
    if (std::find(consulted.begin(), consulted.end(), step.predicate.var) == consulted.end()) {
      consulted.push_back(step.predicate.var);
    }
  }
  if (consulted.size() < cfg.hidden_count + 1) return std::nullopt;

  Rng rng(cfg.seed, "partition|" + context_of(tree, x) + "|" + std::to_string(draw_index));
  rng.shuffle(consulted);

  Partition out;
  std::set<std::string> hidden(consulted.begin(),
                               consulted.begin() + static_cast<std::ptrdiff_t>(cfg.hidden_count));
  out.intervention_var = consulted[cfg.hidden_count];
  for (const auto& v : tree.variables()) {
    if (hidden.count(v.name())) {
      out.hidden_names.push_back(v.name());
    } else if (v.name() != out.intervention_var) {
      out.observed[v.name()] = x.at(v.name());
    }
  }
  return out;
}

std::optional<Value> propose_intervention(const DecisionTree& tree, const Assignment& x,
                                          const std::string& var, std::uint64_t seed) {
  const VariableSpec* spec = tree.find_variable(var);
  if (!spec) throw Error("unknown variable '" + var + "'");
  auto current = x.find(var);
  if (current == x.end()) throw Error("variable '" + var + "' is not assigned");
  const std::string y_obs = execute(tree, x).output_label;

  std::vector<Value> candidates;
  for (auto& value : spec->domain()) {
    if (!(value == current->second)) candidates.push_back(std::move(value));
  }
  Rng rng(seed, "intervene|" + var);
  rng.shuffle(candidates);
  Assignment changed = x;
  for (const auto& value : candidates) {
    changed[var] = value;
    if (execute(tree, changed).output_label != y_obs) return value;
  }
  return std::nullopt;
}

CfSet generate_counterfactual_set(const DecisionTree& tree,
                                  const std::vector<FactualInstance>& factual_pool,
                                  const CfConfig& cfg) {
  cfg.check(tree);
  CfSet out;
  using Key = std::tuple<Assignment, std::vector<std::string>, std::string>;
  std::set<Key> seen;

  for (const auto& source : factual_pool) {
    if (source.tree_id != tree.id()) {
      throw Error("pool instance '" + source.instance_id + "' belongs to another tree");
    }
    for (std::size_t draw = 0; draw < cfg.draws_per_source; ++draw) {
      if (out.instances.size() >= cfg.per_tree) return out;
      const Assignment& x = source.assignment;
      auto partition = partition_variables(tree, x, cfg, draw);
      if (!partition) {
        ++out.stats.partition_failed;
        continue;
      }
      if (!seen.emplace(partition->observed, partition->hidden_names, partition->intervention_var)
               .second) {
        ++out.stats.duplicates;
        continue;
      }
      ++out.stats.scenarios;
      const std::string& var = partition->intervention_var;
      const std::uint64_t scan_seed =
          derive_seed(cfg.seed, "cf|" + source.instance_id + "|" + std::to_string(draw));
      auto replacement = propose_intervention(tree, x, var, scan_seed);
      if (!replacement) {
        ++out.stats.discarded_unchanged;
        continue;
      }
      ++out.stats.changed;

      CounterfactualInstance inst;
      inst.instance_id = tree.id() + ":cf:" + source.instance_id + ":" + std::to_string(draw);
      inst.tree_id = tree.id();
      inst.observed = partition->observed;
      inst.hidden_names = partition->hidden_names;
      inst.hidden_values = restrict_to(x, partition->hidden_names);
      inst.intervention = Intervention{var, x.at(var), *replacement};
      inst.y_obs = source.label;
      Assignment intervened = x;
      intervened[var] = *replacement;
      inst.y_cf = execute(tree, intervened).output_label;
      inst.abduction_class = abduce(tree, inst.factual_context(), inst.hidden_names, inst.y_obs);
      inst.source_path_id = source.path_id;

      if (!inst.abduction_class.contains(inst.hidden_values)) {
        ++out.stats.discarded_off_grid;
        continue;
      }
      if (cfg.identifiable_only && !identifiability(inst)) {
        ++out.stats.discarded_unidentifiable;
        continue;
      }
      out.instances.push_back(std::move(inst));
    }
  }
  return out;
}

Balanced<CounterfactualInstance> balance_counterfactuals(
    std::vector<CounterfactualInstance> instances, const DecisionTree& tree, double cap,
    std::uint64_t seed) {
  if (!(cap > 0.0 && cap <= 1.0)) throw Error("no_action_cap must lie in (0, 1]");
  Balanced<CounterfactualInstance> out;
  if (!tree.no_action_index()) {
    out.instances = std::move(instances);
    return out;
  }
  std::vector<bool> no_action;
  std::vector<std::size_t> keys;
  for (const auto& inst : instances) {
    no_action.push_back(tree.is_no_action(inst.y_cf));
    keys.push_back(inst.source_path_id);
  }
  const BalancePlan plan = plan_balance(no_action, keys, cap, seed, "counterfactual|" + tree.id());
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

bool identifiability(const CounterfactualInstance& instance) {
  return instance.abduction_class.size() == 1;
}

void check_counterfactual(const DecisionTree& tree, const CounterfactualInstance& inst) {
  auto fail = [&](const std::string& why) {
    throw Error("counterfactual instance '" + inst.instance_id + "': " + why);
  };
  if (inst.tree_id != tree.id()) fail("tree id mismatch");
  std::set<std::string> parts;
  for (const auto& [name, _] : inst.observed) parts.insert(name);
  for (const auto& name : inst.hidden_names) {
    if (!parts.insert(name).second) fail("variable '" + name + "' is both observed and hidden");
  }
  if (!parts.insert(inst.intervention.var).second) {
    fail("intervention variable overlaps the observed or hidden set");
  }
  if (parts.size() != tree.variables().size()) fail("partition does not cover every variable");
  if (inst.abduction_class.empty()) fail("empty abduction class");
  if (restrict_to(inst.hidden_values, inst.hidden_names) != inst.hidden_values ||
      inst.hidden_values.size() != inst.hidden_names.size()) {
    fail("hidden values do not match hidden names");
  }
  const Assignment factual = merge_assignments(inst.factual_context(), inst.hidden_values);
  Assignment intervened = factual;
  intervened[inst.intervention.var] = inst.intervention.replacement;
  if (execute(tree, factual).output_label != inst.y_obs) fail("factual world does not yield y_obs");
  if (execute(tree, intervened).output_label != inst.y_cf) {
    fail("intervened world does not yield y_cf");
  }
  if (inst.y_obs == inst.y_cf) fail("intervention leaves the outcome unchanged");
  if (!inst.abduction_class.contains(inst.hidden_values)) fail("gold hidden state not in class");
}

}  // namespace guidex
