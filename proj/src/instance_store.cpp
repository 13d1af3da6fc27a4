#include "guidex/instance_store.hpp"

#include <algorithm>

#include "guidex/error.hpp"
#include "guidex/executor.hpp"
#include "guidex/io.hpp"
#include "guidex/records.hpp"
#include "guidex/tree_format.hpp"

namespace guidex {

namespace fs = std::filesystem;

InstanceStore InstanceStore::load(const fs::path& trees_dir,
                                  const std::optional<fs::path>& factual_jsonl,
                                  const std::optional<fs::path>& counterfactual_jsonl) {
  InstanceStore store;
  if (!fs::is_directory(trees_dir)) {
    throw Error("tree directory '" + trees_dir.string() + "' does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(trees_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    try {
      store.add_tree(parse_tree(read_text_file(file)));
    } catch (const ParseError& e) {
      throw Error(file.string() + ": " + e.what());
    }
  }
  if (factual_jsonl) {
    for (const auto& record : parse_jsonl(read_text_file(*factual_jsonl))) {
      store.add(factual_from_json(record));
    }
  }
  if (counterfactual_jsonl) {
    for (const auto& record : parse_jsonl(read_text_file(*counterfactual_jsonl))) {
      store.add(counterfactual_from_json(record));
    }
  }
  return store;
}

void InstanceStore::add_tree(DecisionTree tree) {
  std::string id = tree.id();
  if (!trees_.emplace(id, std::move(tree)).second) throw Error("duplicate tree id '" + id + "'");
}

const DecisionTree& InstanceStore::require_tree(const std::string& tree_id,
                                                const std::string& instance_id) const {
  const DecisionTree* tree = this->tree(tree_id);
  if (!tree) {
    throw Error("instance '" + instance_id + "' references unknown tree '" + tree_id + "'");
  }
  return *tree;
}

void InstanceStore::add(FactualInstance instance) {
  const DecisionTree& tree = require_tree(instance.tree_id, instance.instance_id);
  const ExecutionResult result = execute(tree, instance.assignment);
  if (result.output_label != instance.label || result.path != instance.path) {
    throw Error("factual instance '" + instance.instance_id + "' does not re-execute to its label");
  }
  if (factual_.count(instance.instance_id) || counterfactual_.count(instance.instance_id)) {
    throw Error("duplicate instance id '" + instance.instance_id + "'");
  }
  std::string id = instance.instance_id;
  factual_.emplace(std::move(id), std::move(instance));
}

void InstanceStore::add(CounterfactualInstance instance) {
  check_counterfactual(require_tree(instance.tree_id, instance.instance_id), instance);
  if (factual_.count(instance.instance_id) || counterfactual_.count(instance.instance_id)) {
    throw Error("duplicate instance id '" + instance.instance_id + "'");
  }
  std::string id = instance.instance_id;
  counterfactual_.emplace(std::move(id), std::move(instance));
}

const DecisionTree* InstanceStore::tree(const std::string& id) const {
  auto it = trees_.find(id);
  return it == trees_.end() ? nullptr : &it->second;
}

const FactualInstance* InstanceStore::factual(const std::string& id) const {
  auto it = factual_.find(id);
  return it == factual_.end() ? nullptr : &it->second;
}

const CounterfactualInstance* InstanceStore::counterfactual(const std::string& id) const {
  auto it = counterfactual_.find(id);
  return it == counterfactual_.end() ? nullptr : &it->second;
}

}  // namespace guidex
