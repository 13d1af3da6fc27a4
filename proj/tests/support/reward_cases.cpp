#include "reward_cases.hpp"

#include "guidex/executor.hpp"
#include "guidex/verifier.hpp"
#include "support.hpp"

namespace guidex::testing {

namespace {

// T1 with 190 on the ldl grid so a claim can sit just below the threshold.
DecisionTree threshold_tree() {
  return make_tree(
      R"([{"name":"age","kind":"numeric","min":18,"max":100,"grid":[40,70]},)"
      R"({"name":"diabetes","kind":"boolean"},)"
      R"({"name":"ldl","kind":"numeric","min":0,"max":400,"grid":[130,190]}])",
      R"(["high-intensity statin","moderate-intensity statin","no-action"])",
      R"({"if":{"var":"age","op":"ge","value":50},"then":{"if":{"var":"ldl","op":"ge","value":190},)"
      R"("then":{"leaf":0},"else":{"if":{"var":"diabetes","op":"is","value":true},"then":{"leaf":1},)"
      R"("else":{"leaf":2}}},"else":{"if":{"var":"diabetes","op":"is","value":true},"then":{"leaf":1},)"
      R"("else":{"leaf":2}}})",
      "2");
}

CounterfactualInstance make_cf(const DecisionTree& tree, Assignment x, std::vector<std::string> hidden,
                               const std::string& var, Value replacement) {
  CounterfactualInstance cf;
  cf.instance_id = "case";
  cf.tree_id = tree.id();
  cf.hidden_names = std::move(hidden);
  cf.hidden_values = restrict_to(x, cf.hidden_names);
  cf.intervention = {var, x.at(var), replacement};
  for (const auto& [k, v] : x) {
    if (k != var && !cf.hidden_values.count(k)) cf.observed[k] = v;
  }
  cf.y_obs = execute(tree, x).output_label;
  Assignment intervened = x;
  intervened[var] = replacement;
  cf.y_cf = execute(tree, intervened).output_label;
  cf.abduction_class = abduce(tree, cf.factual_context(), cf.hidden_names, cf.y_obs);
  return cf;
}

std::string cf_response(const std::string& hidden, const std::string& answer) {
  return "<think>abduce, intervene, predict</think>\n<hidden>" + hidden + "</hidden>\n<answer>" + answer +
         "</answer>";
}

}  // namespace

std::vector<RewardCase> run_reward_cases() {
  const DecisionTree t1 = load_t1();
  const DecisionTree tt = threshold_tree();

  FactualInstance f;
  f.instance_id = "f";
  f.tree_id = t1.id();
  f.assignment = {{"age", 70.0}, {"diabetes", false}, {"ldl", 200.0}};
  f.label = execute(t1, f.assignment).output_label;

  // Singleton class: ldl hidden at 190, age 70 -> 40 turns high into no-action.
  const auto single =
      make_cf(tt, {{"age", 70.0}, {"diabetes", false}, {"ldl", 190.0}}, {"ldl"}, "age", 40.0);
  // Class {80, 130}: ldl hidden, diabetes false -> true.
  const auto pair =
      make_cf(t1, {{"age", 70.0}, {"diabetes", false}, {"ldl", 80.0}}, {"ldl"}, "diabetes", true);

  std::vector<RewardCase> out;
  auto factual = [&](std::string name, int expected, const std::string& text) {
    const int r = factual_reward(parse_response(text, ResponseKind::factual), f).total;
    out.push_back({std::move(name), expected, expected, r, r});
  };
  auto counterfactual = [&](std::string name, int strict, int equivalence,
                            const CounterfactualInstance& inst, const DecisionTree& tree,
                            const std::string& text) {
    const auto parsed = parse_response(text, ResponseKind::counterfactual);
    out.push_back({std::move(name), strict, equivalence,
                   counterfactual_reward(parsed, inst, tree, RewardMode::strict).total,
                   counterfactual_reward(parsed, inst, tree, RewardMode::equivalence).total});
  };

  factual("factual missing answer block", -1, "<think>x</think>");
  factual("factual right", 1, "<think>age 70, ldl 200</think><answer>high-intensity statin</answer>");
  factual("factual right after folding", 1, "<think>x</think> <answer>  High-Intensity   Statin </answer>");
  factual("factual wrong", 0, "<think>x</think><answer>moderate-intensity statin</answer>");

  counterfactual("counterfactual missing hidden block", -1, -1, single, tt,
                 "<think>x</think><answer>no-action</answer>");
  counterfactual("counterfactual bad hidden syntax", -1, -1, single, tt,
                 cf_response("ldl is high", "no-action"));
  counterfactual("counterfactual all factors hold", 1, 1, single, tt, cf_response("ldl=190", "no-action"));
  counterfactual("counterfactual hidden match falsified", 0, 0, single, tt,
                 cf_response("ldl=200", "no-action"));
  counterfactual("counterfactual consistency falsified", 0, 0, single, tt,
                 cf_response("ldl=189.99999999999", "no-action"));
  counterfactual("counterfactual answer falsified", 0, 0, single, tt,
                 cf_response("ldl=190", "moderate-intensity statin"));
  counterfactual("class of two, non-gold member", 0, 1, pair, t1,
                 cf_response("ldl=130", "moderate-intensity statin"));
  counterfactual("class of two, gold member", 1, 1, pair, t1,
                 cf_response("ldl=80", "moderate-intensity statin"));
  return out;
}

}  // namespace guidex::testing
