#include <gtest/gtest.h>

#include "guidex/error.hpp"
#include "guidex/model.hpp"
#include "support.hpp"

using namespace guidex;

TEST(VariableSpec, RejectsMalformedNames) {
  EXPECT_THROW(VariableSpec::boolean("Age"), ModelError);
  EXPECT_THROW(VariableSpec::boolean("1x"), ModelError);
  EXPECT_THROW(VariableSpec::boolean(""), ModelError);
  EXPECT_THROW(VariableSpec::boolean("ldl-c"), ModelError);
  EXPECT_NO_THROW(VariableSpec::boolean("ldl_c2"));
}

TEST(VariableSpec, CategoricalValuesNonEmptyAndDistinct) {
  EXPECT_THROW(VariableSpec::categorical("risk", {}), ModelError);
  EXPECT_THROW(VariableSpec::categorical("risk", {"high", "high"}), ModelError);
  const auto v = VariableSpec::categorical("risk", {"high", "low"});
  EXPECT_TRUE(v.admits(Value(std::string("low"))));
  EXPECT_FALSE(v.admits(Value(std::string("medium"))));
  EXPECT_FALSE(v.admits(Value(true)));
}

TEST(VariableSpec, NumericGridRules) {
  EXPECT_THROW(VariableSpec::numeric("x", std::nullopt, 10, 0, {5}), ModelError);
  EXPECT_THROW(VariableSpec::numeric("x", std::nullopt, 0, 10, {}), ModelError);
  EXPECT_THROW(VariableSpec::numeric("x", std::nullopt, 0, 10, {5, 5}), ModelError);
  EXPECT_THROW(VariableSpec::numeric("x", std::nullopt, 0, 10, {6, 5}), ModelError);
  EXPECT_THROW(VariableSpec::numeric("x", std::nullopt, 0, 10, {11}), ModelError);
  const auto v = VariableSpec::numeric("x", "mg", 0, 10, {0, 2.5, 10});
  EXPECT_TRUE(v.admits(Value(3.7)));  // off-grid values are still in the domain
  EXPECT_FALSE(v.admits(Value(10.5)));
  EXPECT_EQ(v.domain().size(), 3u);
}

TEST(VariableSpec, BooleanDomain) {
  const auto d = VariableSpec::boolean("b").domain();
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0], Value(false));
  EXPECT_EQ(d[1], Value(true));
}

TEST(MergeAssignments, DisjointUnion) {
  const Assignment a{{"age", 70.0}};
  const Assignment b{{"diabetes", true}};
  const Assignment m = merge_assignments(a, b);
  EXPECT_EQ(m, (Assignment{{"age", 70.0}, {"diabetes", true}}));
}

TEST(MergeAssignments, EmptyOverlayIsIdentity) {
  const Assignment a{{"age", 70.0}};
  EXPECT_EQ(merge_assignments(a, {}), a);
}

TEST(MergeAssignments, ConflictNamesKey) {
  try {
    merge_assignments({{"age", 70.0}}, {{"age", 55.0}});
    FAIL() << "expected a conflict";
  } catch (const ConflictError& e) {
    EXPECT_EQ(e.key(), "age");
  }
}

TEST(MergeAssignments, EqualOverlapAllowed) {
  EXPECT_EQ(merge_assignments({{"age", 70.0}}, {{"age", 70.0}}), (Assignment{{"age", 70.0}}));
}

TEST(RestrictTo, KeepsListedPresentNames) {
  const Assignment a{{"age", 70.0}, {"ldl", 130.0}, {"diabetes", true}};
  EXPECT_EQ(restrict_to(a, {"ldl", "missing"}), (Assignment{{"ldl", 130.0}}));
}

TEST(Date, ParsesAndRejects) {
  EXPECT_EQ(Date::parse("2022-06-01").to_string(), "2022-06-01");
  EXPECT_THROW(Date::parse("2023-02-29"), ModelError);
  EXPECT_THROW(Date::parse("2022-6-1"), ModelError);
  EXPECT_THROW(Date::parse("2022-13-01"), ModelError);
  EXPECT_LT(Date::parse("2019-01-01"), Date::parse("2022-06-01"));
}

TEST(Ops, RoundTripNames) {
  for (Op op : {Op::lt, Op::le, Op::gt, Op::ge, Op::eq, Op::is, Op::in}) {
    EXPECT_EQ(parse_op(to_string(op)), op);
  }
  EXPECT_FALSE(parse_op("ne").has_value());
}

namespace {

DecisionTree tiny(NodePtr root, std::vector<std::string> outputs = {"a", "b"}) {
  return DecisionTree("tiny", {"g", "g#0"}, {}, {VariableSpec::boolean("flag"),
                      VariableSpec::numeric("x", std::nullopt, 0, 10, {1, 5}),
                      VariableSpec::categorical("c", {"p", "q"})},
                      std::move(outputs), std::nullopt, std::move(root));
}

}  // namespace

TEST(DecisionTree, RejectsKindIllegalPredicates) {
  EXPECT_THROW(tiny(Node::branch({"flag", Op::ge, 1.0}, Node::leaf(0), Node::leaf(1))), ModelError);
  EXPECT_THROW(tiny(Node::branch({"x", Op::is, true}, Node::leaf(0), Node::leaf(1))), ModelError);
  EXPECT_THROW(tiny(Node::branch({"x", Op::lt, 11.0}, Node::leaf(0), Node::leaf(1))), ModelError);
  EXPECT_THROW(tiny(Node::branch({"c", Op::eq, std::string("r")}, Node::leaf(0), Node::leaf(1))),
               ModelError);
  EXPECT_THROW(tiny(Node::branch({"c", Op::lt, 1.0}, Node::leaf(0), Node::leaf(1))), ModelError);
  EXPECT_THROW(tiny(Node::branch({"c", Op::in, std::vector<std::string>{"p", "z"}}, Node::leaf(0),
                                 Node::leaf(1))),
               ModelError);
  EXPECT_NO_THROW(tiny(Node::branch({"c", Op::in, std::vector<std::string>{"q"}}, Node::leaf(0),
                                    Node::leaf(1))));
}

TEST(DecisionTree, RejectsStructuralViolations) {
  EXPECT_THROW(tiny(Node::leaf(2)), ModelError);
  EXPECT_THROW(tiny(Node::branch({"nope", Op::is, true}, Node::leaf(0), Node::leaf(1))), ModelError);
  EXPECT_THROW(tiny(Node::leaf(0), {}), ModelError);
  EXPECT_THROW(DecisionTree("bad id", {}, {}, {}, {"a"}, std::nullopt, Node::leaf(0)), ModelError);
  EXPECT_THROW(DecisionTree("t", {}, {}, {VariableSpec::boolean("a"), VariableSpec::boolean("a")},
                            {"a"}, std::nullopt, Node::leaf(0)),
               ModelError);
  EXPECT_THROW(DecisionTree("t", {}, {}, {}, {"a"}, 1, Node::leaf(0)), ModelError);
}

TEST(DecisionTree, StructuralEquality) {
  auto a = tiny(Node::branch({"flag", Op::is, true}, Node::leaf(0), Node::leaf(1)));
  auto b = tiny(Node::branch({"flag", Op::is, true}, Node::leaf(0), Node::leaf(1)));
  auto c = tiny(Node::branch({"flag", Op::is, false}, Node::leaf(0), Node::leaf(1)));
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
  EXPECT_EQ(a.leaf_count(), 2u);
  EXPECT_EQ(a.node_count(), 3u);
}

TEST(DecisionTree, T1Accessors) {
  const DecisionTree t1 = guidex::testing::load_t1();
  EXPECT_EQ(t1.output_index("moderate-intensity statin"), 1u);
  EXPECT_TRUE(t1.is_no_action("no-action"));
  EXPECT_FALSE(t1.is_no_action("high-intensity statin"));
  ASSERT_NE(t1.find_variable("ldl"), nullptr);
  EXPECT_EQ(t1.find_variable("ldl")->kind(), VarKind::numeric);
  EXPECT_EQ(t1.find_variable("smoker"), nullptr);
}

TEST(AbductionClass, SetEqualityIgnoresOrder) {
  const AbductionClass a({{{"ldl", 80.0}}, {{"ldl", 130.0}}});
  const AbductionClass b({{{"ldl", 130.0}}, {{"ldl", 80.0}}});
  const AbductionClass c({{{"ldl", 80.0}}});
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
  EXPECT_TRUE(a.contains({{"ldl", 130.0}}));
  EXPECT_FALSE(c.contains({{"ldl", 130.0}}));
}
