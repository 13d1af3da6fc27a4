#include <gtest/gtest.h>

#include "guidex/canonical_json.hpp"
#include "guidex/error.hpp"
#include "guidex/io.hpp"
#include "guidex/tree_format.hpp"
#include "support.hpp"

using namespace guidex;
using guidex::testing::make_tree;
using guidex::testing::tree_document;

namespace {

const char* kAgeVars =
    R"([{"name":"age","kind":"numeric","unit":"years","min":18,"max":100,"grid":[40,55,70]},)"
    R"({"name":"smoker","kind":"boolean"}])";

std::string t1_bytes() {
  std::string s = read_text_file(guidex::testing::fixture_dir() / "trees" / "statin-01-r0.json");
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

ParseError::Kind kind_of(const std::string& doc) {
  try {
    parse_tree(doc);
  } catch (const ParseError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "document parsed: " << doc;
  return ParseError::Kind::syntax;
}

}  // namespace

TEST(CanonicalJson, Numbers) {
  EXPECT_EQ(format_number(200.0), "200");
  EXPECT_EQ(format_number(-0.0), "0");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(63.25), "63.25");
  EXPECT_EQ(format_number(1e21), "1e+21");
  EXPECT_EQ(canonical_dump(Json::parse(R"({"b":1.50, "a":[true,null,"x"]})")),
            R"({"b":1.5,"a":[true,null,"x"]})");
}

TEST(ParseTree, T1Shape) {
  const DecisionTree t1 = guidex::testing::load_t1();
  EXPECT_EQ(t1.variables().size(), 3u);
  EXPECT_EQ(t1.outputs().size(), 3u);
  EXPECT_EQ(t1.leaf_count(), 5u);
  EXPECT_EQ(t1.no_action_index(), 2u);
  EXPECT_EQ(t1.source().chunk_id, "statin-01#0");
}

TEST(ParseTree, MinimalSingleLeaf) {
  const DecisionTree t = make_tree("[]", R"(["only"])", R"({"leaf":0})");
  EXPECT_TRUE(t.root().is_leaf());
  EXPECT_EQ(t.leaf_count(), 1u);
}

TEST(ParseTree, KindIllegalOperatorIsInvariantError) {
  const std::string doc = tree_document(
      R"([{"name":"diabetes","kind":"boolean"}])", R"(["a","b"])",
      R"({"if":{"var":"diabetes","op":"ge","value":1},"then":{"leaf":0},"else":{"leaf":1}})");
  try {
    parse_tree(doc);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::invariant);
    EXPECT_NE(std::string(e.what()).find("diabetes"), std::string::npos);
  }
}

TEST(ParseTree, SyntaxErrorReportsPosition) {
  try {
    parse_tree(R"({"schema_version":1,)");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::syntax);
    EXPECT_NE(e.where().find("byte"), std::string::npos);
  }
}

TEST(ParseTree, SchemaViolationsCarryFieldPaths) {
  std::string doc = tree_document("[]", R"(["a"])", R"({"leaf":0})");
  Json j = Json::parse(doc);
  j["extra"] = 1;
  try {
    parse_tree(j.dump());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::schema);
    EXPECT_NE(e.where().find("extra"), std::string::npos);
  }

  j = Json::parse(doc);
  j["schema_version"] = 2;
  EXPECT_EQ(kind_of(j.dump()), ParseError::Kind::schema);

  j = Json::parse(doc);
  j["variables"] = Json::parse(R"([{"name":"x","kind":"numeric","min":0,"max":1}])");
  try {
    parse_tree(j.dump());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::schema);
    EXPECT_NE(e.where().find("variables[0]"), std::string::npos);
  }

  j = Json::parse(doc);
  j["root"] = Json::parse(R"({"leaf":0,"if":{}})");
  EXPECT_EQ(kind_of(j.dump()), ParseError::Kind::schema);

  j = Json::parse(doc);
  j["metadata"]["publication_date"] = "2022-02-30";
  EXPECT_EQ(kind_of(j.dump()), ParseError::Kind::schema);
}

TEST(SerializeTree, CanonicalFixpoint) {
  const std::string d = t1_bytes();
  EXPECT_EQ(serialize_tree(parse_tree(d)), d);
}

TEST(SerializeTree, NormalizesWhitespace) {
  const std::string d = t1_bytes();
  const std::string pretty = Json::parse(d).dump(4);
  ASSERT_NE(pretty, d);
  EXPECT_EQ(serialize_tree(parse_tree(pretty)), d);
}

TEST(SerializeTree, EqualTreesEqualBytes) {
  const auto a = guidex::testing::load_t1();
  const auto b = parse_tree(Json::parse(t1_bytes()).dump(1));
  ASSERT_TRUE(a == b);
  EXPECT_EQ(serialize_tree(a), serialize_tree(b));
}

TEST(SerializeTree, InSetsAreCanonicallyOrdered) {
  const auto vars = R"([{"name":"c","kind":"categorical","values":["x","y","z"]}])";
  const auto t1 = make_tree(vars, R"(["a","b"])",
                            R"({"if":{"var":"c","op":"in","value":["z","x"]},"then":{"leaf":0},"else":{"leaf":1}})");
  const auto t2 = make_tree(vars, R"(["a","b"])",
                            R"({"if":{"var":"c","op":"in","value":["x","z"]},"then":{"leaf":0},"else":{"leaf":1}})");
  EXPECT_EQ(serialize_tree(t1), serialize_tree(t2));
}

TEST(ValidateTree, T1IsClean) {
  const ValidationReport r = validate_tree(guidex::testing::load_t1());
  EXPECT_TRUE(r.ok());
  EXPECT_TRUE(r.findings.empty());
}

TEST(ValidateTree, NestedContradictionIsDeadBranch) {
  const auto t = make_tree(
      kAgeVars, R"(["a","b","c"])",
      R"({"if":{"var":"age","op":"ge","value":50},)"
      R"("then":{"if":{"var":"age","op":"lt","value":40},"then":{"leaf":0},)"
      R"("else":{"if":{"var":"smoker","op":"is","value":true},"then":{"leaf":1},"else":{"leaf":2}}},)"
      R"("else":{"leaf":2}})",
      "2");
  const ValidationReport r = validate_tree(t);
  EXPECT_FALSE(r.ok());
  ASSERT_TRUE(r.has("dead_branch"));
  for (const auto& f : r.findings) {
    if (f.code == "dead_branch") {
      EXPECT_EQ(f.locator, "root/then/then");
    }
  }
  EXPECT_TRUE(r.has("unreachable_output"));  // leaf "a" only sits under the dead edge
}

TEST(ValidateTree, UnusedVariable) {
  const auto t = make_tree(kAgeVars, R"(["a","b"])",
                           R"({"if":{"var":"age","op":"ge","value":50},"then":{"leaf":0},"else":{"leaf":1}})",
                           "1");
  const ValidationReport r = validate_tree(t);
  EXPECT_FALSE(r.ok());
  ASSERT_TRUE(r.has("unused_variable"));
  EXPECT_NE(r.findings.front().message.find("smoker"), std::string::npos);
}

TEST(ValidateTree, DuplicateOutputsAndWarnings) {
  const auto t = make_tree(R"([{"name":"smoker","kind":"boolean"}])", R"(["a","a","c"])",
                           R"({"if":{"var":"smoker","op":"is","value":true},"then":{"leaf":0},"else":{"leaf":1}})");
  const ValidationReport r = validate_tree(t);
  EXPECT_TRUE(r.has("duplicate_output"));
  EXPECT_TRUE(r.has("no_action_missing"));
  EXPECT_TRUE(r.has("unreachable_output"));
  EXPECT_FALSE(r.ok());
}

TEST(ValidateTree, GridUnsatisfiableIsOnlyAWarning) {
  const auto t = make_tree(
      R"([{"name":"x","kind":"numeric","min":0,"max":100,"grid":[40,55,70]}])", R"(["in","out"])",
      R"({"if":{"var":"x","op":"gt","value":62.5},)"
      R"("then":{"if":{"var":"x","op":"lt","value":64},"then":{"leaf":0},"else":{"leaf":1}},"else":{"leaf":1}})",
      "1");
  const ValidationReport r = validate_tree(t);
  EXPECT_TRUE(r.ok());
  ASSERT_TRUE(r.has("grid_unsatisfiable"));
  EXPECT_EQ(r.findings.front().locator, "root/then/then");
}

TEST(EnumeratePaths, SingleLeaf) {
  const auto t = make_tree("[]", R"(["only"])", R"({"leaf":0})");
  const auto paths = enumerate_paths(t);
  ASSERT_EQ(paths.size(), 1u);
  EXPECT_EQ(paths[0].path_id, 0u);
  EXPECT_TRUE(paths[0].steps.empty());
  EXPECT_EQ(paths[0].leaf_output_index, 0u);
}

TEST(EnumeratePaths, T1HasFivePathsThenFirst) {
  const auto paths = enumerate_paths(guidex::testing::load_t1());
  ASSERT_EQ(paths.size(), 5u);
  const std::vector<std::size_t> leaves = {0, 1, 2, 1, 2};
  for (std::size_t i = 0; i < paths.size(); ++i) {
    EXPECT_EQ(paths[i].path_id, i);
    EXPECT_EQ(paths[i].leaf_output_index, leaves[i]);
  }
  EXPECT_EQ(paths[0].locator, "root/then/then");
  EXPECT_EQ(paths[4].locator, "root/else/else");
}

TEST(EnumeratePaths, FullDepthThree) {
  const std::string vars =
      R"([{"name":"a","kind":"boolean"},{"name":"b","kind":"boolean"},{"name":"c","kind":"boolean"}])";
  auto level = [](const std::string& var, const std::string& child) {
    return R"({"if":{"var":")" + var + R"(","op":"is","value":true},"then":)" + child + R"(,"else":)" +
           child + "}";
  };
  const auto t = make_tree(vars, R"(["x"])", level("a", level("b", level("c", R"({"leaf":0})"))));
  EXPECT_EQ(enumerate_paths(t).size(), 8u);
}

TEST(PathConstraints, T1Intervals) {
  const DecisionTree t1 = guidex::testing::load_t1();
  const ConstraintSet p0 = path_constraints(t1, 0);
  const auto& age = std::get<NumericRange>(p0.at("age"));
  EXPECT_EQ(age.lo, 50);
  EXPECT_EQ(age.hi, 100);
  EXPECT_TRUE(age.lo_closed && age.hi_closed);
  const auto& ldl = std::get<NumericRange>(p0.at("ldl"));
  EXPECT_EQ(ldl.lo, 190);
  EXPECT_EQ(ldl.hi, 400);
  EXPECT_TRUE(ldl.lo_closed && ldl.hi_closed);
  EXPECT_EQ(std::get<BooleanSet>(p0.at("diabetes")), (BooleanSet{true, true}));

  const ConstraintSet p3 = path_constraints(t1, 3);  // [age>=50:F, diabetes:T]
  const auto& age3 = std::get<NumericRange>(p3.at("age"));
  EXPECT_EQ(age3.lo, 18);
  EXPECT_EQ(age3.hi, 50);
  EXPECT_TRUE(age3.lo_closed);
  EXPECT_FALSE(age3.hi_closed);
  EXPECT_EQ(std::get<BooleanSet>(p3.at("diabetes")), (BooleanSet{false, true}));
  const auto& ldl3 = std::get<NumericRange>(p3.at("ldl"));
  EXPECT_EQ(ldl3.lo, 0);
  EXPECT_EQ(ldl3.hi, 400);

  EXPECT_THROW(path_constraints(t1, 5), Error);
}

TEST(PathConstraints, EqPins) {
  const auto t = make_tree(R"([{"name":"x","kind":"numeric","min":0,"max":10,"grid":[1,9]}])",
                           R"(["five","other"])",
                           R"({"if":{"var":"x","op":"eq","value":5},"then":{"leaf":0},"else":{"leaf":1}})");
  const auto p0 = path_constraints(t, 0);
  const auto p1 = path_constraints(t, 1);
  const auto& x = std::get<NumericRange>(p0.at("x"));
  EXPECT_EQ(x.pinned(), 5.0);
  const auto& other = std::get<NumericRange>(p1.at("x"));
  EXPECT_FALSE(other.pinned().has_value());
  EXPECT_FALSE(other.contains(5.0));
  EXPECT_TRUE(other.contains(4.0));
}

TEST(ConstraintSet, NegationsAreExact) {
  const DecisionTree t1 = guidex::testing::load_t1();
  ConstraintSet c = ConstraintSet::unconstrained(t1);
  c.apply({"age", Op::gt, 60.0}, false);  // age <= 60
  c.apply({"age", Op::lt, 60.0}, false);  // age >= 60
  const auto& age = std::get<NumericRange>(c.at("age"));
  EXPECT_TRUE(c.satisfiable());
  EXPECT_TRUE(age.contains(60));
  EXPECT_FALSE(age.contains(60.5));
  c.apply({"age", Op::eq, 60.0}, false);
  EXPECT_FALSE(c.satisfiable());
}

TEST(ConstraintSet, AdmitsAndGridSatisfiable) {
  const DecisionTree t1 = guidex::testing::load_t1();
  ConstraintSet c = ConstraintSet::unconstrained(t1);
  c.apply({"ldl", Op::ge, 190.0}, true);
  EXPECT_TRUE(c.admits({{"ldl", 200.0}}));
  EXPECT_FALSE(c.admits({{"ldl", 130.0}}));
  EXPECT_TRUE(c.grid_satisfiable(t1));
  c.apply({"ldl", Op::lt, 195.0}, true);
  EXPECT_TRUE(c.satisfiable());
  EXPECT_FALSE(c.grid_satisfiable(t1));
}

TEST(ReportJson, KeysInOrder) {
  ValidationReport r;
  r.findings.push_back({Severity::warning, "no_action_missing", "m", "no_action_index"});
  EXPECT_EQ(canonical_dump(report_to_json(r)),
            R"({"ok":true,"findings":[{"severity":"warning","code":"no_action_missing","message":"m","locator":"no_action_index"}]})");
}
