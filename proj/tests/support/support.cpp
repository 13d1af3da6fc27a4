#include "support.hpp"

#include <algorithm>
#include <atomic>
#include <unistd.h>

#include "guidex/io.hpp"
#include "guidex/rng.hpp"
#include "guidex/tree_format.hpp"

namespace guidex::testing {

namespace fs = std::filesystem;

fs::path fixture_dir() { return GUIDEX_FIXTURE_DIR; }
fs::path prompt_dir() { return GUIDEX_PROMPT_DIR; }
fs::path cli_path() { return GUIDEX_CLI_PATH; }

DecisionTree load_t1() { return parse_tree(read_text_file(fixture_dir() / "trees" / "statin-01-r0.json")); }

std::string tree_document(const std::string& variables, const std::string& outputs,
                          const std::string& root, const std::string& no_action,
                          const std::string& id) {
  return R"({"schema_version":1,"id":")" + id +
         R"(","source":{"guideline_id":"g","chunk_id":"g#0"},)"
         R"("metadata":{"disease_or_drug":"d","age_group":"adult","race":"all","gender":"all",)"
         R"("publication_date":"2022-06-01"},"variables":)" +
         variables + R"(,"outputs":)" + outputs + R"(,"no_action_index":)" + no_action +
         R"(,"root":)" + root + "}";
}

DecisionTree make_tree(const std::string& variables, const std::string& outputs,
                       const std::string& root, const std::string& no_action) {
  return parse_tree(tree_document(variables, outputs, root, no_action));
}

namespace {

struct Builder {
  Rng rng;
  std::vector<VariableSpec> vars;
  std::size_t outputs;
  std::size_t max_depth;

  Predicate predicate_for(const VariableSpec& v) {
    switch (v.kind()) {
      case VarKind::boolean:
        return {v.name(), Op::is, rng.uniform_index(2) == 1};
      case VarKind::categorical: {
        if (rng.uniform_index(2) == 0) {
          return {v.name(), Op::eq, v.values()[rng.uniform_index(v.values().size())]};
        }
        std::vector<std::string> subset;
        for (const auto& c : v.values()) {
          if (rng.uniform_index(2) == 1) subset.push_back(c);
        }
        if (subset.empty()) subset.push_back(v.values().front());
        return {v.name(), Op::in, subset};
      }
      case VarKind::numeric: {
        static constexpr Op ops[] = {Op::lt, Op::le, Op::gt, Op::ge, Op::eq};
        const Op op = ops[rng.uniform_index(5)];
        // eq mostly on grid points so it is not always off-grid.
        if (op == Op::eq && rng.uniform_index(3) != 0) {
          return {v.name(), op, v.grid()[rng.uniform_index(v.grid().size())]};
        }
        return {v.name(), op, 5.0 * static_cast<double>(rng.uniform_index(21))};
      }
    }
    return {};
  }

  NodePtr build(std::size_t depth) {
    // Leaf probability grows with depth; the root is always a branch.
    if (depth > 0 && (depth >= max_depth || rng.uniform_index(max_depth + 1) < depth)) {
      return Node::leaf(rng.uniform_index(outputs));
    }
    const VariableSpec& v = vars[rng.uniform_index(vars.size())];
    Predicate p = predicate_for(v);
    NodePtr then_node = build(depth + 1);
    NodePtr else_node = build(depth + 1);
    return Node::branch(std::move(p), std::move(then_node), std::move(else_node));
  }
};

}  // namespace

DecisionTree random_tree(std::uint64_t seed, const RandomTreeShape& shape) {
  Builder b{Rng(seed, "random-tree"), {}, 0, shape.max_depth};
  const std::size_t n = shape.min_vars + b.rng.uniform_index(shape.max_vars - shape.min_vars + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t kind = shape.mixed_kinds ? b.rng.uniform_index(3) : 0;
    const std::string name = "v" + std::to_string(i);
    if (kind == 0) {
      b.vars.push_back(VariableSpec::boolean(name));
    } else if (kind == 1) {
      std::vector<std::string> values;
      const std::size_t k = 2 + b.rng.uniform_index(3);
      for (std::size_t j = 0; j < k; ++j) values.push_back("c" + std::to_string(j));
      b.vars.push_back(VariableSpec::categorical(name, std::move(values)));
    } else {
      std::vector<double> grid;
      for (int g = 0; g <= 100; g += 5) {
        if (b.rng.uniform_index(5) == 0) grid.push_back(g);
      }
      if (grid.size() < 2) grid = {25, 75};
      b.vars.push_back(VariableSpec::numeric(name, "u", 0, 100, std::move(grid)));
    }
  }
  b.outputs = 2 + b.rng.uniform_index(3);
  std::vector<std::string> outputs;
  for (std::size_t i = 0; i + 1 < b.outputs; ++i) outputs.push_back("action " + std::to_string(i));
  outputs.push_back("no-action");
  NodePtr root = b.build(0);
  GuidelineMeta meta;
  meta.guideline_id = "rand";
  return DecisionTree("rand-" + std::to_string(seed), TreeSource{"rand", "rand#0"}, meta,
                      std::move(b.vars), std::move(outputs), b.outputs - 1, std::move(root));
}

Manifest run_fixture_pipeline(const fs::path& out_dir, std::uint64_t seed) {
  PipelineConfig cfg;
  cfg.corpus_dir = fixture_dir() / "corpus";
  cfg.out_dir = out_dir;
  cfg.seed = seed;
  FixtureBackend backend(fixture_dir() / "llm");
  return run_pipeline(cfg, backend, PromptLibrary::load(prompt_dir()));
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("guidex-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

}  // namespace guidex::testing
