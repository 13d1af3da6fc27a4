#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <functional>
#include <vector>

#include "guidex/extraction.hpp"
#include "guidex/model.hpp"
#include "guidex/pipeline.hpp"

namespace guidex::testing {

/// Source-tree paths; configured by CMake.
std::filesystem::path fixture_dir();
std::filesystem::path prompt_dir();
std::filesystem::path cli_path();

/// The checked-in statin tree used throughout the examples.
DecisionTree load_t1();

/// Builds a tree document around the given JSON fragments and parses it.
std::string tree_document(const std::string& variables, const std::string& outputs,
                          const std::string& root, const std::string& no_action = "null",
                          const std::string& id = "test");
DecisionTree make_tree(const std::string& variables, const std::string& outputs,
                       const std::string& root, const std::string& no_action = "null");

struct RandomTreeShape {
  std::size_t min_vars = 3;
  std::size_t max_vars = 10;
  std::size_t max_depth = 6;
  bool mixed_kinds = false;  // false: booleans only
};

/// Seeded random tree. Variables may go untested and branches may be dead;
/// both are wanted for validator coverage.
DecisionTree random_tree(std::uint64_t seed, const RandomTreeShape& shape = {});

/// Backend answering from a callback and recording every request.
class ScriptedBackend final : public ExtractionBackend {
 public:
  using Reply = std::function<std::string(const ChatRequest&)>;

  explicit ScriptedBackend(Reply reply) : reply_(std::move(reply)) {}

  std::string complete(const ChatRequest& request) override {
    requests.push_back(request);
    return reply_(request);
  }
  std::string name() const override { return "scripted"; }

  std::vector<ChatRequest> requests;

 private:
  Reply reply_;
};

/// Runs the pipeline over the fixture corpus with fixture replies.
Manifest run_fixture_pipeline(const std::filesystem::path& out_dir, std::uint64_t seed = 7);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace guidex::testing
