#pragma once

// End-to-end dataset build: curate, extract, draft, validate, sample, emit.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "guidex/canonical_json.hpp"
#include "guidex/error.hpp"
#include "guidex/extraction.hpp"

namespace guidex {

struct PipelineConfig {
  std::filesystem::path corpus_dir;
  std::filesystem::path out_dir;
  std::uint64_t seed = 7;
  std::size_t soft_limit = kDefaultSoftLimit;
  std::size_t max_chunks = kDefaultMaxChunks;
  std::size_t per_path = 1;
  double no_action_cap = 0.5;
  std::size_t hidden_count = 1;
  bool identifiable_only = true;
  std::size_t cf_per_tree = 16;
  std::size_t cf_draws_per_source = 3;
  bool redact_gold = false;
  bool verbalize = false;
};

struct StageCounts {
  std::size_t documents = 0;
  std::size_t curated_documents = 0;
  std::size_t chunks = 0;
  std::size_t overflow_chunks = 0;
  std::size_t raw_candidates = 0;
  std::size_t dropped_non_actionable = 0;
  std::size_t dropped_duplicates = 0;
  std::size_t candidates = 0;
  std::size_t validated_recommendations = 0;
  std::size_t validated_trees = 0;
  std::size_t factual_instances = 0;
  std::size_t counterfactual_candidates = 0;
  std::size_t counterfactual_retained = 0;
  std::size_t counterfactual_discarded_unchanged = 0;
  std::size_t counterfactual_discarded_unidentifiable = 0;
  std::size_t counterfactual_discarded_off_grid = 0;
  std::size_t counterfactual_instances = 0;
};

struct Discard {
  std::string stage;
  std::string subject;  // chunk or tree id
  std::string reason;
};

struct Manifest {
  StageCounts counts;
  Json config = Json::object();
  std::uint64_t seed = 0;
  std::string backend;
  std::vector<Discard> discards;
  /// Relative output path -> lowercase hex SHA-256 of the file bytes.
  std::vector<std::pair<std::string, std::string>> digests;
  std::string generated_at;
};

/// Fixed key order; `generated_at` is left out when `with_timestamp` is false.
Json manifest_to_json(const Manifest& manifest, bool with_timestamp = true);

/// Raised when a stage fails; carries the counts gathered so far.
class PipelineError : public Error {
 public:
  PipelineError(std::string stage, const std::string& message, Manifest partial,
                bool backend_failure = false)
      : Error("stage '" + stage + "' failed: " + message),
        stage_(std::move(stage)),
        partial_(std::move(partial)),
        backend_failure_(backend_failure) {}

  const std::string& stage() const { return stage_; }
  const Manifest& partial() const { return partial_; }
  /// The cause was a BackendError.
  bool backend_failure() const { return backend_failure_; }

 private:
  std::string stage_;
  Manifest partial_;
  bool backend_failure_;
};

using PipelineLog = std::function<void(const std::string&)>;

/// Runs every stage and writes factual.jsonl, counterfactual.jsonl,
/// trees/<id>.json, discards.jsonl and manifest.json under out_dir. An empty
/// corpus writes only the manifest. The timestamp honors SOURCE_DATE_EPOCH.
Manifest run_pipeline(const PipelineConfig& config, ExtractionBackend& backend,
                      const PromptLibrary& prompts, const PipelineLog& log = {});

}  // namespace guidex
