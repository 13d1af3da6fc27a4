#pragma once

// Pluggable client for the LLM-dependent stages: recommendation extraction,
// tree drafting, and rationale verbalization. The fixture backend replays
// canned replies keyed by a stable hash of the request; the http backend
// talks to a chat-completions endpoint.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "guidex/canonical_json.hpp"
#include "guidex/corpus.hpp"
#include "guidex/model.hpp"
#include "guidex/qa_counterfactual.hpp"
#include "guidex/qa_factual.hpp"

namespace guidex {

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

struct DecodeParams {
  double temperature = 0.0;
  int max_tokens = 4096;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  DecodeParams params;
};

/// Fixed serialization of a request; the basis of fixture keys.
Json request_to_json(const ChatRequest& request);
/// Hex SHA-256 of the canonical request bytes.
std::string request_key(const ChatRequest& request);

class ExtractionBackend {
 public:
  virtual ~ExtractionBackend() = default;
  /// Returns the assistant reply text; throws BackendError on failure.
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Replays `<dir>/<request_key>.txt`. With a dump directory, unanswered
/// requests are written there as `<key>.request.json` before failing, which
/// is how new fixtures are authored.
class FixtureBackend final : public ExtractionBackend {
 public:
  explicit FixtureBackend(std::filesystem::path dir,
                          std::optional<std::filesystem::path> dump_missing = std::nullopt);

  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "fixture"; }

 private:
  std::filesystem::path dir_;
  std::optional<std::filesystem::path> dump_missing_;
};

struct HttpBackendConfig {
  std::string base_url;  // e.g. https://host/v1 ; POSTs to <base_url>/chat/completions
  std::string api_key;
  std::string model;
  std::size_t max_in_flight = 4;
  int max_retries = 3;
  std::chrono::milliseconds base_delay{1000};
  double backoff_factor = 2.0;
  std::chrono::seconds timeout{120};

  /// Reads GUIDEX_LLM_BASE_URL, GUIDEX_LLM_API_KEY, GUIDEX_LLM_MODEL.
  static HttpBackendConfig from_env();
};

class HttpChatBackend final : public ExtractionBackend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpChatBackend(HttpBackendConfig config, Sleeper sleeper = {});
  ~HttpChatBackend() override;

  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "http-chat"; }

 private:
  HttpBackendConfig config_;
  Sleeper sleep_;
  std::counting_semaphore<> in_flight_;
};

/// Versioned prompt templates loaded from a directory; `{{name}}`
/// placeholders are substituted by render.
class PromptLibrary {
 public:
  static PromptLibrary load(const std::filesystem::path& dir);

  std::string render(const std::string& name, const std::map<std::string, std::string>& vars) const;

 private:
  std::map<std::string, std::string> templates_;
};

struct RecommendationCandidate {
  std::string population;
  std::string condition;
  std::string action;
  std::optional<std::string> exceptions;
  std::optional<std::string> evidence_grade;
  std::string chunk_id;

  bool operator==(const RecommendationCandidate&) const = default;
};

Json candidate_to_json(const RecommendationCandidate& candidate);

struct ExtractionResult {
  std::vector<RecommendationCandidate> candidates;  // usable recommendations
  std::size_t raw_count = 0;
  std::size_t dropped_non_actionable = 0;
  std::size_t dropped_duplicates = 0;
};

/// Throws BackendError on backend failure or when the reply is still
/// unparseable after one repair round.
ExtractionResult extract_recommendations(const Chunk& chunk, ExtractionBackend& backend,
                                         const PromptLibrary& prompts);

struct DraftResult {
  std::optional<DecisionTree> tree;
  std::string discard_reason;  // set when tree is empty
  int rounds = 0;
};

/// Requests a tree document for `candidate`; one repair round embedding the
/// parse error or validation report. The returned tree carries `tree_id` and
/// validates with ok=true.
DraftResult draft_tree(const RecommendationCandidate& candidate, const std::string& guideline_id,
                       const std::string& tree_id, ExtractionBackend& backend,
                       const PromptLibrary& prompts);

std::string verbalize_rationale(const FactualInstance& instance, const DecisionTree& tree,
                                ExtractionBackend& backend, const PromptLibrary& prompts);
std::string verbalize_rationale(const CounterfactualInstance& instance, const DecisionTree& tree,
                                ExtractionBackend& backend, const PromptLibrary& prompts);

/// Removes a surrounding Markdown code fence, if any.
std::string strip_code_fence(std::string_view text);

}  // namespace guidex
