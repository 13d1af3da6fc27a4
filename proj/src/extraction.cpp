#include "guidex/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>

#include "guidex/error.hpp"
#include "guidex/io.hpp"
#include "guidex/records.hpp"
#include "guidex/tree_format.hpp"

namespace guidex {

namespace fs = std::filesystem;

namespace {

std::string trimmed(std::string_view s) {
  auto space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && space(s.front())) s.remove_prefix(1);
  while (!s.empty() && space(s.back())) s.remove_suffix(1);
  return std::string(s);
}

std::string fold(std::string_view s) {
  std::string out;
  bool gap = false;
  for (char c : trimmed(s)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      gap = true;
      continue;
    }
    if (gap) out += ' ';
    gap = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string reply_or_throw(ExtractionBackend& backend, const ChatRequest& request) {
  std::string reply = backend.complete(request);
  if (trimmed(reply).empty()) throw BackendError(backend.name() + " backend returned an empty reply");
  return reply;
}

// Sends `request`; if `parse` throws, asks once more with the error embedded.
template <typename Parse>
auto with_one_repair(ExtractionBackend& backend, const PromptLibrary& prompts,
                     ChatRequest request, Parse parse) {
  const std::string first = reply_or_throw(backend, request);
  try {
    return parse(first);
  } catch (const Error& e) {
    request.messages.push_back({"assistant", first});
    request.messages.push_back({"user", prompts.render("repair_json.v1", {{"error", e.what()}})});
  }
  const std::string second = reply_or_throw(backend, request);
  try {
    return parse(second);
  } catch (const Error& e) {
    throw BackendError(std::string("unparseable reply after repair: ") + e.what());
  }
}

std::optional<std::string> optional_text(const Json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(std::string("field '") + key + "' must be a string or null");
  return it->get<std::string>();
}

std::vector<RecommendationCandidate> parse_candidates(const std::string& reply,
                                                      const std::string& chunk_id) {
  Json doc;
  try {
    doc = Json::parse(strip_code_fence(reply));
  } catch (const Json::exception& e) {
    throw Error(std::string("reply is not JSON: ") + e.what());
  }
  if (!doc.is_array()) throw Error("reply must be a JSON array");
  std::vector<RecommendationCandidate> out;
  for (const auto& item : doc) {
    if (!item.is_object()) throw Error("array items must be objects");
    RecommendationCandidate c;
    c.population = optional_text(item, "population").value_or("");
    c.condition = optional_text(item, "condition").value_or("");
    c.action = optional_text(item, "action").value_or("");
    c.exceptions = optional_text(item, "exceptions");
    c.evidence_grade = optional_text(item, "evidence_grade");
    c.chunk_id = chunk_id;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace

Json request_to_json(const ChatRequest& request) {
  Json messages = Json::array();
  for (const auto& m : request.messages) {
    Json msg = Json::object();
    msg["role"] = m.role;
    msg["content"] = m.content;
    messages.push_back(std::move(msg));
  }
  Json out = Json::object();
  out["messages"] = std::move(messages);
  out["temperature"] = request.params.temperature;
  out["max_tokens"] = request.params.max_tokens;
  return out;
}

std::string request_key(const ChatRequest& request) {
  return sha256_hex(canonical_dump(request_to_json(request)));
}

FixtureBackend::FixtureBackend(fs::path dir, std::optional<fs::path> dump_missing)
    : dir_(std::move(dir)), dump_missing_(std::move(dump_missing)) {}

std::string FixtureBackend::complete(const ChatRequest& request) {
  const std::string key = request_key(request);
  const fs::path file = dir_ / (key + ".txt");
  if (fs::is_regular_file(file)) return read_text_file(file);
  if (dump_missing_) {
    write_text_file(*dump_missing_ / (key + ".request.json"),
                    request_to_json(request).dump(2) + "\n");
  }
  throw BackendError("no fixture reply for request " + key);
}

HttpBackendConfig HttpBackendConfig::from_env() {
  auto env = [](const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
  };
  HttpBackendConfig c;
  c.base_url = env("GUIDEX_LLM_BASE_URL");
  c.api_key = env("GUIDEX_LLM_API_KEY");
  c.model = env("GUIDEX_LLM_MODEL");
  return c;
}

PromptLibrary PromptLibrary::load(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("prompt directory '" + dir.string() + "' does not exist");
  PromptLibrary lib;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const fs::path& p = entry.path();
    if (entry.is_regular_file() && p.extension() == ".txt") {
      lib.templates_[p.stem().string()] = read_text_file(p);
    }
  }
  return lib;
}

std::string PromptLibrary::render(const std::string& name,
                                  const std::map<std::string, std::string>& vars) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw Error("unknown prompt template '" + name + "'");
  const std::string& tpl = it->second;
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = tpl.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = tpl.find("}}", open + 2);
    if (close == std::string::npos) break;
    const std::string key = tpl.substr(open + 2, close - open - 2);
    auto v = vars.find(key);
    if (v == vars.end()) throw Error("prompt '" + name + "' needs variable '" + key + "'");
    out.append(tpl, pos, open - pos);
    out += v->second;
    pos = close + 2;
  }
  out.append(tpl, pos, std::string::npos);
  return out;
}

Json candidate_to_json(const RecommendationCandidate& c) {
  auto opt = [](const std::optional<std::string>& s) { return s ? Json(*s) : Json(nullptr); };
  Json out = Json::object();
  out["population"] = c.population;
  out["condition"] = c.condition;
  out["action"] = c.action;
  out["exceptions"] = opt(c.exceptions);
  out["evidence_grade"] = opt(c.evidence_grade);
  out["chunk_id"] = c.chunk_id;
  return out;
}

ExtractionResult extract_recommendations(const Chunk& chunk, ExtractionBackend& backend,
                                         const PromptLibrary& prompts) {
  ChatRequest request;
  request.messages.push_back({"system", prompts.render("extract_system.v1", {})});
  request.messages.push_back(
      {"user", prompts.render("extract_user.v1", {{"chunk_id", chunk.chunk_id},
                                                  {"chunk_text", chunk.text}})});
  const auto raw = with_one_repair(backend, prompts, std::move(request), [&](const std::string& r) {
    return parse_candidates(r, chunk.chunk_id);
  });

  ExtractionResult out;
  out.raw_count = raw.size();
  std::vector<std::string> seen;
  for (const auto& c : raw) {
    // Condition-action test: both halves of the rule must be present.
    if (fold(c.action).empty() || fold(c.condition).empty()) {
      ++out.dropped_non_actionable;
      continue;
    }
    std::string key = fold(c.population) + '\x1f' + fold(c.condition) + '\x1f' + fold(c.action);
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      ++out.dropped_duplicates;
      continue;
    }
    seen.push_back(std::move(key));
    out.candidates.push_back(c);
  }
  return out;
}

DraftResult draft_tree(const RecommendationCandidate& candidate, const std::string& guideline_id,
                       const std::string& tree_id, ExtractionBackend& backend,
                       const PromptLibrary& prompts) {
  ChatRequest request;
  request.messages.push_back({"system", prompts.render("draft_system.v1", {})});
  request.messages.push_back(
      {"user", prompts.render("draft_user.v1", {{"tree_id", tree_id},
                                                {"guideline_id", guideline_id},
                                                {"chunk_id", candidate.chunk_id},
                                                {"candidate", candidate_to_json(candidate).dump(2)}})});

  DraftResult result;
  for (int round = 1; round <= 2; ++round) {
    result.rounds = round;
    const std::string reply = reply_or_throw(backend, request);
    std::string problem;
    try {
      DecisionTree tree = parse_tree(strip_code_fence(reply));
      if (tree.id() != tree_id) {
        problem = "tree id must be \"" + tree_id + "\", got \"" + tree.id() + "\"";
      } else if (tree.source() != TreeSource{guideline_id, candidate.chunk_id}) {
        problem = "source must be {\"guideline_id\":\"" + guideline_id + "\",\"chunk_id\":\"" +
                  candidate.chunk_id + "\"}";
      } else {
        const ValidationReport report = validate_tree(tree);
        if (report.ok()) {
          result.tree = std::move(tree);
          result.discard_reason.clear();
          return result;
        }
        problem = canonical_dump(report_to_json(report));
      }
    } catch (const ParseError& e) {
      problem = e.what();
    }
    result.discard_reason = problem;
    request.messages.push_back({"assistant", reply});
    request.messages.push_back({"user", prompts.render("draft_repair.v1", {{"report", problem}})});
  }
  return result;
}

std::string verbalize_rationale(const FactualInstance& instance, const DecisionTree& tree,
                                ExtractionBackend& backend, const PromptLibrary& prompts) {
  FactualInstance shown = instance;
  shown.rationale_text.reset();
  ChatRequest request;
  request.messages.push_back({"system", prompts.render("rationale_factual_system.v1", {})});
  request.messages.push_back(
      {"user", prompts.render("rationale_factual_user.v1",
                              {{"tree", serialize_tree(tree)},
                               {"instance", canonical_dump(factual_to_json(shown))}})});
  return trimmed(reply_or_throw(backend, request));
}

std::string verbalize_rationale(const CounterfactualInstance& instance, const DecisionTree& tree,
                                ExtractionBackend& backend, const PromptLibrary& prompts) {
  CounterfactualInstance shown = instance;
  shown.rationale_text.reset();
  ChatRequest request;
  request.messages.push_back({"system", prompts.render("rationale_counterfactual_system.v1", {})});
  request.messages.push_back(
      {"user", prompts.render("rationale_counterfactual_user.v1",
                              {{"tree", serialize_tree(tree)},
                               {"instance", canonical_dump(counterfactual_to_json(shown))}})});
  std::string text = trimmed(reply_or_throw(backend, request));
  const std::string lower = fold(text);
  for (const char* step : {"abduction", "intervention", "prediction"}) {
    if (lower.find(step) == std::string::npos) {
      throw BackendError(std::string("counterfactual rationale does not mention '") + step + "'");
    }
  }
  return text;
}

std::string strip_code_fence(std::string_view text) {
  std::string t = trimmed(text);
  if (t.rfind("```", 0) != 0) return t;
  const auto first_nl = t.find('\n');
  const auto last = t.rfind("```");
  if (first_nl == std::string::npos || last <= first_nl) return t;
  return trimmed(std::string_view(t).substr(first_nl + 1, last - first_nl - 1));
}

}  // namespace guidex
