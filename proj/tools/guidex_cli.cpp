// guidex: command-line front end over the library.
//
// Exit codes: 0 success, 1 usage, 2 validation failure, 3 backend failure.

#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "guidex/corpus.hpp"
#include "guidex/error.hpp"
#include "guidex/executor.hpp"
#include "guidex/extraction.hpp"
#include "guidex/instance_store.hpp"
#include "guidex/io.hpp"
#include "guidex/pipeline.hpp"
#include "guidex/qa_counterfactual.hpp"
#include "guidex/qa_factual.hpp"
#include "guidex/records.hpp"
#include "guidex/service.hpp"
#include "guidex/tree_format.hpp"
#include "guidex/verifier.hpp"

#ifndef GUIDEX_PROMPT_DIR
#define GUIDEX_PROMPT_DIR "prompts"
#endif

namespace {

using namespace guidex;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kInvalid = 2;
constexpr int kBackend = 3;

/// Failure that should end the command with a specific exit code.
struct Exit {
  int code;
  std::string message;
};

void print(const Json& j) { std::cout << canonical_dump(j) << '\n'; }

DecisionTree load_tree(const std::string& path) { return parse_tree(read_text_file(path)); }

Assignment parse_assign(const DecisionTree& tree, const std::vector<std::string>& pairs) {
  std::map<std::string, std::string> raw;
  for (const auto& p : pairs) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0) throw Exit{kUsage, "--assign expects name=value, got '" + p + "'"};
    raw[p.substr(0, eq)] = p.substr(eq + 1);
  }
  for (const auto& [name, text] : raw) {
    if (!tree.find_variable(name)) throw Exit{kInvalid, "tree has no variable '" + name + "'"};
    if (!interpret_claims(tree, {{name, text}})) {
      throw Exit{kInvalid, "value '" + text + "' does not fit variable '" + name + "'"};
    }
  }
  return *interpret_claims(tree, raw);
}

struct BackendOptions {
  std::string fixtures;
  std::string dump_missing;
  bool http = false;
  std::string prompts = GUIDEX_PROMPT_DIR;

  void attach(CLI::App* cmd) {
    cmd->add_option("--fixtures", fixtures, "Replay LLM replies from this fixture directory");
    cmd->add_option("--dump-missing", dump_missing,
                    "Write requests that have no fixture reply into this directory");
    cmd->add_flag("--http", http, "Use the chat-completions endpoint from GUIDEX_LLM_* variables");
    cmd->add_option("--prompts", prompts, "Prompt template directory");
  }

  std::unique_ptr<ExtractionBackend> make() const {
    if (http == !fixtures.empty()) throw Exit{kUsage, "choose exactly one of --fixtures and --http"};
    if (http) return std::make_unique<HttpChatBackend>(HttpBackendConfig::from_env());
    std::optional<fs::path> dump;
    if (!dump_missing.empty()) dump = dump_missing;
    return std::make_unique<FixtureBackend>(fixtures, dump);
  }
};

struct StoreOptions {
  std::string trees;
  std::string factual;
  std::string counterfactual;
  bool equivalence = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--trees", trees, "Directory of tree documents")->required();
    cmd->add_option("--factual", factual, "factual.jsonl");
    cmd->add_option("--counterfactual", counterfactual, "counterfactual.jsonl");
    cmd->add_flag("--credit-equivalence-class", equivalence,
                  "Credit any hidden state in the abduction class");
  }

  InstanceStore load() const {
    auto opt = [](const std::string& s) { return s.empty() ? std::optional<fs::path>() : fs::path(s); };
    try {
      return InstanceStore::load(trees, opt(factual), opt(counterfactual));
    } catch (const Error& e) {
      throw Exit{kInvalid, e.what()};
    }
  }

  RewardMode mode() const { return equivalence ? RewardMode::equivalence : RewardMode::strict; }
};

HttpRewardServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guideline decision trees to verifiable QA data and rewards"};
  app.require_subcommand(1);

  // validate
  std::string tree_path;
  auto* validate = app.add_subcommand("validate", "Parse and validate a tree document");
  validate->add_option("tree", tree_path, "Tree JSON file")->required();

  // paths
  auto* paths = app.add_subcommand("paths", "List root-to-leaf paths with their constraints");
  paths->add_option("tree", tree_path)->required();

  // exec
  std::vector<std::string> assigns;
  bool partial = false;
  auto* exec = app.add_subcommand("exec", "Execute a tree on an assignment");
  exec->add_option("tree", tree_path)->required();
  exec->add_option("--assign", assigns, "name=value (repeatable)");
  exec->add_flag("--partial", partial, "Allow unassigned variables and report reachable outputs");

  // sample-factual
  std::uint64_t seed = 0;
  std::size_t per_path = 1;
  double no_action_cap = 0.5;
  auto* sample_factual = app.add_subcommand("sample-factual", "Generate factual QA instances");
  sample_factual->add_option("tree", tree_path)->required();
  sample_factual->add_option("--seed", seed);
  sample_factual->add_option("--per-path", per_path);
  sample_factual->add_option("--no-action-cap", no_action_cap);

  // sample-cf
  std::size_t hidden_count = 1;
  bool identifiable_only = true;
  std::size_t per_tree = 16;
  bool redact_gold = false;
  auto* sample_cf = app.add_subcommand("sample-cf", "Generate counterfactual QA instances");
  sample_cf->add_option("tree", tree_path)->required();
  sample_cf->add_option("--seed", seed);
  sample_cf->add_option("--per-path", per_path, "Factual draws per path for the source pool");
  sample_cf->add_option("--no-action-cap", no_action_cap);
  sample_cf->add_option("--hidden-count", hidden_count);
  sample_cf->add_option("--identifiable-only", identifiable_only, "true|false");
  sample_cf->add_option("--per-tree", per_tree);
  sample_cf->add_flag("--redact-gold", redact_gold, "Omit hidden_values and abduction_class");

  // verify
  StoreOptions store_opts;
  std::string responses_path;
  auto* verify = app.add_subcommand("verify", "Score a JSONL file of responses");
  store_opts.attach(verify);
  verify->add_option("responses", responses_path, "JSONL of {instance_id, response}")->required();

  // serve
  bool use_stdio = false;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t workers = 1;
  auto* serve = app.add_subcommand("serve", "Run the reward service");
  store_opts.attach(serve);
  serve->add_flag("--stdio", use_stdio, "Line-delimited requests on stdin, replies on stdout");
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--workers", workers);

  // curate
  std::string corpus_dir;
  std::size_t soft_limit = kDefaultSoftLimit;
  std::size_t max_chunks = kDefaultMaxChunks;
  auto* curate = app.add_subcommand("curate", "Deduplicate a corpus and chunk its documents");
  curate->add_option("corpus", corpus_dir)->required();
  curate->add_option("--soft-limit", soft_limit);
  curate->add_option("--max-chunks", max_chunks);

  // extract
  BackendOptions backend_opts;
  auto* extract = app.add_subcommand("extract", "Extract recommendation candidates from a corpus");
  extract->add_option("corpus", corpus_dir)->required();
  extract->add_option("--soft-limit", soft_limit);
  extract->add_option("--max-chunks", max_chunks);
  backend_opts.attach(extract);

  // stats
  std::string out_dir;
  auto* stats = app.add_subcommand("stats", "Summarize an emitted dataset directory");
  stats->add_option("dir", out_dir)->required();

  // run
  PipelineConfig pcfg;
  std::string run_corpus;
  auto* run = app.add_subcommand("run", "Run the full pipeline");
  run->add_option("corpus", run_corpus)->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", pcfg.seed);
  run->add_option("--soft-limit", pcfg.soft_limit);
  run->add_option("--max-chunks", pcfg.max_chunks);
  run->add_option("--per-path", pcfg.per_path);
  run->add_option("--no-action-cap", pcfg.no_action_cap);
  run->add_option("--hidden-count", pcfg.hidden_count);
  run->add_option("--identifiable-only", pcfg.identifiable_only, "true|false");
  run->add_option("--cf-per-tree", pcfg.cf_per_tree);
  run->add_flag("--redact-gold", pcfg.redact_gold);
  run->add_flag("--verbalize", pcfg.verbalize, "Ask the backend for rationale texts");
  backend_opts.attach(run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) {
      DecisionTree tree = load_tree(tree_path);
      const ValidationReport report = validate_tree(tree);
      print(report_to_json(report));
      return report.ok() ? kOk : kInvalid;
    }
    if (*paths) {
      DecisionTree tree = load_tree(tree_path);
      for (const auto& p : enumerate_paths(tree)) {
        Json j = Json::object();
        j["path_id"] = p.path_id;
        j["label"] = tree.outputs()[p.leaf_output_index];
        j["locator"] = p.locator;
        j["satisfiable"] = p.constraints.satisfiable();
        j["steps"] = path_to_json(p.steps);
        j["constraints"] = constraints_to_json(p.constraints);
        print(j);
      }
      return kOk;
    }
    if (*exec) {
      DecisionTree tree = load_tree(tree_path);
      const Assignment x = parse_assign(tree, assigns);
      Json j = Json::object();
      if (partial) {
        const ResidualResult r = partial_execute(tree, x);
        j["decided"] = r.is_decided();
        j["label"] = r.decided ? Json(r.decided->output_label) : Json(nullptr);
        Json reachable = Json::array();
        for (auto i : r.reachable_outputs) reachable.push_back(tree.outputs()[i]);
        j["reachable"] = std::move(reachable);
        Json blocking = Json::array();
        for (const auto& b : r.blocking) blocking.push_back(b);
        j["blocking"] = std::move(blocking);
        j["path"] = r.decided ? path_to_json(r.decided->path) : Json(nullptr);
      } else {
        const ExecutionResult r = execute(tree, x);
        j["label"] = r.output_label;
        j["output_index"] = r.output_index;
        j["path"] = path_to_json(r.path);
      }
      print(j);
      return kOk;
    }
    if (*sample_factual) {
      DecisionTree tree = load_tree(tree_path);
      FactualConfig cfg{seed, per_path, no_action_cap};
      const FactualSet set = generate_factual_set(tree, cfg);
      std::cout << factual_jsonl(set.instances);
      if (set.balance_infeasible) std::cerr << "note: no-action cap could not be met\n";
      return kOk;
    }
    if (*sample_cf) {
      DecisionTree tree = load_tree(tree_path);
      const FactualSet pool = generate_factual_set(tree, FactualConfig{seed, per_path, no_action_cap});
      CfConfig cfg;
      cfg.seed = seed;
      cfg.hidden_count = hidden_count;
      cfg.identifiable_only = identifiable_only;
      cfg.per_tree = per_tree;
      CfSet set = generate_counterfactual_set(tree, pool.instances, cfg);
      auto balanced = balance_counterfactuals(std::move(set.instances), tree, no_action_cap, seed);
      std::cout << counterfactual_jsonl(balanced.instances, redact_gold);
      std::cerr << "scenarios " << set.stats.scenarios << ", changed " << set.stats.changed
                << ", unchanged " << set.stats.discarded_unchanged << ", unidentifiable "
                << set.stats.discarded_unidentifiable << ", emitted " << balanced.instances.size()
                << '\n';
      return kOk;
    }
    if (*verify) {
      const InstanceStore store = store_opts.load();
      const RewardService service(store, store_opts.mode());
      std::ifstream in(responses_path);
      if (!in) throw Exit{kUsage, "cannot open '" + responses_path + "'"};
      serve_stdio(service, in, std::cout);
      return kOk;
    }
    if (*serve) {
      const InstanceStore store = store_opts.load();
      const RewardService service(store, store_opts.mode());
      if (use_stdio) {
        serve_stdio(service, std::cin, std::cout);
        return kOk;
      }
      HttpRewardServer server(service, workers);
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "serving rewards on http://" << host << ':' << bound << '\n';
      server.listen();
      g_server = nullptr;
      return kOk;
    }
    if (*curate || *extract) {
      const auto docs = load_corpus(corpus_dir);
      std::vector<GuidelineMeta> metas;
      for (const auto& d : docs) metas.push_back(d.meta);
      const auto kept = dedup_guidelines(metas);
      std::unique_ptr<ExtractionBackend> backend;
      std::optional<PromptLibrary> prompts;
      if (*extract) {
        backend = backend_opts.make();
        prompts = PromptLibrary::load(backend_opts.prompts);
      }
      for (const auto& meta : kept) {
        const auto& doc = *std::find_if(docs.begin(), docs.end(), [&](const CorpusDocument& d) {
          return d.meta.guideline_id == meta.guideline_id;
        });
        for (const auto& chunk : chunk_document(meta.guideline_id, doc.text, soft_limit, max_chunks)) {
          if (*curate) {
            Json j = chunk_to_json(chunk);
            j.erase("text");
            print(j);
            continue;
          }
          for (const auto& c : extract_recommendations(chunk, *backend, *prompts).candidates) {
            print(candidate_to_json(c));
          }
        }
      }
      return kOk;
    }
    if (*stats) {
      const fs::path dir = out_dir;
      const Json manifest = Json::parse(read_text_file(dir / "manifest.json"));
      print(manifest.at("counts"));
      std::map<std::string, std::size_t> labels;
      std::size_t factual = 0;
      if (fs::exists(dir / "factual.jsonl")) {
        for (const auto& r : parse_jsonl(read_text_file(dir / "factual.jsonl"))) {
          ++labels[r.at("label").get<std::string>()];
          ++factual;
        }
      }
      Json dist = Json::object();
      for (const auto& [label, count] : labels) dist[label] = count;
      Json j = Json::object();
      j["factual_labels"] = std::move(dist);
      j["factual_total"] = factual;
      print(j);
      return kOk;
    }
    if (*run) {
      pcfg.corpus_dir = run_corpus;
      pcfg.out_dir = out_dir;
      auto backend = backend_opts.make();
      const PromptLibrary prompts = PromptLibrary::load(backend_opts.prompts);
      const Manifest m =
          run_pipeline(pcfg, *backend, prompts, [](const std::string& line) { std::cerr << line << '\n'; });
      print(manifest_to_json(m)["counts"]);
      return kOk;
    }
  } catch (const Exit& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.code;
  } catch (const PipelineError& e) {
    std::cerr << "error: " << e.what() << '\n';
    std::cerr << manifest_to_json(e.partial()).dump(2) << '\n';
    return e.backend_failure() ? kBackend : kInvalid;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << '\n';
    return kBackend;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
