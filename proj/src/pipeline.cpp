#include "guidex/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <set>

#include "guidex/corpus.hpp"
#include "guidex/io.hpp"
#include "guidex/qa_counterfactual.hpp"
#include "guidex/qa_factual.hpp"
#include "guidex/records.hpp"
#include "guidex/tree_format.hpp"

namespace guidex {

namespace fs = std::filesystem;

namespace {

std::string timestamp_now() {
  std::time_t t = std::time(nullptr);
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH"); sde && *sde) {
    char* end = nullptr;
    const long long v = std::strtoll(sde, &end, 10);
    if (end && *end == '\0') t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json config_to_json(const PipelineConfig& c) {
  Json out = Json::object();
  // Only the directory name: manifests must not depend on where the repo lives.
  out["corpus"] = c.corpus_dir.filename().empty() ? c.corpus_dir.parent_path().filename().string()
                                                  : c.corpus_dir.filename().string();
  out["soft_limit"] = c.soft_limit;
  out["max_chunks"] = c.max_chunks;
  out["per_path"] = c.per_path;
  out["no_action_cap"] = c.no_action_cap;
  out["hidden_count"] = c.hidden_count;
  out["identifiable_only"] = c.identifiable_only;
  out["cf_per_tree"] = c.cf_per_tree;
  out["cf_draws_per_source"] = c.cf_draws_per_source;
  out["redact_gold"] = c.redact_gold;
  out["verbalize"] = c.verbalize;
  return out;
}

// Tree structure without its identity, for spotting duplicate drafts.
std::string structure_key(const DecisionTree& tree) {
  Json doc = tree_to_json(tree);
  doc.erase("id");
  doc.erase("source");
  return canonical_dump(doc);
}

Json discard_to_json(const Discard& d) {
  Json out = Json::object();
  out["stage"] = d.stage;
  out["subject"] = d.subject;
  out["reason"] = d.reason;
  return out;
}

void clear_outputs(const fs::path& out) {
  for (const char* name : {"factual.jsonl", "counterfactual.jsonl", "discards.jsonl", "manifest.json"}) {
    fs::remove(out / name);
  }
  if (fs::is_directory(out / "trees")) {
    for (const auto& entry : fs::directory_iterator(out / "trees")) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") fs::remove(entry.path());
    }
  }
}

}  // namespace

Json manifest_to_json(const Manifest& m, bool with_timestamp) {
  const StageCounts& c = m.counts;
  Json counts = Json::object();
  counts["documents"] = c.documents;
  counts["curated_documents"] = c.curated_documents;
  counts["chunks"] = c.chunks;
  counts["overflow_chunks"] = c.overflow_chunks;
  counts["raw_candidates"] = c.raw_candidates;
  counts["dropped_non_actionable"] = c.dropped_non_actionable;
  counts["dropped_duplicates"] = c.dropped_duplicates;
  counts["candidates"] = c.candidates;
  counts["validated_recommendations"] = c.validated_recommendations;
  counts["validated_trees"] = c.validated_trees;
  counts["factual_instances"] = c.factual_instances;
  counts["counterfactual_candidates"] = c.counterfactual_candidates;
  counts["counterfactual_retained"] = c.counterfactual_retained;
  counts["counterfactual_discarded_unchanged"] = c.counterfactual_discarded_unchanged;
  counts["counterfactual_discarded_unidentifiable"] = c.counterfactual_discarded_unidentifiable;
  counts["counterfactual_discarded_off_grid"] = c.counterfactual_discarded_off_grid;
  counts["counterfactual_instances"] = c.counterfactual_instances;

  Json digests = Json::object();
  for (const auto& [path, digest] : m.digests) digests[path] = digest;
  Json discards = Json::array();
  for (const auto& d : m.discards) discards.push_back(discard_to_json(d));

  Json out = Json::object();
  out["counts"] = std::move(counts);
  out["config"] = m.config;
  out["seed"] = m.seed;
  out["backend"] = m.backend;
  out["discards"] = std::move(discards);
  out["digests"] = std::move(digests);
  if (with_timestamp) out["generated_at"] = m.generated_at;
  return out;
}

Manifest run_pipeline(const PipelineConfig& config, ExtractionBackend& backend,
                      const PromptLibrary& prompts, const PipelineLog& log) {
  auto say = [&](const std::string& line) {
    if (log) log(line);
  };
  Manifest m;
  m.config = config_to_json(config);
  m.seed = config.seed;
  m.backend = backend.name();
  StageCounts& n = m.counts;

  std::string stage;

  struct Drafted {
    DecisionTree tree;
    std::vector<FactualInstance> factual;
    std::vector<CounterfactualInstance> counterfactual;
  };
  std::vector<Drafted> trees;

  try {
    stage = "curate";
    const std::vector<CorpusDocument> docs = load_corpus(config.corpus_dir);
    n.documents = docs.size();
    std::vector<GuidelineMeta> metas;
    for (const auto& d : docs) metas.push_back(d.meta);
    const std::vector<GuidelineMeta> kept = dedup_guidelines(metas);
    n.curated_documents = kept.size();
    for (const auto& d : docs) {
      if (std::none_of(kept.begin(), kept.end(), [&](const GuidelineMeta& k) {
            return k.guideline_id == d.meta.guideline_id;
          })) {
        m.discards.push_back({"curate", d.meta.guideline_id, "superseded by a more recent version"});
      }
    }
    say("curate: " + std::to_string(n.documents) + " documents, " +
        std::to_string(n.curated_documents) + " after dedup");

    std::set<std::string> seen_structures;
    for (const auto& doc : docs) {
      if (std::none_of(kept.begin(), kept.end(), [&](const GuidelineMeta& k) {
            return k.guideline_id == doc.meta.guideline_id;
          })) {
        continue;
      }
      stage = "chunk";
      const auto chunks =
          chunk_document(doc.meta.guideline_id, doc.text, config.soft_limit, config.max_chunks);
      n.chunks += chunks.size();
      std::size_t rec_index = 0;
      for (const auto& chunk : chunks) {
        if (chunk.overflow) ++n.overflow_chunks;
        stage = "extract";
        const ExtractionResult extracted = extract_recommendations(chunk, backend, prompts);
        n.raw_candidates += extracted.raw_count;
        n.dropped_non_actionable += extracted.dropped_non_actionable;
        n.dropped_duplicates += extracted.dropped_duplicates;
        n.candidates += extracted.candidates.size();
        say("extract " + chunk.chunk_id + ": " + std::to_string(extracted.candidates.size()) +
            " candidates");

        for (const auto& candidate : extracted.candidates) {
          stage = "draft";
          const std::string tree_id = doc.meta.guideline_id + "-r" + std::to_string(rec_index++);
          DraftResult draft =
              draft_tree(candidate, doc.meta.guideline_id, tree_id, backend, prompts);
          if (!draft.tree) {
            m.discards.push_back({"draft", tree_id, draft.discard_reason});
            say("draft " + tree_id + ": discarded");
            continue;
          }
          ++n.validated_recommendations;
          if (!seen_structures.insert(structure_key(*draft.tree)).second) {
            m.discards.push_back({"validate", tree_id, "structurally identical to an earlier tree"});
            continue;
          }
          trees.push_back(Drafted{std::move(*draft.tree), {}, {}});
        }
      }
    }
    n.validated_trees = trees.size();

    stage = "sample-factual";
    FactualConfig fcfg;
    fcfg.seed = config.seed;
    fcfg.per_path = config.per_path;
    fcfg.no_action_cap = config.no_action_cap;
    for (auto& d : trees) {
      d.factual = generate_factual_set(d.tree, fcfg).instances;
      n.factual_instances += d.factual.size();
    }

    stage = "sample-cf";
    CfConfig ccfg;
    ccfg.seed = config.seed;
    ccfg.hidden_count = config.hidden_count;
    ccfg.identifiable_only = config.identifiable_only;
    ccfg.per_tree = config.cf_per_tree;
    ccfg.draws_per_source = config.cf_draws_per_source;
    for (auto& d : trees) {
      if (d.tree.variables().size() < config.hidden_count + 2) {
        m.discards.push_back({"sample-cf", d.tree.id(), "too few variables for a counterfactual split"});
        continue;
      }
      CfSet set = generate_counterfactual_set(d.tree, d.factual, ccfg);
      n.counterfactual_candidates += set.stats.scenarios;
      n.counterfactual_retained += set.stats.changed;
      n.counterfactual_discarded_unchanged += set.stats.discarded_unchanged;
      n.counterfactual_discarded_unidentifiable += set.stats.discarded_unidentifiable;
      n.counterfactual_discarded_off_grid += set.stats.discarded_off_grid;
      d.counterfactual =
          balance_counterfactuals(std::move(set.instances), d.tree, config.no_action_cap, config.seed)
              .instances;
      n.counterfactual_instances += d.counterfactual.size();
    }

    if (config.verbalize) {
      stage = "verbalize";
      for (auto& d : trees) {
        for (auto& f : d.factual) f.rationale_text = verbalize_rationale(f, d.tree, backend, prompts);
        for (auto& c : d.counterfactual) {
          c.rationale_text = verbalize_rationale(c, d.tree, backend, prompts);
        }
      }
    }

    stage = "emit";
    fs::create_directories(config.out_dir);
    clear_outputs(config.out_dir);
    auto emit = [&](const std::string& rel, const std::string& bytes) {
      write_text_file(config.out_dir / rel, bytes);
      m.digests.emplace_back(rel, sha256_hex(bytes));
    };
    if (n.documents > 0) {
      std::vector<FactualInstance> all_f;
      std::vector<CounterfactualInstance> all_cf;
      for (const auto& d : trees) {
        all_f.insert(all_f.end(), d.factual.begin(), d.factual.end());
        all_cf.insert(all_cf.end(), d.counterfactual.begin(), d.counterfactual.end());
      }
      emit("counterfactual.jsonl", counterfactual_jsonl(all_cf, config.redact_gold));
      std::string discards;
      for (const auto& d : m.discards) discards += canonical_dump(discard_to_json(d)) + "\n";
      emit("discards.jsonl", discards);
      emit("factual.jsonl", factual_jsonl(all_f));
      std::vector<const DecisionTree*> sorted;
      for (const auto& d : trees) sorted.push_back(&d.tree);
      std::sort(sorted.begin(), sorted.end(),
                [](const DecisionTree* a, const DecisionTree* b) { return a->id() < b->id(); });
      for (const auto* t : sorted) emit("trees/" + t->id() + ".json", serialize_tree(*t) + "\n");
    }
    m.generated_at = timestamp_now();
    write_text_file(config.out_dir / "manifest.json", manifest_to_json(m).dump(2) + "\n");
  } catch (const BackendError& e) {
    throw PipelineError(stage, e.what(), m, true);
  } catch (const std::exception& e) {
    throw PipelineError(stage, e.what(), m);
  }
  return m;
}

}  // namespace guidex
