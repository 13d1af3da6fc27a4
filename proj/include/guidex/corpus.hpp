#pragma once

// Corpus-side curation: paragraph chunking and metadata deduplication.

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "guidex/canonical_json.hpp"
#include "guidex/model.hpp"

namespace guidex {

struct Chunk {
  std::string chunk_id;  // <guideline_id>#<k>
  std::string text;
  std::size_t word_count = 0;
  bool overflow = false;

  bool operator==(const Chunk&) const = default;
};

inline constexpr std::size_t kDefaultSoftLimit = 4500;
inline constexpr std::size_t kDefaultMaxChunks = 4;

/// Maximal runs of non-whitespace characters.
std::size_t count_words(std::string_view text);

/// Paragraphs are runs of non-blank lines. Greedy fill: a paragraph joins the
/// open chunk when it is empty or stays within `soft_limit`; once
/// `max_chunks - 1` chunks are sealed the rest goes to the last chunk, which
/// is flagged `overflow` if it exceeds the limit.
std::vector<Chunk> chunk_document(std::string_view guideline_id, std::string_view doc_text,
                                  std::size_t soft_limit = kDefaultSoftLimit,
                                  std::size_t max_chunks = kDefaultMaxChunks);

/// Case-folded, whitespace-normalized (disease_or_drug, age_group, race, gender).
std::string dedup_key(const GuidelineMeta& meta);

/// Keeps the record with the greatest (publication_date, guideline_id) per
/// key, preserving input order among survivors.
std::vector<GuidelineMeta> dedup_guidelines(const std::vector<GuidelineMeta>& metas);

GuidelineMeta meta_from_json(const Json& record);
Json meta_to_json(const GuidelineMeta& meta);
Json chunk_to_json(const Chunk& chunk);

struct CorpusDocument {
  GuidelineMeta meta;
  std::string text;
};

/// Reads `metadata.jsonl` and the matching `<guideline_id>.txt` files.
std::vector<CorpusDocument> load_corpus(const std::filesystem::path& dir);

}  // namespace guidex
