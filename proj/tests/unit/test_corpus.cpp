#include <gtest/gtest.h>

#include <fstream>

#include "guidex/corpus.hpp"
#include "guidex/error.hpp"
#include "guidex/io.hpp"
#include "support.hpp"

using namespace guidex;

namespace {

std::string paragraph(std::size_t words, const std::string& token = "w") {
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    out += token;
    out += (i % 17 == 16) ? "\n" : " ";
  }
  return out;
}

std::string document(const std::vector<std::size_t>& sizes) {
  std::string out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) out += "\n\n";
    out += paragraph(sizes[i], "p" + std::to_string(i));
  }
  return out;
}

std::vector<std::size_t> counts(const std::vector<Chunk>& chunks) {
  std::vector<std::size_t> out;
  for (const auto& c : chunks) out.push_back(c.word_count);
  return out;
}

GuidelineMeta meta(const std::string& id, const std::string& disease, const std::string& date,
                   const std::string& age = "adult") {
  GuidelineMeta m;
  m.guideline_id = id;
  m.source_org = "org";
  m.disease_or_drug = disease;
  m.age_group = age;
  m.race = "all";
  m.gender = "all";
  m.publication_date = Date::parse(date);
  return m;
}

}  // namespace

TEST(CountWords, Whitespace) {
  EXPECT_EQ(count_words(""), 0u);
  EXPECT_EQ(count_words("  a\tb\n\nc  "), 3u);
}

TEST(ChunkDocument, ThreeParagraphsOfTwoThousand) {
  const auto chunks = chunk_document("g", document({2000, 2000, 2000}));
  EXPECT_EQ(counts(chunks), (std::vector<std::size_t>{4000, 2000}));
  EXPECT_EQ(chunks[0].chunk_id, "g#0");
  EXPECT_EQ(chunks[1].chunk_id, "g#1");
  EXPECT_FALSE(chunks[0].overflow || chunks[1].overflow);
}

TEST(ChunkDocument, OversizedParagraphStaysWhole) {
  const auto chunks = chunk_document("g", document({10000}));
  ASSERT_EQ(chunks.size(), 1u);
  EXPECT_EQ(chunks[0].word_count, 10000u);
  EXPECT_TRUE(chunks[0].overflow);
}

TEST(ChunkDocument, NineParagraphsOverflowLastChunk) {
  const auto chunks = chunk_document("g", document(std::vector<std::size_t>(9, 2000)));
  EXPECT_EQ(counts(chunks), (std::vector<std::size_t>{4000, 4000, 4000, 6000}));
  EXPECT_FALSE(chunks[2].overflow);
  EXPECT_TRUE(chunks[3].overflow);
}

TEST(ChunkDocument, ConcatenationReproducesParagraphs) {
  const std::string doc = "\n\n" + document({300, 50, 4400, 10, 7}) + "\n\n\n";
  const auto chunks = chunk_document("g", doc, 4500, 4);
  std::string joined;
  std::size_t total = 0;
  for (const auto& c : chunks) {
    joined += c.text + " ";
    total += c.word_count;
    EXPECT_EQ(count_words(c.text), c.word_count);
  }
  EXPECT_EQ(total, count_words(doc));
  EXPECT_EQ(count_words(joined), count_words(doc));
  // Paragraph order survives: each chunk starts where the previous ended.
  std::size_t from = 0;
  for (const auto& c : chunks) {
    const auto at = doc.find(c.text, from);
    ASSERT_NE(at, std::string::npos);
    from = at + c.text.size();
  }
}

TEST(ChunkDocument, EmptyAndErrors) {
  EXPECT_TRUE(chunk_document("g", "\n \n").empty());
  EXPECT_THROW(chunk_document("g", "x", 10, 0), Error);
  EXPECT_EQ(chunk_document("g", document({5, 5, 5}), 4, 1).size(), 1u);
}

TEST(Dedup, KeepsMostRecentCaseFolded) {
  const std::vector<GuidelineMeta> in = {
      meta("statin-00", "Hyperlipidemia", "2019-01-01"),
      meta("htn-01", "hypertension", "2021-03-15"),
      meta("statin-01", " hyperlipidemia ", "2022-06-01", "Adult"),
  };
  const auto out = dedup_guidelines(in);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].guideline_id, "htn-01");
  EXPECT_EQ(out[1].guideline_id, "statin-01");
  EXPECT_EQ(dedup_guidelines(out), out);
}

TEST(Dedup, TieBrokenByGuidelineId) {
  const auto out = dedup_guidelines({meta("b", "x", "2020-01-01"), meta("a", "x", "2020-01-01")});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].guideline_id, "b");
}

TEST(Dedup, DifferentPopulationsKept) {
  EXPECT_EQ(dedup_guidelines({meta("a", "x", "2020-01-01", "adult"), meta("b", "x", "2021-01-01", "child")}).size(),
            2u);
}

TEST(LoadCorpus, FixtureCorpus) {
  const auto docs = load_corpus(guidex::testing::fixture_dir() / "corpus");
  ASSERT_EQ(docs.size(), 5u);
  EXPECT_EQ(docs[0].meta.guideline_id, "statin-00");
  EXPECT_FALSE(docs[1].text.empty());
  std::vector<GuidelineMeta> metas;
  for (const auto& d : docs) metas.push_back(d.meta);
  EXPECT_EQ(dedup_guidelines(metas).size(), 4u);
}

TEST(LoadCorpus, MissingTextIsAnError) {
  guidex::testing::TempDir dir("corpus");
  write_text_file(dir.path() / "metadata.jsonl", canonical_dump(meta_to_json(meta("g", "x", "2020-01-01"))) + "\n");
  EXPECT_THROW(load_corpus(dir.path()), Error);
  write_text_file(dir.path() / "g.txt", "text");
  EXPECT_EQ(load_corpus(dir.path()).size(), 1u);
}

TEST(MetaJson, RoundTrip) {
  const auto m = meta("g", "x", "2020-01-01");
  EXPECT_EQ(meta_from_json(meta_to_json(m)), m);
}
