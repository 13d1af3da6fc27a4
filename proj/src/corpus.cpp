#include "guidex/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "guidex/error.hpp"
#include "guidex/io.hpp"
#include "guidex/records.hpp"

namespace guidex {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

struct Span {
  std::size_t begin;
  std::size_t end;
};

std::vector<Span> paragraph_spans(std::string_view text) {
  std::vector<Span> out;
  std::size_t pos = 0;
  std::optional<Span> open;
  while (pos <= text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, nl - pos);
    const bool blank = std::all_of(line.begin(), line.end(), is_space);
    if (blank) {
      if (open) out.push_back(*open);
      open.reset();
    } else if (open) {
      open->end = nl;
    } else {
      open = Span{pos, nl};
    }
    pos = nl + 1;
  }
  if (open) out.push_back(*open);
  return out;
}

}  // namespace

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

std::vector<Chunk> chunk_document(std::string_view guideline_id, std::string_view doc_text,
                                  std::size_t soft_limit, std::size_t max_chunks) {
  if (max_chunks == 0) throw Error("max_chunks must be positive");
  std::vector<Chunk> chunks;
  std::optional<Span> open;
  std::size_t open_words = 0;

  auto seal = [&] {
    Chunk c;
    c.chunk_id = std::string(guideline_id) + "#" + std::to_string(chunks.size());
    c.text = std::string(doc_text.substr(open->begin, open->end - open->begin));
    c.word_count = open_words;
    chunks.push_back(std::move(c));
    open.reset();
    open_words = 0;
  };

  for (const Span& para : paragraph_spans(doc_text)) {
    const std::size_t words = count_words(doc_text.substr(para.begin, para.end - para.begin));
    const bool final_chunk = chunks.size() + 1 >= max_chunks;
    if (open && !final_chunk && open_words + words > soft_limit) seal();
    if (open) {
      open->end = para.end;
    } else {
      open = para;
    }
    open_words += words;
  }
  if (open) seal();
  if (!chunks.empty() && chunks.back().word_count > soft_limit) chunks.back().overflow = true;
  return chunks;
}

std::string dedup_key(const GuidelineMeta& meta) {
  auto norm = [](std::string_view s) {
    std::string out;
    bool pending = false;
    for (char c : s) {
      if (is_space(c)) {
        pending = !out.empty();
        continue;
      }
      if (pending) out += ' ';
      pending = false;
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
  };
  return norm(meta.disease_or_drug) + '\x1f' + norm(meta.age_group) + '\x1f' + norm(meta.race) +
         '\x1f' + norm(meta.gender);
}

std::vector<GuidelineMeta> dedup_guidelines(const std::vector<GuidelineMeta>& metas) {
  std::map<std::string, std::size_t> best;
  for (std::size_t i = 0; i < metas.size(); ++i) {
    auto [it, inserted] = best.emplace(dedup_key(metas[i]), i);
    if (inserted) continue;
    const auto& cur = metas[it->second];
    if (std::tie(metas[i].publication_date, metas[i].guideline_id) >
        std::tie(cur.publication_date, cur.guideline_id)) {
      it->second = i;
    }
  }
  std::set<std::size_t> keep;
  for (const auto& [_, i] : best) keep.insert(i);
  std::vector<GuidelineMeta> out;
  for (std::size_t i : keep) out.push_back(metas[i]);
  return out;
}

GuidelineMeta meta_from_json(const Json& record) {
  auto text = [&](const char* key) {
    auto it = record.find(key);
    if (it == record.end() || !it->is_string()) {
      throw ParseError(ParseError::Kind::schema, key, "expected string");
    }
    return it->get<std::string>();
  };
  if (!record.is_object()) throw ParseError(ParseError::Kind::schema, "", "expected object");
  GuidelineMeta meta;
  meta.guideline_id = text("guideline_id");
  meta.source_org = record.contains("source_org") ? text("source_org") : "";
  meta.disease_or_drug = text("disease_or_drug");
  meta.age_group = text("age_group");
  meta.race = text("race");
  meta.gender = text("gender");
  try {
    meta.publication_date = Date::parse(text("publication_date"));
  } catch (const ModelError& e) {
    throw ParseError(ParseError::Kind::schema, "publication_date", e.what());
  }
  return meta;
}

Json meta_to_json(const GuidelineMeta& meta) {
  Json out = Json::object();
  out["guideline_id"] = meta.guideline_id;
  out["source_org"] = meta.source_org;
  out["disease_or_drug"] = meta.disease_or_drug;
  out["age_group"] = meta.age_group;
  out["race"] = meta.race;
  out["gender"] = meta.gender;
  out["publication_date"] = meta.publication_date.to_string();
  return out;
}

Json chunk_to_json(const Chunk& chunk) {
  Json out = Json::object();
  out["chunk_id"] = chunk.chunk_id;
  out["word_count"] = chunk.word_count;
  out["overflow"] = chunk.overflow;
  out["text"] = chunk.text;
  return out;
}

std::vector<CorpusDocument> load_corpus(const std::filesystem::path& dir) {
  const auto meta_path = dir / "metadata.jsonl";
  if (!std::filesystem::exists(meta_path)) {
    throw Error("corpus directory '" + dir.string() + "' has no metadata.jsonl");
  }
  std::vector<CorpusDocument> docs;
  std::set<std::string> ids;
  std::size_t line = 0;
  for (const auto& record : parse_jsonl(read_text_file(meta_path))) {
    ++line;
    GuidelineMeta meta;
    try {
      meta = meta_from_json(record);
    } catch (const ParseError& e) {
      throw Error("metadata.jsonl record " + std::to_string(line) + ": " + e.what());
    }
    if (!ids.insert(meta.guideline_id).second) {
      throw Error("duplicate guideline_id '" + meta.guideline_id + "' in metadata.jsonl");
    }
    std::string text = read_text_file(dir / (meta.guideline_id + ".txt"));
    docs.push_back(CorpusDocument{std::move(meta), std::move(text)});
  }
  return docs;
}

}  // namespace guidex
