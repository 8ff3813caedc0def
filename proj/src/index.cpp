#include "anonsearch/index.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "anonsearch/errors.hpp"
#include "anonsearch/textio.hpp"

namespace anonsearch {

std::vector<std::string> tokenize(std::string_view text) {
  const std::string lowered = lowercase_utf8(text);
  std::vector<std::string> tokens;
  std::string current;

  std::size_t i = 0;
  while (i < lowered.size()) {
    const std::size_t start = i;
    bool valid = false;
    const char32_t cp = decode_utf8(lowered, i, valid);
    if (valid && is_word_codepoint(cp)) {
      current.append(lowered, start, i - start);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool DocSet::contains(std::uint32_t id) const {
  return std::binary_search(ids.begin(), ids.end(), id);
}

DocSet DocSet::of(std::vector<std::uint32_t> raw) {
  std::sort(raw.begin(), raw.end());
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
  return DocSet{std::move(raw)};
}

DocSet intersect(const DocSet& a, const DocSet& b) {
  DocSet out;
  std::set_intersection(a.ids.begin(), a.ids.end(), b.ids.begin(), b.ids.end(),
                        std::back_inserter(out.ids));
  return out;
}

DocSet unite(const DocSet& a, const DocSet& b) {
  DocSet out;
  std::set_union(a.ids.begin(), a.ids.end(), b.ids.begin(), b.ids.end(),
                 std::back_inserter(out.ids));
  return out;
}

std::size_t intersection_size(const DocSet& a, const DocSet& b) {
  std::size_t count = 0;
  auto ia = a.ids.begin();
  auto ib = b.ids.begin();
  while (ia != a.ids.end() && ib != b.ids.end()) {
    if (*ia < *ib) ++ia;
    else if (*ib < *ia) ++ib;
    else { ++count; ++ia; ++ib; }
  }
  return count;
}

InvertedIndex InvertedIndex::build(const std::vector<RawDoc>& docs) {
  InvertedIndex index;
  index.external_ids_.reserve(docs.size());

  std::unordered_set<std::string> seen;
  for (const auto& doc : docs) {
    if (!seen.insert(doc.id).second) {
      throw ParseError("duplicate document id: " + doc.id);
    }
    index.external_ids_.push_back(doc.id);
  }

  // Per-document token sets, tokenized in parallel.
  std::vector<std::vector<std::string>> doc_tokens(docs.size());
  const std::int64_t n = static_cast<std::int64_t>(docs.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < n; ++i) {
    auto tokens = tokenize(docs[static_cast<std::size_t>(i)].text);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    doc_tokens[static_cast<std::size_t>(i)] = std::move(tokens);
  }

  // Serial merge in ingestion order keeps posting lists ascending.
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (auto& token : doc_tokens[i]) {
      index.postings_[std::move(token)].ids.push_back(
          static_cast<std::uint32_t>(i));
    }
  }
  return index;
}

InvertedIndex InvertedIndex::build_from_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open corpus file: " + path);

  std::vector<RawDoc> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("corpus line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("text")) {
      throw ParseError("corpus line " + std::to_string(line_no) +
                       ": expected {\"id\", \"text\"}");
    }
    docs.push_back(RawDoc{obj["id"].get<std::string>(),
                          obj["text"].get<std::string>()});
  }
  return build(docs);
}

const DocSet& InvertedIndex::retrieve(std::string_view term) const {
  static const DocSet kEmpty{};
  auto it = postings_.find(std::string(term));
  return it == postings_.end() ? kEmpty : it->second;
}

DocSet InvertedIndex::retrieve_conjunctive(
    std::span<const std::string> terms) const {
  if (terms.empty()) {
    throw std::invalid_argument("retrieve_conjunctive: empty term list");
  }
  DocSet result = retrieve(terms[0]);
  for (std::size_t i = 1; i < terms.size() && !result.empty(); ++i) {
    result = intersect(result, retrieve(terms[i]));
  }
  return result;
}

void InvertedIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write index file: " + path);
  out << "ANONIDX 1 " << doc_count() << "\n";
  for (const auto& [token, docs] : postings_) {
    out << token << '\t';
    for (std::size_t i = 0; i < docs.ids.size(); ++i) {
      if (i) out << ',';
      out << docs.ids[i];
    }
    out << '\n';
  }
  out << "---\n";
  for (const auto& ext : external_ids_) {
    out << nlohmann::json{{"id", ext}}.dump() << "\n";
  }
  if (!out) throw ParseError("failed writing index file: " + path);
}

InvertedIndex InvertedIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open index file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw ParseError("index file is empty: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::size_t doc_count = 0;
  {
    std::string_view header(line);
    if (!header.starts_with("ANONIDX 1 ")) {
      throw ParseError("bad index header: " + line);
    }
    std::string_view count = header.substr(10);
    auto res = std::from_chars(count.data(), count.data() + count.size(),
                               doc_count);
    if (res.ec != std::errc() || res.ptr != count.data() + count.size()) {
      throw ParseError("bad index header count: " + line);
    }
  }

  InvertedIndex index;
  std::size_t line_no = 1;
  bool saw_separator = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line == "---") {
      saw_separator = true;
      break;
    }
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError("index line " + std::to_string(line_no) +
                       ": missing tab");
    }
    std::string token = line.substr(0, tab);
    DocSet docs;
    std::size_t pos = tab + 1;
    while (pos <= line.size()) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string::npos) comma = line.size();
      std::uint32_t id = 0;
      auto res = std::from_chars(line.data() + pos, line.data() + comma, id);
      if (res.ec != std::errc() || res.ptr != line.data() + comma) {
        throw ParseError("index line " + std::to_string(line_no) +
                         ": bad posting id");
      }
      if (id >= doc_count) {
        throw ParseError("index line " + std::to_string(line_no) +
                         ": posting id out of range");
      }
      if (!docs.ids.empty() && docs.ids.back() >= id) {
        throw ParseError("index line " + std::to_string(line_no) +
                         ": posting list not strictly ascending");
      }
      docs.ids.push_back(id);
      pos = comma + 1;
    }
    index.postings_.emplace(std::move(token), std::move(docs));
  }
  if (!saw_separator) throw ParseError("index file missing --- separator");

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("index doc line " + std::to_string(line_no) + ": " +
                       e.what());
    }
    index.external_ids_.push_back(obj.at("id").get<std::string>());
  }
  if (index.external_ids_.size() != doc_count) {
    throw ParseError("index document table size mismatch");
  }
  return index;
}

}  // namespace anonsearch
