#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace anonsearch {

// Lowercases the text and splits on every maximal run of non-alphanumeric
// code points. No stemming, no stopword removal. The same tokenizer is used
// for indexing and for query terms.
std::vector<std::string> tokenize(std::string_view text);

// Raw corpus document as read from JSON Lines input.
struct RawDoc {
  std::string id;    // external id, unique per corpus
  std::string text;  // UTF-8
};

// Sorted duplicate-free set of internal document ids.
struct DocSet {
  std::vector<std::uint32_t> ids;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  bool contains(std::uint32_t id) const;
  bool operator==(const DocSet&) const = default;

  // Normalizes arbitrary id lists into the sorted unique representation.
  static DocSet of(std::vector<std::uint32_t> raw);
};

DocSet intersect(const DocSet& a, const DocSet& b);
DocSet unite(const DocSet& a, const DocSet& b);
std::size_t intersection_size(const DocSet& a, const DocSet& b);

// Token -> ascending posting lists over an ingested corpus. Internal ids are
// dense 0..N-1 in ingestion order. Immutable once built; safe for concurrent
// reads.
class InvertedIndex {
 public:
  // Tokenization runs across OpenMP threads; posting assembly is a single
  // serial merge, so the result is independent of the thread count.
  // Throws ParseError on a duplicate external id (naming the id).
  static InvertedIndex build(const std::vector<RawDoc>& docs);

  // Reads a JSON Lines corpus: one {"id": ..., "text": ...} object per line.
  static InvertedIndex build_from_jsonl(const std::string& path);

  std::size_t doc_count() const { return external_ids_.size(); }
  const std::string& external_id(std::uint32_t internal) const {
    return external_ids_[internal];
  }

  // D(term): posting list for the token, empty set if unindexed.
  const DocSet& retrieve(std::string_view term) const;

  // Documents containing every term. Throws std::invalid_argument on an
  // empty term list. Any unindexed term yields the empty set.
  DocSet retrieve_conjunctive(std::span<const std::string> terms) const;

  // Single-file persistence:
  //   ANONIDX 1 <doc_count>
  //   <token>\t<comma-separated ids>     (tokens in ascending order)
  //   ---
  //   {"id":"..."}                       (one JSON object per document)
  void save(const std::string& path) const;
  static InvertedIndex load(const std::string& path);

  const std::map<std::string, DocSet>& postings() const { return postings_; }

 private:
  std::map<std::string, DocSet> postings_;
  std::vector<std::string> external_ids_;
};

}  // namespace anonsearch
