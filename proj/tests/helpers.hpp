#pragma once

// Shared fixtures and independent oracle implementations used across the
// test suites. Oracles deliberately avoid the library's search/index
// machinery: nearest-neighbor ranking is a full scan plus a stable sort,
// retrieval is a per-document containment scan.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "anonsearch/embedding.hpp"
#include "anonsearch/index.hpp"
#include "anonsearch/rng.hpp"

namespace testutil {

using anonsearch::DocSet;
using anonsearch::EmbeddingStore;
using anonsearch::RawDoc;
using anonsearch::Rng;

inline std::string synth_token(std::size_t i) {
  std::string t = "w";
  t += std::to_string(i);
  return t;
}

// Random store with `count` terms of dimension `dim`, components in [-1, 1).
inline EmbeddingStore random_store(std::size_t count, std::size_t dim,
                                   std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::pair<std::string, std::vector<float>>> rows;
  rows.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<float> v(dim);
    for (auto& x : v) x = static_cast<float>(2.0 * rng.uniform() - 1.0);
    rows.emplace_back(synth_token(i), std::move(v));
  }
  return EmbeddingStore::from_rows(dim, rows);
}

// Oracle cosine: same formula as production (dot over ascending index,
// divide by the norm product) so that ranking comparisons are exact.
inline double oracle_cosine(std::span<const double> q,
                            std::span<const float> v) {
  double dot = 0.0, qq = 0.0, vv = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    dot += q[j] * static_cast<double>(v[j]);
    qq += q[j] * q[j];
    vv += static_cast<double>(v[j]) * static_cast<double>(v[j]);
  }
  const double sim = dot / (std::sqrt(qq) * std::sqrt(vv));
  return std::clamp(sim, -1.0, 1.0);
}

// Brute-force k-NN: score every term, stable-sort by (similarity desc,
// term asc), take the head.
inline std::vector<std::pair<std::string, double>> oracle_knn(
    const EmbeddingStore& store, std::span<const double> query, std::size_t n,
    const std::set<std::string>& exclude) {
  std::vector<std::pair<std::string, double>> scored;
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (exclude.contains(store.term(i))) continue;
    scored.emplace_back(store.term(i),
                        oracle_cosine(query, store.vector_at(i)));
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  scored.resize(std::min(n, scored.size()));
  return scored;
}

// Naive retrieval: tokenizes every document and scans for containment.
inline DocSet oracle_retrieve(const std::vector<RawDoc>& docs,
                              const std::string& term) {
  DocSet out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto tokens = anonsearch::tokenize(docs[i].text);
    if (std::find(tokens.begin(), tokens.end(), term) != tokens.end()) {
      out.ids.push_back(static_cast<std::uint32_t>(i));
    }
  }
  return out;
}

inline DocSet oracle_retrieve_conjunctive(const std::vector<RawDoc>& docs,
                                          const std::vector<std::string>& terms) {
  DocSet out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto tokens = anonsearch::tokenize(docs[i].text);
    bool all = true;
    for (const auto& term : terms) {
      if (std::find(tokens.begin(), tokens.end(), term) == tokens.end()) {
        all = false;
        break;
      }
    }
    if (all) out.ids.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

// Membership-counting reconstruction: a document qualifies when at least l
// of the term document sets contain it.
inline DocSet oracle_reconstruct(std::size_t doc_count,
                                 const std::vector<DocSet>& term_docs, int l) {
  DocSet out;
  for (std::uint32_t id = 0; id < doc_count; ++id) {
    int hits = 0;
    for (const auto& docs : term_docs) {
      if (docs.contains(id)) ++hits;
    }
    if (hits >= l) out.ids.push_back(id);
  }
  return out;
}

// Random corpus of `doc_count` documents over a vocabulary of `vocab` synth
// tokens, `len` tokens per document.
inline std::vector<RawDoc> random_corpus(std::size_t doc_count,
                                         std::size_t vocab, std::size_t len,
                                         std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RawDoc> docs;
  docs.reserve(doc_count);
  for (std::size_t d = 0; d < doc_count; ++d) {
    std::string text;
    for (std::size_t p = 0; p < len; ++p) {
      if (p) text += ' ';
      text += synth_token(rng.below(vocab));
    }
    docs.push_back(RawDoc{"doc" + std::to_string(d), std::move(text)});
  }
  return docs;
}

}  // namespace testutil
