#include "anonsearch/reconstruct.hpp"

#include <algorithm>
#include <stdexcept>

#include "anonsearch/errors.hpp"

namespace anonsearch {

DocSet reconstruct_results(const InvertedIndex& index,
                           std::span<const std::string> related, int l) {
  if (related.empty()) {
    throw std::invalid_argument("reconstruct_results: empty related list");
  }
  if (l < 1 || static_cast<std::size_t>(l) > related.size()) {
    throw std::invalid_argument("reconstruct_results: l out of range");
  }

  // Gather all posting ids, then count multiplicity in one sorted pass.
  std::vector<std::uint32_t> all;
  for (const auto& term : related) {
    const auto& docs = index.retrieve(term);
    all.insert(all.end(), docs.ids.begin(), docs.ids.end());
  }
  std::sort(all.begin(), all.end());

  DocSet out;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j] == all[i]) ++j;
    if (j - i >= static_cast<std::size_t>(l)) out.ids.push_back(all[i]);
    i = j;
  }
  return out;
}

double anonymity(const EmbeddingStore& store, const std::string& query,
                 std::span<const std::string> transmitted) {
  if (transmitted.empty()) {
    throw std::invalid_argument("anonymity: empty transmitted list");
  }
  const auto qv = store.vector_at(store.index_of(query));
  double total = 0.0;
  for (const auto& term : transmitted) {
    auto idx = store.find(term);
    if (!idx) throw NotFoundError("anonymity: term not in vocabulary: " + term);
    total += cosine(store.vector_at(*idx), qv);
  }
  return 1.0 - total / static_cast<double>(transmitted.size());
}

std::optional<double> reconstructability(const InvertedIndex& index,
                                         const std::string& query,
                                         const DocSet& reconstructed) {
  const DocSet& truth = index.retrieve(query);
  if (truth.empty()) return std::nullopt;
  return static_cast<double>(intersection_size(truth, reconstructed)) /
         static_cast<double>(truth.size());
}

}  // namespace anonsearch
