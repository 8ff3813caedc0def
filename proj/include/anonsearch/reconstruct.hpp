#pragma once

#include <optional>
#include <span>
#include <string>

#include "anonsearch/embedding.hpp"
#include "anonsearch/index.hpp"

namespace anonsearch {

struct MetricsRecord {
  double alpha = 0.0;               // anonymity, in [0, 2]
  std::optional<double> rho;        // reconstructability; empty when |D(A)| = 0
  std::size_t ground_truth_size = 0;
  std::size_t reconstructed_size = 0;
};

// D'(A): documents retrieved by at least l of the related terms. l = 1 is the
// plain union, l = |related| the intersection. Throws std::invalid_argument
// when related is empty or l is outside [1, |related|].
DocSet reconstruct_results(const InvertedIndex& index,
                           std::span<const std::string> related, int l);

// alpha = 1 - mean cosine(v(A), v(q)) over the transmitted terms. Throws on
// an empty list and names any out-of-vocabulary token.
double anonymity(const EmbeddingStore& store, const std::string& query,
                 std::span<const std::string> transmitted);

// rho = |D(A) n D'(A)| / |D(A)|, or nullopt when D(A) is empty.
std::optional<double> reconstructability(const InvertedIndex& index,
                                         const std::string& query,
                                         const DocSet& reconstructed);

}  // namespace anonsearch
