#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "anonsearch/embedding.hpp"
#include "anonsearch/rng.hpp"

namespace anonsearch {

struct AttackParams {
  int k = 1;
  int max_iterations = 100;
  double tolerance = 1e-6;  // centroid movement below this stops iterating
  std::uint64_t seed = 0;
  bool conservative = false;  // guess from every cluster, not just the best
};

// One k-means clustering of the received terms. Clusters are indexed by
// seeding order; members are point indices in ascending order.
struct KMeansResult {
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<std::vector<double>> centroids;
  // Objective (sum of squared distances to assigned centroids) after each
  // assignment step; must be non-increasing.
  std::vector<double> objective_trace;
};

// Spherical treatment of "cosine" k-means: points are L2-normalized and
// clustered with plain Euclidean k-means (k-means++ seeding, Lloyd updates).
// Empty clusters are repaired by stealing the globally farthest point.
// Throws std::invalid_argument when k exceeds the number of terms.
KMeansResult kmeans_cluster(const EmbeddingStore& store,
                            std::span<const std::string> terms,
                            const AttackParams& params, Rng& rng);

// Mean pairwise cosine similarity over distinct unordered pairs.
// Throws std::domain_error for clusters smaller than 2.
double coherence(const EmbeddingStore& store,
                 std::span<const std::string> cluster);

struct AttackOutcome {
  std::vector<std::string> guesses;  // 1 for standard, k for conservative
  bool hit = false;
  double chosen_cluster_coherence = 0.0;
  std::vector<double> per_cluster_coherence;  // -inf marks singletons
  std::vector<double> objective_trace;        // from the underlying k-means
};

// Clusters the received terms, scores cluster coherence (singletons get
// -inf), and guesses the vocabulary term nearest each relevant centroid.
// `truth` is the hidden query, supplied by the harness for scoring only; the
// attacker's computation never reads it.
AttackOutcome attack_guess(const EmbeddingStore& store,
                           std::span<const std::string> received,
                           const AttackParams& params, const std::string& truth,
                           Rng& rng);

// Fraction of outcomes with hit = true; throws on an empty list.
double hit_rate(std::span<const AttackOutcome> outcomes);

}  // namespace anonsearch
