#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "anonsearch/embedding.hpp"
#include "anonsearch/rng.hpp"

namespace anonsearch {

struct DecomposeParams {
  int n_related = 10;
  int m_distractors = 0;
  double sigma = 0.0;
  int pool_size = 2000;            // initial distractor candidate count
  double removal_fraction = 0.10;  // similarity purge per iteration, in (0,1)
  std::uint64_t seed = 0;
};

// Original query A, its noisy related terms, its distractors, and the
// shuffled order in which the n+m terms would be transmitted. The original
// never appears in either list; the lists are disjoint and duplicate-free.
struct DecomposedQuery {
  std::string original;
  std::vector<std::string> related;
  std::vector<std::string> distractors;
  std::vector<std::string> transmission_order;
};

// One hyperplane iteration of the distractor selection, recorded so tests
// can replay the identical trace through an independent oracle.
struct HyperplaneStep {
  std::vector<double> normal;        // unit normal h
  std::vector<std::string> kept;     // candidate set after this iteration
  std::vector<std::string> purged;   // removed as too similar to A, in purge order
  std::vector<std::string> discarded;  // the smaller side, dropped wholesale
};

struct DistractorTrace {
  std::vector<std::string> pool;  // initial candidate sample, in draw order
  std::vector<HyperplaneStep> steps;
  std::vector<std::string> backfilled;
};

// Top-n terms by cosine similarity to v(A) + theta, excluding A, where theta
// is one fresh Normal(0, sigma^2 I) draw from `rng`. If `theta_out` is
// non-null the sampled noise vector is copied there.
std::vector<std::string> related_terms(const EmbeddingStore& store,
                                       const std::string& query, int n,
                                       const NoiseSpec& noise, Rng& rng,
                                       std::vector<double>* theta_out = nullptr);

// Iterated random-hyperplane distractor selection:
//   1. draw `pool_size` candidates uniformly, excluding A and `forbidden`;
//   2. repeatedly split the candidates by a random hyperplane through v(A),
//      keep the larger side, and purge its ceil(removal_fraction * size)
//      members most cosine-similar to v(A);
//   3. stop once at most m candidates remain, backfilling from the most
//      recently purged terms (least similar first) when fewer than m remain.
// Returns exactly m terms, least similar to A first.
std::vector<std::string> distractor_terms(const EmbeddingStore& store,
                                          const std::string& query, int m,
                                          const DecomposeParams& params,
                                          const std::set<std::string>& forbidden,
                                          Rng& rng,
                                          DistractorTrace* trace = nullptr);

// Full decomposition: related terms, then distractors (forbidden = related
// plus A), then a uniform shuffle of the union for transmission.
DecomposedQuery decompose(const EmbeddingStore& store, const std::string& query,
                          const DecomposeParams& params, Rng& rng);

// Convenience overload seeding the stream from params.seed.
DecomposedQuery decompose(const EmbeddingStore& store, const std::string& query,
                          const DecomposeParams& params);

}  // namespace anonsearch
