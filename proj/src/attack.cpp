#include "anonsearch/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace anonsearch {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

KMeansResult kmeans_cluster(const EmbeddingStore& store,
                            std::span<const std::string> terms,
                            const AttackParams& params, Rng& rng) {
  const std::size_t n = terms.size();
  const std::size_t k = static_cast<std::size_t>(params.k);
  if (params.k <= 0) throw std::invalid_argument("kmeans: k must be positive");
  if (k > n) throw std::invalid_argument("kmeans: k exceeds term count");

  const std::size_t dim = store.dim();
  std::vector<std::vector<double>> points(n, std::vector<double>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t idx = store.index_of(terms[i]);
    const auto v = store.vector_at(idx);
    const double inv = 1.0 / store.norm_at(idx);
    for (std::size_t j = 0; j < dim; ++j) {
      points[i][j] = static_cast<double>(v[j]) * inv;
    }
  }

  // k-means++ seeding.
  std::vector<std::vector<double>> centroids;
  centroids.reserve(k);
  std::vector<bool> is_center(n, false);
  {
    const std::size_t first = rng.below(n);
    centroids.push_back(points[first]);
    is_center[first] = true;
    std::vector<double> d2(n);
    while (centroids.size() < k) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : centroids) best = std::min(best, sq_dist(points[i], c));
        d2[i] = is_center[i] ? 0.0 : best;
        total += d2[i];
      }
      std::size_t chosen = n;
      if (total > 0.0) {
        const double r = rng.uniform() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          acc += d2[i];
          if (acc > r) {
            chosen = i;
            break;
          }
        }
        if (chosen == n) {  // fp edge: r landed on the accumulated total
          for (std::size_t i = n; i-- > 0;) {
            if (d2[i] > 0.0) {
              chosen = i;
              break;
            }
          }
        }
      }
      if (chosen == n) {
        // All remaining points coincide with chosen centers; take the lowest
        // index not yet used so seeding stays deterministic.
        for (std::size_t i = 0; i < n; ++i) {
          if (!is_center[i]) {
            chosen = i;
            break;
          }
        }
      }
      centroids.push_back(points[chosen]);
      is_center[chosen] = true;
    }
  }

  KMeansResult result;
  std::vector<std::size_t> assign(n, 0);
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    // Assignment: nearest centroid, ties to the lowest cluster index.
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = sq_dist(points[i], centroids[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = sq_dist(points[i], centroids[c]);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      assign[i] = best;
      sizes[best]++;
    }

    // Repair empty clusters: steal the globally farthest point and move the
    // empty centroid onto it, which keeps the objective non-increasing.
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      std::size_t worst = n;
      double worst_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[assign[i]] < 2) continue;
        const double d = sq_dist(points[i], centroids[assign[i]]);
        if (d > worst_d) {
          worst_d = d;
          worst = i;
        }
      }
      if (worst == n) break;  // nothing stealable: n == k handled by seeding
      sizes[assign[worst]]--;
      assign[worst] = c;
      sizes[c] = 1;
      centroids[c] = points[worst];
    }

    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      objective += sq_dist(points[i], centroids[assign[i]]);
    }
    result.objective_trace.push_back(objective);

    // Update step.
    std::vector<std::vector<double>> next(k, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < dim; ++j) next[assign[i]][j] += points[i][j];
    }
    double movement = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t j = 0; j < dim; ++j) {
        next[c][j] /= static_cast<double>(sizes[c]);
      }
      movement = std::max(movement, std::sqrt(sq_dist(next[c], centroids[c])));
    }
    centroids = std::move(next);
    if (movement < params.tolerance) break;
  }

  result.centroids = std::move(centroids);
  result.clusters.assign(k, {});
  for (std::size_t i = 0; i < n; ++i) result.clusters[assign[i]].push_back(i);
  return result;
}

double coherence(const EmbeddingStore& store,
                 std::span<const std::string> cluster) {
  if (cluster.size() < 2) {
    throw std::domain_error("coherence: cluster must have at least 2 terms");
  }
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    const auto vi = store.vector_at(store.index_of(cluster[i]));
    for (std::size_t j = i + 1; j < cluster.size(); ++j) {
      total += cosine(vi, store.vector_at(store.index_of(cluster[j])));
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

namespace {

// Vocabulary term most cosine-similar to `centroid`; ties to the lexically
// smallest term. A degenerate (zero) centroid falls back to the smallest
// term outright.
std::string nearest_vocab_term(const EmbeddingStore& store,
                               std::span<const double> centroid) {
  double sq = 0.0;
  for (double x : centroid) sq += x * x;
  if (sq == 0.0) {
    std::string best = store.term(0);
    for (std::size_t i = 1; i < store.size(); ++i) {
      best = std::min(best, store.term(i));
    }
    return best;
  }

  std::vector<double> sims(store.size());
  similarity_scan(store, centroid, sims);
  std::size_t best = 0;
  for (std::size_t i = 1; i < store.size(); ++i) {
    if (sims[i] > sims[best] ||
        (sims[i] == sims[best] && store.term(i) < store.term(best))) {
      best = i;
    }
  }
  return store.term(best);
}

}  // namespace

AttackOutcome attack_guess(const EmbeddingStore& store,
                           std::span<const std::string> received,
                           const AttackParams& params, const std::string& truth,
                           Rng& rng) {
  if (received.empty()) {
    throw std::invalid_argument("attack_guess: no received terms");
  }
  const KMeansResult km = kmeans_cluster(store, received, params, rng);
  const std::size_t k = km.clusters.size();

  AttackOutcome outcome;
  outcome.objective_trace = km.objective_trace;
  outcome.per_cluster_coherence.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    if (km.clusters[c].size() < 2) {
      outcome.per_cluster_coherence[c] =
          -std::numeric_limits<double>::infinity();
      continue;
    }
    std::vector<std::string> members;
    members.reserve(km.clusters[c].size());
    for (std::size_t i : km.clusters[c]) members.push_back(received[i]);
    outcome.per_cluster_coherence[c] = coherence(store, members);
  }

  // Most coherent cluster; ties to the lowest index. When every cluster is a
  // singleton, the cluster with the lexicographically smallest member wins.
  std::size_t chosen = 0;
  bool all_singletons = true;
  for (std::size_t c = 0; c < k; ++c) {
    if (std::isfinite(outcome.per_cluster_coherence[c])) all_singletons = false;
    if (outcome.per_cluster_coherence[c] > outcome.per_cluster_coherence[chosen]) {
      chosen = c;
    }
  }
  if (all_singletons) {
    for (std::size_t c = 1; c < k; ++c) {
      if (received[km.clusters[c][0]] < received[km.clusters[chosen][0]]) {
        chosen = c;
      }
    }
  }
  outcome.chosen_cluster_coherence = outcome.per_cluster_coherence[chosen];

  if (params.conservative) {
    for (std::size_t c = 0; c < k; ++c) {
      outcome.guesses.push_back(nearest_vocab_term(store, km.centroids[c]));
    }
  } else {
    outcome.guesses.push_back(nearest_vocab_term(store, km.centroids[chosen]));
  }

  outcome.hit = std::find(outcome.guesses.begin(), outcome.guesses.end(),
                          truth) != outcome.guesses.end();
  return outcome;
}

double hit_rate(std::span<const AttackOutcome> outcomes) {
  if (outcomes.empty()) throw std::invalid_argument("hit_rate: empty list");
  std::size_t hits = 0;
  for (const auto& o : outcomes) hits += o.hit ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(outcomes.size());
}

}  // namespace anonsearch
