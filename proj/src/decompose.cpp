#include "anonsearch/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace anonsearch {

std::vector<std::string> related_terms(const EmbeddingStore& store,
                                       const std::string& query, int n,
                                       const NoiseSpec& noise, Rng& rng,
                                       std::vector<double>* theta_out) {
  if (n <= 0) throw std::invalid_argument("related_terms: n must be positive");
  const std::size_t qi = store.index_of(query);
  if (store.size() < static_cast<std::size_t>(n) + 1) {
    throw std::invalid_argument("related_terms: vocabulary smaller than n+1");
  }

  const auto theta = rng.gaussian_vector(store.dim(), noise.sigma);
  if (theta_out) *theta_out = theta;

  std::vector<double> noisy(store.dim());
  const auto v = store.vector_at(qi);
  for (std::size_t j = 0; j < store.dim(); ++j) {
    noisy[j] = static_cast<double>(v[j]) + theta[j];
  }

  const auto ranked = nearest_neighbors(store, noisy,
                                        static_cast<std::size_t>(n), {query});
  std::vector<std::string> out;
  out.reserve(ranked.size());
  for (const auto& [term, sim] : ranked) out.push_back(term);
  return out;
}

namespace {

struct Candidate {
  std::size_t store_index;
  double sim_to_query;  // cosine(v(A), v(x)), unnoised
};

// Purge ordering: most similar to A first; ties by ascending term.
bool more_similar(const EmbeddingStore& store, const Candidate& a,
                  const Candidate& b) {
  if (a.sim_to_query != b.sim_to_query) return a.sim_to_query > b.sim_to_query;
  return store.term(a.store_index) < store.term(b.store_index);
}

}  // namespace

std::vector<std::string> distractor_terms(const EmbeddingStore& store,
                                          const std::string& query, int m,
                                          const DecomposeParams& params,
                                          const std::set<std::string>& forbidden,
                                          Rng& rng, DistractorTrace* trace) {
  if (m < 0) throw std::invalid_argument("distractor_terms: m must be >= 0");
  if (params.pool_size < m) {
    throw std::invalid_argument("distractor_terms: pool_size < m");
  }
  if (params.removal_fraction <= 0.0 || params.removal_fraction >= 1.0) {
    throw std::invalid_argument(
        "distractor_terms: removal_fraction outside (0,1)");
  }
  const std::size_t qi = store.index_of(query);
  if (m == 0) return {};

  // Eligible vocabulary: everything except A and the forbidden set.
  std::vector<std::size_t> eligible;
  eligible.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (i == qi) continue;
    if (forbidden.contains(store.term(i))) continue;
    eligible.push_back(i);
  }
  const std::size_t pool_size = static_cast<std::size_t>(params.pool_size);
  if (eligible.size() < pool_size) {
    throw std::invalid_argument(
        "distractor_terms: pool_size exceeds eligible vocabulary (" +
        std::to_string(pool_size) + " > " + std::to_string(eligible.size()) +
        ")");
  }

  const auto query_vec = store.vector_at(qi);
  const auto draw = rng.sample_without_replacement(eligible.size(), pool_size);
  std::vector<Candidate> pool;
  pool.reserve(pool_size);
  for (std::size_t d : draw) {
    const std::size_t idx = eligible[d];
    pool.push_back({idx, cosine(store.vector_at(idx), query_vec)});
  }
  if (trace) {
    trace->pool.clear();
    trace->steps.clear();
    trace->backfilled.clear();
    for (const auto& c : pool) trace->pool.push_back(store.term(c.store_index));
  }

  // Purge history for backfill: one batch per iteration, in purge order.
  std::vector<std::vector<Candidate>> purge_batches;

  const std::size_t target = static_cast<std::size_t>(m);
  const int iteration_cap = static_cast<int>(std::ceil(
      10.0 * std::log2(static_cast<double>(std::max<std::size_t>(2, pool_size)))));
  int iterations = 0;

  while (pool.size() > target) {
    if (++iterations > iteration_cap) {
      throw std::runtime_error(
          "distractor_terms: hyperplane iteration cap exceeded");
    }

    // Random hyperplane through v(A): unit normal from the sphere.
    std::vector<double> normal = rng.gaussian_vector(store.dim(), 1.0);
    double nn = 0.0;
    for (double x : normal) nn += x * x;
    const double inv = 1.0 / std::sqrt(nn);
    for (double& x : normal) x *= inv;

    // Split by the sign of h . (v(x) - v(A)).
    std::vector<Candidate> plus, minus;
    for (const auto& c : pool) {
      const auto vx = store.vector_at(c.store_index);
      double s = 0.0;
      for (std::size_t j = 0; j < store.dim(); ++j) {
        s += normal[j] * (static_cast<double>(vx[j]) - query_vec[j]);
      }
      (s >= 0.0 ? plus : minus).push_back(c);
    }

    bool plus_wins;
    if (plus.size() != minus.size()) {
      plus_wins = plus.size() > minus.size();
    } else {
      // Tie: take the side holding the lexicographically smallest candidate.
      auto min_term = [&](const std::vector<Candidate>& side) {
        const std::string* best = nullptr;
        for (const auto& c : side) {
          const std::string& t = store.term(c.store_index);
          if (!best || t < *best) best = &t;
        }
        return best;
      };
      const std::string* mp = min_term(plus);
      const std::string* mm = min_term(minus);
      plus_wins = mm == nullptr || (mp != nullptr && *mp < *mm);
    }
    std::vector<Candidate>* larger = plus_wins ? &plus : &minus;
    std::vector<Candidate>* smaller = plus_wins ? &minus : &plus;

    // Purge the ceil(fraction * |larger|) members most similar to A.
    const std::size_t purge_count = static_cast<std::size_t>(
        std::ceil(params.removal_fraction * static_cast<double>(larger->size())));
    std::sort(larger->begin(), larger->end(),
              [&](const Candidate& a, const Candidate& b) {
                return more_similar(store, a, b);
              });
    std::vector<Candidate> purged(larger->begin(),
                                  larger->begin() + purge_count);
    std::vector<Candidate> kept(larger->begin() + purge_count, larger->end());

    if (trace) {
      HyperplaneStep step;
      step.normal = normal;
      for (const auto& c : purged) step.purged.push_back(store.term(c.store_index));
      for (const auto& c : kept) step.kept.push_back(store.term(c.store_index));
      for (const auto& c : *smaller)
        step.discarded.push_back(store.term(c.store_index));
      trace->steps.push_back(std::move(step));
    }

    purge_batches.push_back(std::move(purged));
    pool = std::move(kept);
  }

  // Backfill from the most recent purges, least-similar-to-A first.
  for (auto batch = purge_batches.rbegin();
       pool.size() < target && batch != purge_batches.rend(); ++batch) {
    std::sort(batch->begin(), batch->end(),
              [&](const Candidate& a, const Candidate& b) {
                return more_similar(store, b, a);  // least similar first
              });
    for (const auto& c : *batch) {
      if (pool.size() == target) break;
      pool.push_back(c);
      if (trace) trace->backfilled.push_back(store.term(c.store_index));
    }
  }
  if (pool.size() < target) {
    throw std::runtime_error(
        "distractor_terms: pool exhausted below m with nothing to backfill");
  }

  // Least similar to A first (greatest distance), ties by ascending term.
  std::sort(pool.begin(), pool.end(),
            [&](const Candidate& a, const Candidate& b) {
              return more_similar(store, b, a);
            });
  std::vector<std::string> out;
  out.reserve(pool.size());
  for (const auto& c : pool) out.push_back(store.term(c.store_index));
  return out;
}

DecomposedQuery decompose(const EmbeddingStore& store, const std::string& query,
                          const DecomposeParams& params, Rng& rng) {
  DecomposedQuery q;
  q.original = query;

  NoiseSpec noise{params.sigma, params.seed};
  q.related = related_terms(store, query, params.n_related, noise, rng);

  std::set<std::string> forbidden(q.related.begin(), q.related.end());
  forbidden.insert(query);
  q.distractors = distractor_terms(store, query, params.m_distractors, params,
                                   forbidden, rng);

  q.transmission_order.reserve(q.related.size() + q.distractors.size());
  q.transmission_order.insert(q.transmission_order.end(), q.related.begin(),
                              q.related.end());
  q.transmission_order.insert(q.transmission_order.end(), q.distractors.begin(),
                              q.distractors.end());
  rng.shuffle(q.transmission_order);
  return q;
}

DecomposedQuery decompose(const EmbeddingStore& store, const std::string& query,
                          const DecomposeParams& params) {
  Rng rng(params.seed);
  return decompose(store, query, params, rng);
}

}  // namespace anonsearch
