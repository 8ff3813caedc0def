#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "anonsearch/attack.hpp"
#include "helpers.hpp"

using namespace anonsearch;

namespace {

// Two groups of 10 terms around orthogonal directions.
struct TwoGroups {
  EmbeddingStore store;
  std::vector<std::string> terms;
};

TwoGroups two_groups() {
  Rng rng(2024);
  std::vector<std::pair<std::string, std::vector<float>>> rows;
  std::vector<std::string> terms;
  for (int g = 0; g < 2; ++g) {
    for (int i = 0; i < 10; ++i) {
      std::vector<float> v(8, 0.0f);
      for (auto& x : v) x = static_cast<float>(0.05 * rng.gaussian());
      v[g] += 1.0f;
      const std::string name = (g == 0 ? "x" : "y") + std::to_string(i);
      rows.emplace_back(name, std::move(v));
      terms.push_back(name);
    }
  }
  return {EmbeddingStore::from_rows(8, rows), std::move(terms)};
}

// Exhaustive best 2-partition by the k-means objective over normalized
// vectors (both clusters centered at their means).
double partition_objective(const std::vector<std::vector<double>>& points,
                           std::uint32_t mask) {
  const std::size_t dim = points[0].size();
  double total = 0.0;
  for (int side = 0; side < 2; ++side) {
    std::vector<double> mean(dim, 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (((mask >> i) & 1u) != static_cast<std::uint32_t>(side)) continue;
      for (std::size_t j = 0; j < dim; ++j) mean[j] += points[i][j];
      ++count;
    }
    if (count == 0) return std::numeric_limits<double>::infinity();
    for (auto& x : mean) x /= static_cast<double>(count);
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (((mask >> i) & 1u) != static_cast<std::uint32_t>(side)) continue;
      for (std::size_t j = 0; j < dim; ++j) {
        const double d = points[i][j] - mean[j];
        total += d * d;
      }
    }
  }
  return total;
}

}  // namespace

TEST_CASE("kmeans: k=1 puts everything in one cluster") {
  const auto [store, terms] = two_groups();
  AttackParams params;
  params.k = 1;
  Rng rng(1);
  const auto result = kmeans_cluster(store, terms, params, rng);
  REQUIRE(result.clusters.size() == 1);
  CHECK(result.clusters[0].size() == terms.size());
}

TEST_CASE("kmeans: k=|terms| gives singletons") {
  const auto [store, terms] = two_groups();
  AttackParams params;
  params.k = static_cast<int>(terms.size());
  Rng rng(2);
  const auto result = kmeans_cluster(store, terms, params, rng);
  REQUIRE(result.clusters.size() == terms.size());
  std::set<std::size_t> seen;
  for (const auto& cluster : result.clusters) {
    REQUIRE(cluster.size() == 1);
    seen.insert(cluster[0]);
  }
  CHECK(seen.size() == terms.size());
}

TEST_CASE("kmeans: recovers two orthogonal groups exactly") {
  const auto [store, terms] = two_groups();
  AttackParams params;
  params.k = 2;

  // Normalized points for the oracle objective.
  std::vector<std::vector<double>> points;
  for (const auto& t : terms) {
    const auto v = store.vector_of(t);
    const double n = store.norm_of(t);
    std::vector<double> p(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) {
      p[j] = static_cast<double>(v[j]) / n;
    }
    points.push_back(std::move(p));
  }
  double best_objective = std::numeric_limits<double>::infinity();
  std::uint32_t best_mask = 0;
  for (std::uint32_t mask = 1; mask < (1u << 20) - 1; ++mask) {
    const double obj = partition_objective(points, mask);
    if (obj < best_objective) {
      best_objective = obj;
      best_mask = mask;
    }
  }

  Rng rng(3);
  const auto result = kmeans_cluster(store, terms, params, rng);
  REQUIRE(result.clusters.size() == 2);

  std::set<std::size_t> cluster0(result.clusters[0].begin(),
                                 result.clusters[0].end());
  std::set<std::size_t> oracle_side;
  for (std::size_t i = 0; i < 20; ++i) {
    if ((best_mask >> i) & 1u) oracle_side.insert(i);
  }
  std::set<std::size_t> oracle_other;
  for (std::size_t i = 0; i < 20; ++i) {
    if (!oracle_side.contains(i)) oracle_other.insert(i);
  }
  const bool match =
      cluster0 == oracle_side || cluster0 == oracle_other;
  CHECK(match);
  // And those groups are the construction's x/y split.
  std::set<std::size_t> first_ten;
  for (std::size_t i = 0; i < 10; ++i) first_ten.insert(i);
  CHECK((oracle_side == first_ten || oracle_other == first_ten));
}

TEST_CASE("kmeans: partition property and objective monotonicity") {
  const auto store = testutil::random_store(60, 10, 71);
  testutil::Rng pick(73);
  std::vector<std::string> terms;
  for (int i = 0; i < 25; ++i) {
    terms.push_back(testutil::synth_token(pick.below(60)));
  }
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());

  for (int k = 1; k <= 5; ++k) {
    AttackParams params;
    params.k = k;
    Rng rng(100 + static_cast<std::uint64_t>(k));
    const auto result = kmeans_cluster(store, terms, params, rng);
    REQUIRE(result.clusters.size() == static_cast<std::size_t>(k));

    std::vector<std::size_t> all;
    for (const auto& cluster : result.clusters) {
      CHECK_FALSE(cluster.empty());
      all.insert(all.end(), cluster.begin(), cluster.end());
    }
    std::sort(all.begin(), all.end());
    REQUIRE(all.size() == terms.size());
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);

    for (std::size_t t = 1; t < result.objective_trace.size(); ++t) {
      CHECK(result.objective_trace[t] <= result.objective_trace[t - 1]);
    }
  }
}

TEST_CASE("kmeans: k > |terms| is an error") {
  const auto store = testutil::random_store(10, 4, 79);
  const std::vector<std::string> terms{"w1", "w2"};
  AttackParams params;
  params.k = 3;
  Rng rng(1);
  CHECK_THROWS_AS(kmeans_cluster(store, terms, params, rng),
                  std::invalid_argument);
}

TEST_CASE("coherence: anchors") {
  std::vector<std::pair<std::string, std::vector<float>>> rows = {
      {"a", {1.0f, 0.0f, 0.0f}},
      {"b", {1.0f, 0.0f, 0.0f}},
  };
  auto store = EmbeddingStore::from_rows(3, rows);
  const std::vector<std::string> pair{"a", "b"};
  CHECK(coherence(store, pair) == doctest::Approx(1.0));

  const std::vector<std::string> singleton{"a"};
  CHECK_THROWS_AS(coherence(store, singleton), std::domain_error);
}

TEST_CASE("coherence: mean of the pairwise cosines") {
  // Three unit vectors constructed so cos(v1,v2)=0.9, cos(v1,v3)=0.6,
  // cos(v2,v3)=0.3 via the Cholesky factor of the target Gram matrix.
  const double l22 = std::sqrt(1.0 - 0.9 * 0.9);
  const double l32 = (0.3 - 0.6 * 0.9) / l22;
  const double l33 = std::sqrt(1.0 - 0.6 * 0.6 - l32 * l32);
  std::vector<std::pair<std::string, std::vector<float>>> rows = {
      {"v1", {1.0f, 0.0f, 0.0f}},
      {"v2", {0.9f, static_cast<float>(l22), 0.0f}},
      {"v3", {0.6f, static_cast<float>(l32), static_cast<float>(l33)}},
  };
  const auto store = EmbeddingStore::from_rows(3, rows);
  const std::vector<std::string> cluster{"v1", "v2", "v3"};
  CHECK(coherence(store, cluster) == doctest::Approx(0.6).epsilon(1e-3));
}

TEST_CASE("coherence: permutation invariant and bounded") {
  const auto store = testutil::random_store(30, 8, 83);
  std::vector<std::string> cluster{"w1", "w5", "w9", "w12"};
  const double base = coherence(store, cluster);
  CHECK(base >= -1.0);
  CHECK(base <= 1.0);
  std::vector<std::string> shuffled{"w9", "w1", "w12", "w5"};
  CHECK(coherence(store, shuffled) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("attack_guess: received=[A] with k=1 recovers A") {
  const auto store = testutil::random_store(100, 8, 89);
  const std::vector<std::string> received{"w17"};
  AttackParams params;
  params.k = 1;
  Rng rng(5);
  const auto outcome = attack_guess(store, received, params, "w17", rng);
  REQUIRE(outcome.guesses.size() == 1);
  CHECK(outcome.guesses[0] == "w17");
  CHECK(outcome.hit);
  CHECK(outcome.chosen_cluster_coherence ==
        -std::numeric_limits<double>::infinity());
}

TEST_CASE("attack_guess: deterministic per seed") {
  const auto store = testutil::random_store(200, 10, 97);
  std::vector<std::string> received;
  for (int i = 0; i < 30; ++i) {
    received.push_back(testutil::synth_token(i * 3));
  }
  AttackParams params;
  params.k = 3;
  params.seed = 1234;

  Rng r1(params.seed), r2(params.seed);
  const auto a = attack_guess(store, received, params, "w0", r1);
  const auto b = attack_guess(store, received, params, "w0", r2);
  CHECK(a.guesses == b.guesses);
  CHECK(a.hit == b.hit);
  CHECK(a.per_cluster_coherence == b.per_cluster_coherence);
}

TEST_CASE("attack_guess: conservative guesses contain the standard guess") {
  const auto store = testutil::random_store(300, 10, 101);
  testutil::Rng pick(103);
  for (int trial = 0; trial < 15; ++trial) {
    std::vector<std::string> received;
    std::set<std::string> seen;
    while (received.size() < 20) {
      auto t = testutil::synth_token(pick.below(300));
      if (seen.insert(t).second) received.push_back(t);
    }
    AttackParams params;
    params.k = 1 + static_cast<int>(pick.below(5));
    params.seed = 999 + static_cast<std::uint64_t>(trial);

    Rng r1(params.seed), r2(params.seed);
    params.conservative = false;
    const auto standard = attack_guess(store, received, params, "w0", r1);
    params.conservative = true;
    const auto conservative = attack_guess(store, received, params, "w0", r2);

    REQUIRE(standard.guesses.size() == 1);
    REQUIRE(conservative.guesses.size() ==
            static_cast<std::size_t>(params.k));
    CHECK(std::find(conservative.guesses.begin(), conservative.guesses.end(),
                    standard.guesses[0]) != conservative.guesses.end());
    if (standard.hit) CHECK(conservative.hit);
  }
}

TEST_CASE("hit_rate: arithmetic") {
  std::vector<AttackOutcome> outcomes(10);
  for (int i = 0; i < 3; ++i) outcomes[i].hit = true;
  CHECK(hit_rate(outcomes) == doctest::Approx(0.3));

  for (auto& o : outcomes) o.hit = false;
  CHECK(hit_rate(outcomes) == doctest::Approx(0.0));

  const std::vector<AttackOutcome> empty;
  CHECK_THROWS_AS(hit_rate(empty), std::invalid_argument);
}
