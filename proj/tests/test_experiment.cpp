#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "anonsearch/experiment.hpp"
#include "anonsearch/synthetic.hpp"
#include "anonsearch/textio.hpp"
#include "helpers.hpp"

using namespace anonsearch;

namespace {

struct SmallWorld {
  EmbeddingStore store;
  InvertedIndex index;
  std::vector<std::string> queries;
};

SmallWorld small_world() {
  SyntheticWorldConfig config;
  config.vocab_size = 2000;
  config.dim = 32;
  config.topic_count = 20;
  config.doc_count = 600;
  config.doc_len_min = 30;
  config.doc_len_max = 60;
  config.planted_queries = {"alpha", "beta", "gamma", "delta", "epsilon"};
  config.seed = 7777;
  const auto world = make_world(config);
  return {EmbeddingStore::from_rows(world.dim, world.rows),
          InvertedIndex::build(world.docs), world.queries};
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

TEST_CASE("cell seed derivation is pinned") {
  CHECK(derive_cell_seed(0, "q", 0.6, 20, 10, 1) ==
        fnv1a64("q|0.6|20|10|1"));
  CHECK(derive_cell_seed(0, "hitler", 0.0, 0, 10, 1) ==
        fnv1a64("hitler|0.0|0|10|1"));
  // XOR structure: the master seed toggles bits on top of the digest.
  const std::uint64_t base = derive_cell_seed(0, "x", 1.0, 40, 10, 2);
  CHECK(derive_cell_seed(0xDEADBEEF, "x", 1.0, 40, 10, 2) ==
        (base ^ 0xDEADBEEF));
  // Frozen digest so the derivation cannot drift silently.
  CHECK(fnv1a64("q|0.6|20|10|1") == 0x121a795cf00d0aecULL);
}

TEST_CASE("smallest grid: one record with the expected attack guess") {
  auto [store, index, queries] = small_world();

  ExperimentConfig config;
  config.queries = {queries[0]};
  config.sigmas = {0.0};
  config.distractor_counts = {0};
  config.l_values = {1};
  config.k_values = {1};
  config.n_related = 10;
  config.pool_size = 200;
  config.master_seed = 5;

  const auto result = run_grid(store, index, config);
  REQUIRE(result.records.size() == 1);
  REQUIRE(result.cell_errors.empty());
  const auto& rec = result.records[0];
  CHECK(rec.m == 0);
  CHECK(rec.distractors.empty());
  REQUIRE(rec.attacks.size() == 1);

  // With zero noise and no distractors the k=1 guess must be the vocabulary
  // term nearest the centroid of the normalized related-term vectors.
  std::vector<double> centroid(store.dim(), 0.0);
  for (const auto& term : rec.related) {
    const auto v = store.vector_of(term);
    const double n = store.norm_of(term);
    for (std::size_t j = 0; j < store.dim(); ++j) {
      centroid[j] += static_cast<double>(v[j]) / n;
    }
  }
  for (auto& x : centroid) x /= static_cast<double>(rec.related.size());

  std::string best;
  double best_sim = -2.0;
  for (std::size_t i = 0; i < store.size(); ++i) {
    const double sim = testutil::oracle_cosine(centroid, store.vector_at(i));
    if (sim > best_sim || (sim == best_sim && store.term(i) < best)) {
      best_sim = sim;
      best = store.term(i);
    }
  }
  REQUIRE(rec.attacks[0].standard_outcome.guesses.size() == 1);
  CHECK(rec.attacks[0].standard_outcome.guesses[0] == best);
}

TEST_CASE("identical configs produce byte-identical outputs") {
  auto [store, index, queries] = small_world();
  namespace fs = std::filesystem;

  ExperimentConfig config;
  config.queries = queries;
  config.sigmas = {0.0, 0.6};
  config.distractor_counts = {0, 10};
  config.l_values = {1};
  config.k_values = {1, 2};
  config.n_related = 6;
  config.pool_size = 150;
  config.master_seed = 42;

  const auto dir_a = fs::temp_directory_path() / "anonsearch_run_a";
  const auto dir_b = fs::temp_directory_path() / "anonsearch_run_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);

  config.output_dir = dir_a.string();
  const auto result_a = run_grid(store, index, config);
  write_outputs(result_a, store, config);

  config.output_dir = dir_b.string();
  const auto result_b = run_grid(store, index, config);
  write_outputs(result_b, store, config);

  for (const char* name : {"records.csv", "fits.csv", "hitrates.csv",
                           "attacks.csv"}) {
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
  }
  CHECK(result_a.kmeans_violations == 0);
}

TEST_CASE("unknown queries are skipped and the row count invariant holds") {
  auto [store, index, queries] = small_world();

  ExperimentConfig config;
  config.queries = {queries[0], "notaword", queries[1]};
  config.sigmas = {0.0, 1.0};
  config.distractor_counts = {0, 5};
  config.l_values = {1, 2};
  config.k_values = {1};
  config.n_related = 5;
  config.pool_size = 100;
  config.master_seed = 9;

  const auto result = run_grid(store, index, config);
  CHECK(result.skipped_queries.size() == 1);
  CHECK(result.cell_errors.empty());
  // 2 usable queries x 2 sigmas x 2 distractor counts x 2 l values.
  CHECK(result.records.size() == 16);
}

TEST_CASE("grid cells are independent of sibling cells") {
  auto [store, index, queries] = small_world();

  ExperimentConfig narrow;
  narrow.queries = {queries[2]};
  narrow.sigmas = {0.6};
  narrow.distractor_counts = {5};
  narrow.l_values = {1};
  narrow.k_values = {1};
  narrow.n_related = 5;
  narrow.pool_size = 100;
  narrow.master_seed = 31;

  ExperimentConfig wide = narrow;
  wide.queries = {queries[0], queries[2], queries[3]};
  wide.sigmas = {0.0, 0.6, 1.8};
  wide.distractor_counts = {0, 5};

  const auto small = run_grid(store, index, narrow);
  const auto large = run_grid(store, index, wide);
  REQUIRE(small.records.size() == 1);

  bool found = false;
  for (const auto& rec : large.records) {
    if (rec.query == queries[2] && rec.sigma == 0.6 && rec.m == 5 &&
        rec.l == 1) {
      found = true;
      CHECK(rec.cell_seed == small.records[0].cell_seed);
      CHECK(rec.related == small.records[0].related);
      CHECK(rec.distractors == small.records[0].distractors);
      CHECK(rec.alpha == small.records[0].alpha);
    }
  }
  CHECK(found);
}

TEST_CASE("emitted aggregates match recomputation from records.csv") {
  auto [store, index, queries] = small_world();
  namespace fs = std::filesystem;

  ExperimentConfig config;
  config.queries = queries;
  config.sigmas = {0.0, 1.0};
  config.distractor_counts = {0, 8};
  config.l_values = {1};
  config.k_values = {1, 2};
  config.n_related = 6;
  config.pool_size = 150;
  config.master_seed = 77;
  const auto dir = fs::temp_directory_path() / "anonsearch_agg";
  fs::remove_all(dir);
  config.output_dir = dir.string();

  const auto result = run_grid(store, index, config);
  write_outputs(result, store, config);

  // Parse records.csv back.
  std::ifstream in(dir / "records.csv");
  REQUIRE(in);
  std::string line;
  std::getline(in, line);
  const auto header = split_csv_line(line);

  struct Row {
    double sigma;
    int m;
    double alpha;
    std::string log_rho;
    std::map<std::string, std::string> hits;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    const auto fields = split_csv_line(line);
    REQUIRE(fields.size() == header.size());
    Row row;
    row.sigma = std::stod(fields[1]);
    row.m = std::stoi(fields[3]);
    row.alpha = std::stod(fields[6]);
    row.log_rho = fields[8];
    for (std::size_t i = 11; i < header.size(); ++i) {
      row.hits[header[i]] = fields[i];
    }
    rows.push_back(std::move(row));
  }
  REQUIRE(rows.size() == result.records.size());

  // Recompute hit rates per (sigma, m, k, mode) and compare to hitrates.csv.
  std::ifstream hr(dir / "hitrates.csv");
  REQUIRE(hr);
  std::getline(hr, line);  // header
  while (std::getline(hr, line)) {
    const auto fields = split_csv_line(line);
    REQUIRE(fields.size() == 7);
    const double sigma = std::stod(fields[0]);
    const int m = std::stoi(fields[1]);
    const std::string column = std::string("hit_") +
                               (fields[3] == "standard" ? "std" : "cons") +
                               "_k" + fields[2];
    std::size_t attacks = 0, hits = 0;
    for (const auto& row : rows) {
      if (row.sigma != sigma || row.m != m) continue;
      const auto it = row.hits.find(column);
      REQUIRE(it != row.hits.end());
      if (it->second == "NA") continue;
      attacks++;
      if (it->second == "1") hits++;
    }
    CHECK(attacks == std::stoul(fields[4]));
    CHECK(hits == std::stoul(fields[5]));
  }

  // Recompute fits per (sigma, m) from the alpha/log_rho columns.
  std::ifstream ft(dir / "fits.csv");
  REQUIRE(ft);
  std::getline(ft, line);  // header
  while (std::getline(ft, line)) {
    const auto fields = split_csv_line(line);
    REQUIRE(fields.size() == 9);
    const double sigma = std::stod(fields[0]);
    const int m = std::stoi(fields[1]);

    std::vector<double> xs, ys;
    for (const auto& row : rows) {
      if (row.sigma != sigma || row.m != m || row.log_rho == "NA") continue;
      xs.push_back(row.alpha);
      ys.push_back(std::stod(row.log_rho));
    }
    CHECK(xs.size() == std::stoul(fields[6]));
    if (fields[3] == "NA") continue;

    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (double x : xs) mx += x;
    for (double y : ys) my += y;
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    CHECK(std::stod(fields[3]) == doctest::Approx(slope).epsilon(1e-9));
  }

  // Panel files: one per (sigma, m, l) combination.
  CHECK(fs::exists(dir / "plots" / "panel_s0.0_m0_l1.csv"));
  CHECK(fs::exists(dir / "plots" / "panel_s1.0_m8_l1.csv"));
  CHECK(fs::exists(dir / "plots" / "hitbars_s0.0_m0.csv"));
}

TEST_CASE("config loads with exact field names and defaults") {
  namespace fs = std::filesystem;
  const auto path = fs::temp_directory_path() / "exp_config.json";
  {
    std::ofstream out(path);
    out << R"({
      "embedding_path": "emb.txt",
      "corpus_path": "corpus.jsonl",
      "queries": ["a", "b"],
      "output_dir": "out",
      "sigmas": [0.0, 0.6],
      "master_seed": 12345
    })";
  }
  const auto config = load_experiment_config(path.string());
  CHECK(config.embedding_path == "emb.txt");
  CHECK(config.queries == std::vector<std::string>{"a", "b"});
  CHECK(config.sigmas == std::vector<double>{0.0, 0.6});
  CHECK(config.master_seed == 12345);
  // Defaults from the experiment protocol.
  CHECK(config.distractor_counts == std::vector<int>{0, 20, 40, 60, 120});
  CHECK(config.n_related == 10);
  CHECK(config.l_values == std::vector<int>{1});
  CHECK(config.k_values == std::vector<int>{1, 2, 3, 4, 5});
  CHECK(config.pool_size == 2000);
}
