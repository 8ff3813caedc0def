// Benchmark of the OpenMP kernels against their serial reference
// implementations: full-vocabulary similarity scans and corpus indexing.
// The outputs of both paths are compared bit-for-bit before timing.

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#else
#include <chrono>
#endif

#include "anonsearch/embedding.hpp"
#include "anonsearch/index.hpp"
#include "anonsearch/rng.hpp"
#include "anonsearch/synthetic.hpp"

using namespace anonsearch;

namespace {

double now() {
#ifdef _OPENMP
  return omp_get_wtime();
#else
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
#endif
}

int threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t vocab = 120000;
  std::size_t dim = 100;
  int repeats = 20;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--vocab") && i + 1 < argc) {
      vocab = std::stoul(argv[++i]);
    } else if (!std::strcmp(argv[i], "--dim") && i + 1 < argc) {
      dim = std::stoul(argv[++i]);
    } else if (!std::strcmp(argv[i], "--repeats") && i + 1 < argc) {
      repeats = std::stoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--vocab N] [--dim D] [--repeats R]\n",
                   argv[0]);
      return 1;
    }
  }

  std::printf("building synthetic world (%zu terms, %zu dims)...\n", vocab,
              dim);
  SyntheticWorldConfig config;
  config.vocab_size = vocab;
  config.dim = dim;
  config.topic_count = 200;
  config.doc_count = 8000;
  config.planted_queries = default_query_terms();
  const SyntheticWorld world = make_world(config);
  const EmbeddingStore store = EmbeddingStore::from_rows(world.dim, world.rows);

  // Query vectors: perturbed copies of random stored vectors.
  Rng rng(7);
  std::vector<std::vector<double>> queries;
  for (int r = 0; r < repeats; ++r) {
    const auto v = store.vector_at(rng.below(store.size()));
    NoiseSpec noise{0.5, 0};
    queries.push_back(perturb(v, noise, rng));
  }

  std::vector<double> serial_out(store.size());
  std::vector<double> parallel_out(store.size());

  // Verify bit-identical outputs before timing.
  for (const auto& q : queries) {
    similarity_scan_serial(store, q, serial_out);
    similarity_scan(store, q, parallel_out);
    if (std::memcmp(serial_out.data(), parallel_out.data(),
                    serial_out.size() * sizeof(double)) != 0) {
      std::fprintf(stderr, "FATAL: serial and parallel scans disagree\n");
      return 1;
    }
  }
  std::printf("serial and parallel scans agree bit-for-bit on %d queries\n",
              repeats);

  double t0 = now();
  for (const auto& q : queries) similarity_scan_serial(store, q, serial_out);
  const double serial_scan = now() - t0;

  t0 = now();
  for (const auto& q : queries) similarity_scan(store, q, parallel_out);
  const double parallel_scan = now() - t0;

  std::printf("\nsimilarity scan over %zu terms x %d queries\n", store.size(),
              repeats);
  std::printf("  serial   : %8.3f ms/query\n",
              1000.0 * serial_scan / repeats);
  std::printf("  openmp   : %8.3f ms/query  (%d threads, speedup %.2fx)\n",
              1000.0 * parallel_scan / repeats, threads(),
              serial_scan / parallel_scan);

  // Index build: the parallel stage is per-document tokenization.
#ifdef _OPENMP
  const int max_threads = omp_get_max_threads();
  omp_set_num_threads(1);
#endif
  t0 = now();
  const InvertedIndex serial_index = InvertedIndex::build(world.docs);
  const double serial_build = now() - t0;
#ifdef _OPENMP
  omp_set_num_threads(max_threads);
#endif
  t0 = now();
  const InvertedIndex parallel_index = InvertedIndex::build(world.docs);
  const double parallel_build = now() - t0;

  if (serial_index.postings().size() != parallel_index.postings().size()) {
    std::fprintf(stderr, "FATAL: serial and parallel index builds disagree\n");
    return 1;
  }

  std::printf("\nindex build over %zu documents\n", world.docs.size());
  std::printf("  1 thread : %8.3f ms\n", 1000.0 * serial_build);
  std::printf("  openmp   : %8.3f ms  (%d threads, speedup %.2fx)\n",
              1000.0 * parallel_build, threads(),
              serial_build / parallel_build);
  return 0;
}
