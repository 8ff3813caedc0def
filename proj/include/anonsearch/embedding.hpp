#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "anonsearch/rng.hpp"

namespace anonsearch {

// Gaussian perturbation parameters: per-dimension standard deviation and the
// seed a caller uses when it owns the random stream. sigma == 0 means the
// perturbation is exactly the zero vector.
struct NoiseSpec {
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

struct LoadStats {
  std::size_t lines_read = 0;
  std::size_t skipped_zero_norm = 0;
  std::size_t duplicates_ignored = 0;
};

// Immutable vocabulary -> d-dimensional vector mapping with precomputed L2
// norms. Terms are lowercased at load; the first occurrence of a duplicate
// wins. Safe for unlimited concurrent reads once constructed.
class EmbeddingStore {
 public:
  // Parses a text word-vector file: one `<token> <f1> ... <fd>` line per
  // term, LF or CRLF, no header. Throws ParseError on malformed lines
  // (naming the line number) and on an empty file. Zero-norm rows are
  // dropped and counted in load_stats().
  static EmbeddingStore load(const std::string& path,
                             std::optional<std::size_t> expected_dim = {});

  // In-memory construction (tests, synthetic worlds). Applies the same
  // lowercase/duplicate/zero-norm rules as load().
  static EmbeddingStore from_rows(
      std::size_t dim,
      const std::vector<std::pair<std::string, std::vector<float>>>& rows);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return terms_.size(); }

  bool contains(std::string_view term) const;
  // Index of a term; throws NotFoundError for unknown terms.
  std::size_t index_of(std::string_view term) const;
  std::optional<std::size_t> find(std::string_view term) const;

  const std::string& term(std::size_t i) const { return terms_[i]; }
  const std::vector<std::string>& terms() const { return terms_; }
  std::span<const float> vector_at(std::size_t i) const {
    return {vectors_.data() + i * dim_, dim_};
  }
  std::span<const float> vector_of(std::string_view term) const {
    return vector_at(index_of(term));
  }
  double norm_at(std::size_t i) const { return norms_[i]; }
  double norm_of(std::string_view term) const { return norms_[index_of(term)]; }

  const LoadStats& load_stats() const { return stats_; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> terms_;
  std::vector<float> vectors_;  // row-major, size() * dim()
  std::vector<double> norms_;
  std::vector<std::size_t> term_lookup_;  // indices sorted by term
  LoadStats stats_;

  void finalize();
};

// Cosine similarity, clamped to [-1, 1] against rounding.
// Throws std::domain_error when either vector has (near-)zero norm.
double cosine(std::span<const double> u, std::span<const double> v);
double cosine(std::span<const float> u, std::span<const float> v);
double cosine(std::span<const double> u, std::span<const float> v);

// v + theta with theta ~ Normal(0, noise.sigma^2) per dimension, drawn from
// the supplied stream. Deterministic given the stream state.
std::vector<double> perturb(std::span<const float> v, const NoiseSpec& noise,
                            Rng& rng);
std::vector<double> perturb(std::span<const double> v, const NoiseSpec& noise,
                            Rng& rng);

// Cosine of `query` against every stored term. out.size() must equal
// store.size(). The parallel variant distributes terms across OpenMP threads;
// per-term arithmetic is identical, so both fill `out` with the same bits.
void similarity_scan(const EmbeddingStore& store, std::span<const double> query,
                     std::span<double> out);
void similarity_scan_serial(const EmbeddingStore& store,
                            std::span<const double> query,
                            std::span<double> out);

// The n non-excluded terms most cosine-similar to `query`, descending
// similarity, ties broken by ascending term order. Throws
// std::invalid_argument when n exceeds the available candidates.
std::vector<std::pair<std::string, double>> nearest_neighbors(
    const EmbeddingStore& store, std::span<const double> query, std::size_t n,
    const std::set<std::string>& exclude);

}  // namespace anonsearch
