#include "anonsearch/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "anonsearch/errors.hpp"
#include "anonsearch/textio.hpp"

namespace anonsearch {

namespace {

// Splits a line into whitespace-separated fields (space or tab).
std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

double parse_float_field(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ParseError("embedding file line " + std::to_string(line_no) +
                     ": non-numeric field '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

EmbeddingStore EmbeddingStore::load(const std::string& path,
                                    std::optional<std::size_t> expected_dim) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open embedding file: " + path);

  EmbeddingStore store;
  store.dim_ = expected_dim.value_or(0);

  std::vector<float> row;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    store.stats_.lines_read++;

    const auto fields = split_fields(line);
    if (fields.size() < 2) {
      throw ParseError("embedding file line " + std::to_string(line_no) +
                       ": expected token plus vector");
    }
    if (store.dim_ == 0) store.dim_ = fields.size() - 1;
    if (fields.size() - 1 != store.dim_) {
      throw ParseError("embedding file line " + std::to_string(line_no) +
                       ": expected " + std::to_string(store.dim_) +
                       " components, got " + std::to_string(fields.size() - 1));
    }

    row.clear();
    double sq = 0.0;
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const double x = parse_float_field(fields[i], line_no);
      row.push_back(static_cast<float>(x));
      sq += x * x;
    }
    if (sq == 0.0) {
      store.stats_.skipped_zero_norm++;
      continue;
    }

    std::string token = lowercase_utf8(fields[0]);
    if (store.contains(token)) {
      store.stats_.duplicates_ignored++;
      continue;
    }
    // Incremental lookup keeps the duplicate check O(log n) during load.
    const std::size_t idx = store.terms_.size();
    store.terms_.push_back(std::move(token));
    store.vectors_.insert(store.vectors_.end(), row.begin(), row.end());
    auto pos = std::lower_bound(
        store.term_lookup_.begin(), store.term_lookup_.end(), idx,
        [&](std::size_t a, std::size_t b) { return store.terms_[a] < store.terms_[b]; });
    store.term_lookup_.insert(pos, idx);
  }

  if (store.terms_.empty()) {
    throw ParseError("embedding file is empty: " + path);
  }
  store.finalize();
  return store;
}

EmbeddingStore EmbeddingStore::from_rows(
    std::size_t dim,
    const std::vector<std::pair<std::string, std::vector<float>>>& rows) {
  EmbeddingStore store;
  store.dim_ = dim;
  for (const auto& [raw_term, vec] : rows) {
    if (vec.size() != dim) {
      throw std::invalid_argument("from_rows: vector length mismatch");
    }
    store.stats_.lines_read++;
    double sq = 0.0;
    for (float x : vec) sq += static_cast<double>(x) * x;
    if (sq == 0.0) {
      store.stats_.skipped_zero_norm++;
      continue;
    }
    std::string token = lowercase_utf8(raw_term);
    if (store.contains(token)) {
      store.stats_.duplicates_ignored++;
      continue;
    }
    const std::size_t idx = store.terms_.size();
    store.terms_.push_back(std::move(token));
    store.vectors_.insert(store.vectors_.end(), vec.begin(), vec.end());
    auto pos = std::lower_bound(
        store.term_lookup_.begin(), store.term_lookup_.end(), idx,
        [&](std::size_t a, std::size_t b) { return store.terms_[a] < store.terms_[b]; });
    store.term_lookup_.insert(pos, idx);
  }
  if (store.terms_.empty()) {
    throw std::invalid_argument("from_rows: no usable rows");
  }
  store.finalize();
  return store;
}

void EmbeddingStore::finalize() {
  norms_.resize(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    double sq = 0.0;
    const float* v = vectors_.data() + i * dim_;
    for (std::size_t j = 0; j < dim_; ++j) {
      sq += static_cast<double>(v[j]) * v[j];
    }
    norms_[i] = std::sqrt(sq);
  }
}

bool EmbeddingStore::contains(std::string_view term) const {
  return find(term).has_value();
}

std::optional<std::size_t> EmbeddingStore::find(std::string_view term) const {
  auto it = std::lower_bound(
      term_lookup_.begin(), term_lookup_.end(), term,
      [&](std::size_t a, std::string_view t) { return terms_[a] < t; });
  if (it != term_lookup_.end() && terms_[*it] == term) return *it;
  return std::nullopt;
}

std::size_t EmbeddingStore::index_of(std::string_view term) const {
  auto idx = find(term);
  if (!idx) throw NotFoundError("term not in vocabulary: " + std::string(term));
  return *idx;
}

namespace {

template <typename U, typename V>
double cosine_impl(std::span<const U> u, std::span<const V> v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine: vector length mismatch");
  }
  double dot = 0.0, uu = 0.0, vv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = static_cast<double>(u[i]);
    const double b = static_cast<double>(v[i]);
    dot += a * b;
    uu += a * a;
    vv += b * b;
  }
  if (uu == 0.0 || vv == 0.0) {
    throw std::domain_error("cosine: zero vector");
  }
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

}  // namespace

double cosine(std::span<const double> u, std::span<const double> v) {
  return cosine_impl(u, v);
}
double cosine(std::span<const float> u, std::span<const float> v) {
  return cosine_impl(u, v);
}
double cosine(std::span<const double> u, std::span<const float> v) {
  return cosine_impl(u, v);
}

template <typename T>
static std::vector<double> perturb_impl(std::span<const T> v,
                                        const NoiseSpec& noise, Rng& rng) {
  std::vector<double> out(v.begin(), v.end());
  const std::vector<double> theta = rng.gaussian_vector(v.size(), noise.sigma);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] += theta[i];
  return out;
}

std::vector<double> perturb(std::span<const float> v, const NoiseSpec& noise,
                            Rng& rng) {
  return perturb_impl(v, noise, rng);
}
std::vector<double> perturb(std::span<const double> v, const NoiseSpec& noise,
                            Rng& rng) {
  return perturb_impl(v, noise, rng);
}

namespace {

// Shared body of the serial and OpenMP scans; the per-term arithmetic is a
// single code path so the two variants produce bit-identical results.
inline double scan_one(const EmbeddingStore& store, const double* q,
                       double q_norm, std::size_t i) {
  const float* v = store.vector_at(i).data();
  const std::size_t d = store.dim();
  double dot = 0.0;
  for (std::size_t j = 0; j < d; ++j) dot += q[j] * static_cast<double>(v[j]);
  const double sim = dot / (q_norm * store.norm_at(i));
  return std::clamp(sim, -1.0, 1.0);
}

double query_norm_checked(std::span<const double> query, std::size_t dim) {
  if (query.size() != dim) {
    throw std::invalid_argument("similarity scan: query dimension mismatch");
  }
  double sq = 0.0;
  for (double x : query) sq += x * x;
  if (sq == 0.0) throw std::domain_error("similarity scan: zero query vector");
  return std::sqrt(sq);
}

}  // namespace

void similarity_scan(const EmbeddingStore& store, std::span<const double> query,
                     std::span<double> out) {
  const double q_norm = query_norm_checked(query, store.dim());
  const std::int64_t n = static_cast<std::int64_t>(store.size());
  const double* q = query.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        scan_one(store, q, q_norm, static_cast<std::size_t>(i));
  }
}

void similarity_scan_serial(const EmbeddingStore& store,
                            std::span<const double> query,
                            std::span<double> out) {
  const double q_norm = query_norm_checked(query, store.dim());
  const double* q = query.data();
  for (std::size_t i = 0; i < store.size(); ++i) {
    out[i] = scan_one(store, q, q_norm, i);
  }
}

std::vector<std::pair<std::string, double>> nearest_neighbors(
    const EmbeddingStore& store, std::span<const double> query, std::size_t n,
    const std::set<std::string>& exclude) {
  std::vector<std::size_t> candidates;
  candidates.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (!exclude.contains(store.term(i))) candidates.push_back(i);
  }
  if (n > candidates.size()) {
    throw std::invalid_argument(
        "nearest_neighbors: n exceeds available candidates (" +
        std::to_string(n) + " > " + std::to_string(candidates.size()) + ")");
  }

  std::vector<double> sims(store.size());
  similarity_scan(store, query, sims);

  auto better = [&](std::size_t a, std::size_t b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return store.term(a) < store.term(b);
  };
  if (n < candidates.size()) {
    std::nth_element(candidates.begin(), candidates.begin() + n,
                     candidates.end(), better);
    candidates.resize(n);
  }
  std::sort(candidates.begin(), candidates.end(), better);

  std::vector<std::pair<std::string, double>> out;
  out.reserve(n);
  for (std::size_t i : candidates) out.emplace_back(store.term(i), sims[i]);
  return out;
}

}  // namespace anonsearch
