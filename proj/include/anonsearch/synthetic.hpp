#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "anonsearch/index.hpp"

namespace anonsearch {

// Desk-scale synthetic world: a topic-structured vocabulary with embedding
// vectors, and a corpus drawn from a per-topic Zipf unigram model over that
// vocabulary. Tokens of one topic cluster around a shared direction, so
// embedding neighborhoods and document co-occurrence agree the way they do
// for real corpora. Planted query tokens sit near their topic's center and
// get a high within-topic frequency rank.
struct SyntheticWorldConfig {
  std::size_t vocab_size = 50000;
  std::size_t dim = 64;
  std::size_t topic_count = 200;
  std::size_t doc_count = 6000;
  int doc_len_min = 60;
  int doc_len_max = 140;
  double token_spread = 0.11;   // perpendicular noise scale per dimension
  double query_centrality = 0.25;  // planted queries use spread * this
  double norm_mean = 6.5;
  double norm_log_sigma = 0.15;
  double zipf_exponent = 1.05;
  double background_fraction = 0.08;  // off-topic positions per document
  std::size_t query_rank = 5;  // planted queries' within-topic frequency rank
  std::uint64_t seed = 20151201;
  std::vector<std::string> planted_queries;  // <= topic_count entries
};

struct SyntheticWorld {
  std::size_t dim = 0;
  std::vector<std::pair<std::string, std::vector<float>>> rows;
  std::vector<RawDoc> docs;
  std::vector<std::string> queries;  // the planted query tokens
};

SyntheticWorld make_world(const SyntheticWorldConfig& config);

// The 50 evaluation queries shipped as the default query list.
const std::vector<std::string>& default_query_terms();

// Writes embeddings.txt, corpus.jsonl, queries.txt and eval_config.json
// under `dir`.
void write_world(const SyntheticWorld& world, const std::string& dir,
                 std::uint64_t eval_master_seed = 1);

}  // namespace anonsearch
