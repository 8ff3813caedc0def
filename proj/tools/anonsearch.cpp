// anonsearch CLI: index a corpus, decompose queries, run experiment grids,
// attack term sets, generate the synthetic desk dataset, and serve the query
// prediction game.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "anonsearch/attack.hpp"
#include "anonsearch/decompose.hpp"
#include "anonsearch/embedding.hpp"
#include "anonsearch/errors.hpp"
#include "anonsearch/experiment.hpp"
#include "anonsearch/game.hpp"
#include "anonsearch/index.hpp"
#include "anonsearch/synthetic.hpp"
#include "anonsearch/textio.hpp"

namespace {

using namespace anonsearch;

// Single-token queries only: multi-token input would silently turn into a
// conjunctive query, which the retrieval model does not cover.
std::string require_single_token(const std::string& raw) {
  const auto tokens = tokenize(raw);
  if (tokens.size() != 1) {
    throw ValidationError("query must be a single token, got " +
                          std::to_string(tokens.size()) + " in '" + raw + "'");
  }
  return tokens[0];
}

int cmd_index(const std::string& corpus, const std::string& out) {
  InvertedIndex index = InvertedIndex::build_from_jsonl(corpus);
  index.save(out);
  std::fprintf(stderr, "indexed %zu documents, %zu tokens -> %s\n",
               index.doc_count(), index.postings().size(), out.c_str());
  return 0;
}

int cmd_decompose(const std::string& embeddings, const std::string& raw_query,
                  double sigma, int n, int m, std::uint64_t seed,
                  int pool_size) {
  const EmbeddingStore store = EmbeddingStore::load(embeddings);
  const std::string query = require_single_token(raw_query);

  DecomposeParams params;
  params.sigma = sigma;
  params.n_related = n;
  params.m_distractors = m;
  params.pool_size = pool_size;
  params.seed = seed;

  const DecomposedQuery dq = decompose(store, query, params);
  nlohmann::json j{{"query", dq.original},
                   {"related", dq.related},
                   {"distractors", dq.distractors},
                   {"order", dq.transmission_order},
                   {"seed", seed}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_eval(const std::string& config_path) {
  const ExperimentConfig config = load_experiment_config(config_path);
  const RunResult result = run_experiment(config);
  std::fprintf(stderr,
               "wrote %zu records to %s (%zu queries skipped, %zu cell "
               "errors, %zu k-means violations)\n",
               result.records.size(), config.output_dir.c_str(),
               result.skipped_queries.size(), result.cell_errors.size(),
               result.kmeans_violations);
  return result.cell_errors.empty() ? 0 : 2;
}

int cmd_attack(const std::string& embeddings, const std::string& terms_path,
               int k, bool conservative, std::uint64_t seed,
               const std::string& truth) {
  const EmbeddingStore store = EmbeddingStore::load(embeddings);

  std::ifstream in(terms_path);
  if (!in) throw ParseError("cannot open terms file: " + terms_path);
  nlohmann::json j;
  in >> j;
  std::vector<std::string> terms;
  if (j.is_array()) {
    terms = j.get<std::vector<std::string>>();
  } else if (j.is_object() && j.contains("terms")) {
    terms = j["terms"].get<std::vector<std::string>>();
  } else {
    throw ParseError("terms file must be a JSON array or {\"terms\": [...]}");
  }

  AttackParams params;
  params.k = k;
  params.seed = seed;
  params.conservative = conservative;

  Rng rng(seed);
  const AttackOutcome outcome =
      attack_guess(store, terms, params, lowercase_utf8(truth), rng);

  nlohmann::json out{{"guesses", outcome.guesses},
                     {"coherences", outcome.per_cluster_coherence},
                     {"chosen_cluster_coherence",
                      outcome.chosen_cluster_coherence}};
  if (!truth.empty()) out["hit"] = outcome.hit;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_synth(const std::string& out_dir, std::uint64_t seed,
              std::size_t vocab, std::size_t dim, std::size_t topics,
              std::size_t docs) {
  SyntheticWorldConfig config;
  config.seed = seed;
  config.vocab_size = vocab;
  config.dim = dim;
  config.topic_count = topics;
  config.doc_count = docs;
  config.planted_queries = default_query_terms();
  const SyntheticWorld world = make_world(config);
  write_world(world, out_dir);
  std::fprintf(stderr,
               "wrote %zu-term embeddings, %zu-doc corpus and %zu queries to "
               "%s\n",
               world.rows.size(), world.docs.size(), world.queries.size(),
               out_dir.c_str());
  return 0;
}

int cmd_game_serve(const std::string& embeddings, const std::string& index_path,
                   const std::string& queries_path, int port, double sigma,
                   int n, int m, double min_rho,
                   const std::string& event_log) {
  const EmbeddingStore store = EmbeddingStore::load(embeddings);
  const InvertedIndex index = InvertedIndex::load(index_path);

  std::ifstream in(queries_path);
  if (!in) throw ParseError("cannot open query file: " + queries_path);
  std::vector<std::string> pool;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) pool.push_back(lowercase_utf8(line));
  }

  GameServiceConfig config;
  config.defaults.sigma = sigma;
  config.defaults.n_related = n;
  config.defaults.m_distractors = m;
  config.min_rho = min_rho;
  config.event_log_path = event_log;

  GameService service(store, index, std::move(pool), config);
  return serve_game(service, "0.0.0.0", port);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"query anonymisation by semantic decomposition"};
  app.require_subcommand(1);

  // index
  auto* index_cmd = app.add_subcommand("index", "build an inverted index");
  std::string corpus_path, index_out;
  index_cmd->add_option("--corpus", corpus_path, "JSON Lines corpus")
      ->required();
  index_cmd->add_option("--out", index_out, "output index file")->required();

  // decompose
  auto* dec_cmd = app.add_subcommand("decompose", "decompose a query");
  std::string embeddings_path, query;
  double sigma = 0.0;
  int n_related = 10, m_distractors = 0, pool_size = 2000;
  std::uint64_t seed = 0;
  dec_cmd->add_option("--embeddings", embeddings_path, "word vector file")
      ->required();
  dec_cmd->add_option("--query", query, "query term")->required();
  dec_cmd->add_option("--sigma", sigma, "noise standard deviation");
  dec_cmd->add_option("--n", n_related, "related term count");
  dec_cmd->add_option("--m", m_distractors, "distractor count");
  dec_cmd->add_option("--seed", seed, "random seed");
  dec_cmd->add_option("--pool-size", pool_size, "distractor candidate pool");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "run an experiment grid");
  std::string config_path;
  eval_cmd->add_option("--config", config_path, "experiment config JSON")
      ->required();
  int threads = 0;
  eval_cmd->add_option("--threads", threads,
                       "OpenMP thread count (0 = runtime default)");

  // attack
  auto* attack_cmd = app.add_subcommand("attack", "cluster received terms");
  std::string terms_path, truth;
  int k = 1;
  bool conservative = false;
  attack_cmd->add_option("--embeddings", embeddings_path, "word vector file")
      ->required();
  attack_cmd->add_option("--terms", terms_path, "JSON term list")->required();
  attack_cmd->add_option("--k", k, "cluster count");
  attack_cmd->add_flag("--conservative", conservative,
                       "guess from every cluster");
  attack_cmd->add_option("--seed", seed, "random seed");
  attack_cmd->add_option("--truth", truth,
                         "true query, for hit scoring only");

  // synth
  auto* synth_cmd =
      app.add_subcommand("synth", "generate the synthetic desk dataset");
  std::string out_dir = "desk_data";
  std::uint64_t synth_seed = 20151201;
  std::size_t vocab = 50000, dim = 64, topics = 200, docs = 6000;
  synth_cmd->add_option("--out-dir", out_dir, "output directory");
  synth_cmd->add_option("--seed", synth_seed, "generator seed");
  synth_cmd->add_option("--vocab", vocab, "vocabulary size");
  synth_cmd->add_option("--dim", dim, "embedding dimension");
  synth_cmd->add_option("--topics", topics, "topic count");
  synth_cmd->add_option("--docs", docs, "document count");

  // game serve
  auto* game_cmd = app.add_subcommand("game", "query prediction game");
  auto* serve_cmd = game_cmd->add_subcommand("serve", "serve the game API");
  std::string index_path, queries_path, event_log;
  int port = 8080;
  double game_sigma = 1.0, min_rho = 0.3;
  int game_n = 10, game_m = 40;
  serve_cmd->add_option("--embeddings", embeddings_path, "word vector file")
      ->required();
  serve_cmd->add_option("--index", index_path, "saved index file")->required();
  serve_cmd->add_option("--queries", queries_path, "query pool file")
      ->required();
  serve_cmd->add_option("--port", port, "listen port");
  serve_cmd->add_option("--sigma", game_sigma, "default noise level");
  serve_cmd->add_option("--n", game_n, "default related term count");
  serve_cmd->add_option("--m", game_m, "default distractor count");
  serve_cmd->add_option("--min-rho", min_rho,
                        "serve only rounds with rho above this");
  serve_cmd->add_option("--event-log", event_log, "JSON Lines event log path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*index_cmd) return cmd_index(corpus_path, index_out);
    if (*dec_cmd) {
      return cmd_decompose(embeddings_path, query, sigma, n_related,
                           m_distractors, seed, pool_size);
    }
    if (*eval_cmd) {
      if (threads > 0) {
#ifdef _OPENMP
        omp_set_num_threads(threads);
#endif
      }
      return cmd_eval(config_path);
    }
    if (*attack_cmd) {
      return cmd_attack(embeddings_path, terms_path, k, conservative, seed,
                        truth);
    }
    if (*synth_cmd) {
      return cmd_synth(out_dir, synth_seed, vocab, dim, topics, docs);
    }
    if (*serve_cmd) {
      return cmd_game_serve(embeddings_path, index_path, queries_path, port,
                            game_sigma, game_n, game_m, min_rho, event_log);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
