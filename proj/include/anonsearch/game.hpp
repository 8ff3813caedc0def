#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "anonsearch/decompose.hpp"
#include "anonsearch/embedding.hpp"
#include "anonsearch/index.hpp"

namespace httplib {
class Server;
}

namespace anonsearch {

enum class GameStage { kStage1, kStage2, kDone };
enum class GameOutcome { kPending, kWinStage1, kWinStage2, kLoss };

std::string to_string(GameStage stage);
std::string to_string(GameOutcome outcome);

struct GameRound {
  std::string hidden_query;  // never serialized before resolution
  DecomposedQuery decomposition;
  GameStage stage = GameStage::kStage1;
  GameOutcome outcome = GameOutcome::kPending;
  double alpha = 0.0;
  double rho = 0.0;  // l=1 reconstructability of the decomposition
};

struct GameSession {
  std::string id;
  std::uint64_t seed = 0;
  std::vector<GameRound> rounds;
  std::size_t wins = 0;
  std::size_t completed_rounds = 0;
  std::size_t shuffle_counter = 0;  // nonce for fresh stage-2 shuffles
};

struct GameServiceConfig {
  DecomposeParams defaults;  // sigma/n/m/pool defaults for new sessions
  double min_rho = 0.3;      // only rounds above this are served
  std::string event_log_path;  // empty disables the log
};

// Two-stage query prediction game. Stage 1 shows the shuffled related +
// distractor terms; a wrong guess advances to stage 2, which shows only the
// related terms. Sessions live in memory; every mutation is appended to a
// JSON Lines event log when configured. All operations are serialized by an
// internal mutex.
class GameService {
 public:
  GameService(const EmbeddingStore& store, const InvertedIndex& index,
              std::vector<std::string> query_pool, GameServiceConfig config);

  // Samples hidden queries from the pool (without replacement while
  // possible), decomposes them, and keeps only rounds whose l=1
  // reconstructability exceeds min_rho. Throws ValidationError when no pool
  // query passes the filter.
  std::string create_session(int round_count, double sigma, int n, int m,
                             std::uint64_t seed);

  struct RoundView {
    GameStage stage;
    std::vector<std::string> terms;
  };
  // Stage 1: the transmission order. Stage 2: the related terms, freshly
  // shuffled. Throws NotFoundError / StateError for bad ids or DONE rounds.
  RoundView get_round(const std::string& session_id, std::size_t round_index);

  struct GuessResult {
    GameOutcome outcome;
    GameStage next_stage;
    std::optional<std::string> revealed;  // hidden query, once resolved
  };
  GuessResult submit_guess(const std::string& session_id,
                           std::size_t round_index, const std::string& guess);

  struct SessionStats {
    std::optional<double> stage1_rate;
    std::optional<double> overall_rate;
    std::size_t completed = 0;
    std::size_t total_rounds = 0;
    std::vector<std::pair<double, GameOutcome>> points;  // (alpha, outcome)
  };
  SessionStats session_stats(const std::string& session_id) const;

  // Writes the stats scatter as "alpha,outcome" CSV rows.
  static std::string stats_scatter_csv(const SessionStats& stats);

 private:
  const EmbeddingStore& store_;
  const InvertedIndex& index_;
  std::vector<std::string> pool_;
  GameServiceConfig config_;

  mutable std::mutex mutex_;
  std::map<std::string, GameSession> sessions_;
  std::size_t next_session_ = 1;

  GameSession& locked_session(const std::string& id);
  const GameSession& locked_session(const std::string& id) const;
  void log_event(const std::string& json_line);
};

// Registered routes:
//   POST /api/sessions                      {rounds, sigma, n, m, seed}
//   GET  /api/sessions/{id}/rounds/{i}      -> {stage, terms}
//   POST /api/sessions/{id}/rounds/{i}/guess {guess} -> {outcome, next_stage}
//   GET  /api/sessions/{id}/stats           -> {stage1_rate, overall_rate, points}
// Errors are {code, message} bodies with matching HTTP status classes.
void register_game_routes(httplib::Server& server, GameService& service);

// Blocks serving the API until the process is stopped.
int serve_game(GameService& service, const std::string& host, int port);

}  // namespace anonsearch
