#include "anonsearch/game.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

#include "anonsearch/errors.hpp"
#include "anonsearch/reconstruct.hpp"
#include "anonsearch/rng.hpp"
#include "anonsearch/textio.hpp"

namespace anonsearch {

std::string to_string(GameStage stage) {
  switch (stage) {
    case GameStage::kStage1: return "STAGE1";
    case GameStage::kStage2: return "STAGE2";
    case GameStage::kDone: return "DONE";
  }
  return "DONE";
}

std::string to_string(GameOutcome outcome) {
  switch (outcome) {
    case GameOutcome::kPending: return "PENDING";
    case GameOutcome::kWinStage1: return "WIN_STAGE1";
    case GameOutcome::kWinStage2: return "WIN_STAGE2";
    case GameOutcome::kLoss: return "LOSS";
  }
  return "PENDING";
}

namespace {

std::string normalize_guess(const std::string& raw) {
  std::string s = lowercase_utf8(raw);
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

GameService::GameService(const EmbeddingStore& store,
                         const InvertedIndex& index,
                         std::vector<std::string> query_pool,
                         GameServiceConfig config)
    : store_(store),
      index_(index),
      pool_(std::move(query_pool)),
      config_(std::move(config)) {
  if (pool_.empty()) {
    throw std::invalid_argument("GameService: empty query pool");
  }
}

std::string GameService::create_session(int round_count, double sigma, int n,
                                        int m, std::uint64_t seed) {
  if (round_count <= 0) {
    throw ValidationError("rounds must be positive");
  }
  std::lock_guard<std::mutex> lock(mutex_);

  GameSession session;
  session.seed = seed;
  session.id = "s" + std::to_string(next_session_) + "-" +
               std::to_string(fnv1a64(decimal_int(
                                  static_cast<long long>(next_session_)) +
                              "|" + std::to_string(seed)));
  next_session_++;

  Rng rng(seed);
  std::vector<std::string> order = pool_;
  rng.shuffle(order);

  DecomposeParams params = config_.defaults;
  params.sigma = sigma;
  params.n_related = n;
  params.m_distractors = m;

  const std::size_t max_attempts =
      std::max<std::size_t>(pool_.size(), static_cast<std::size_t>(round_count)) *
      10;
  std::size_t attempt = 0;
  while (session.rounds.size() < static_cast<std::size_t>(round_count) &&
         attempt < max_attempts) {
    const std::string& query = order[attempt % order.size()];
    const std::uint64_t round_seed =
        seed ^ fnv1a64("round|" + decimal_int(static_cast<long long>(attempt)));
    ++attempt;

    if (!store_.contains(query)) continue;
    if (index_.retrieve(query).empty()) continue;

    params.seed = round_seed;
    GameRound round;
    round.hidden_query = query;
    round.decomposition = decompose(store_, query, params);
    round.alpha =
        anonymity(store_, query, round.decomposition.transmission_order);
    const DocSet recon =
        reconstruct_results(index_, round.decomposition.related, 1);
    const auto rho = reconstructability(index_, query, recon);
    if (!rho || *rho <= config_.min_rho) continue;
    round.rho = *rho;
    session.rounds.push_back(std::move(round));
  }

  if (session.rounds.empty()) {
    throw ValidationError(
        "no pool query passes the reconstructability filter (rho > " +
        format_double(config_.min_rho) + ")");
  }
  if (session.rounds.size() < static_cast<std::size_t>(round_count)) {
    throw ValidationError("only assembled " +
                          std::to_string(session.rounds.size()) + " of " +
                          std::to_string(round_count) +
                          " rounds passing the reconstructability filter");
  }

  const std::string id = session.id;
  log_event(nlohmann::json{{"event", "session_created"},
                           {"session", id},
                           {"rounds", session.rounds.size()},
                           {"sigma", sigma},
                           {"n", n},
                           {"m", m},
                           {"seed", seed}}
                .dump());
  sessions_.emplace(id, std::move(session));
  return id;
}

GameSession& GameService::locked_session(const std::string& id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session: " + id);
  return it->second;
}

const GameSession& GameService::locked_session(const std::string& id) const {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session: " + id);
  return it->second;
}

GameService::RoundView GameService::get_round(const std::string& session_id,
                                              std::size_t round_index) {
  std::lock_guard<std::mutex> lock(mutex_);
  GameSession& session = locked_session(session_id);
  if (round_index >= session.rounds.size()) {
    throw NotFoundError("unknown round: " + std::to_string(round_index));
  }
  GameRound& round = session.rounds[round_index];
  if (round.stage == GameStage::kDone) {
    throw StateError("round is finished");
  }
  RoundView view;
  view.stage = round.stage;
  if (round.stage == GameStage::kStage1) {
    view.terms = round.decomposition.transmission_order;
  } else {
    view.terms = round.decomposition.related;
    // Fresh shuffle per view so stage 2 leaks no ordering information.
    Rng rng(session.seed ^
            fnv1a64("shuffle|" + decimal_int(static_cast<long long>(
                                     session.shuffle_counter++))));
    rng.shuffle(view.terms);
  }
  return view;
}

GameService::GuessResult GameService::submit_guess(
    const std::string& session_id, std::size_t round_index,
    const std::string& guess) {
  const std::string normalized = normalize_guess(guess);
  if (normalized.empty()) {
    throw ValidationError("guess must not be empty");
  }
  std::lock_guard<std::mutex> lock(mutex_);
  GameSession& session = locked_session(session_id);
  if (round_index >= session.rounds.size()) {
    throw NotFoundError("unknown round: " + std::to_string(round_index));
  }
  GameRound& round = session.rounds[round_index];
  if (round.stage == GameStage::kDone) {
    throw StateError("round is finished");
  }

  const bool correct = normalized == round.hidden_query;
  GuessResult result{GameOutcome::kPending, GameStage::kDone, std::nullopt};
  if (round.stage == GameStage::kStage1) {
    if (correct) {
      round.outcome = GameOutcome::kWinStage1;
      round.stage = GameStage::kDone;
    } else {
      round.stage = GameStage::kStage2;
    }
  } else {
    round.outcome = correct ? GameOutcome::kWinStage2 : GameOutcome::kLoss;
    round.stage = GameStage::kDone;
  }
  if (round.stage == GameStage::kDone) {
    session.completed_rounds++;
    if (round.outcome != GameOutcome::kLoss) session.wins++;
    result.revealed = round.hidden_query;
  }
  result.outcome = round.outcome;
  result.next_stage = round.stage;

  log_event(nlohmann::json{{"event", "guess"},
                           {"session", session_id},
                           {"round", round_index},
                           {"guess", normalized},
                           {"outcome", to_string(round.outcome)},
                           {"stage", to_string(round.stage)}}
                .dump());
  return result;
}

GameService::SessionStats GameService::session_stats(
    const std::string& session_id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  const GameSession& session = locked_session(session_id);

  SessionStats stats;
  stats.total_rounds = session.rounds.size();
  stats.completed = session.completed_rounds;
  std::size_t stage1_wins = 0, total_wins = 0;
  for (const auto& round : session.rounds) {
    stats.points.emplace_back(round.alpha, round.outcome);
    if (round.outcome == GameOutcome::kWinStage1) ++stage1_wins;
    if (round.outcome == GameOutcome::kWinStage1 ||
        round.outcome == GameOutcome::kWinStage2) {
      ++total_wins;
    }
  }
  if (stats.completed > 0) {
    stats.stage1_rate = static_cast<double>(stage1_wins) /
                        static_cast<double>(stats.completed);
    stats.overall_rate =
        static_cast<double>(total_wins) / static_cast<double>(stats.completed);
  }
  return stats;
}

std::string GameService::stats_scatter_csv(const SessionStats& stats) {
  std::string csv = "alpha,outcome\n";
  for (const auto& [alpha, outcome] : stats.points) {
    csv += format_double(alpha) + "," + to_string(outcome) + "\n";
  }
  return csv;
}

void GameService::log_event(const std::string& json_line) {
  if (config_.event_log_path.empty()) return;
  std::ofstream out(config_.event_log_path, std::ios::app | std::ios::binary);
  out << json_line << "\n";
}

namespace {

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message) {
  res.status = status;
  res.set_content(nlohmann::json{{"code", code}, {"message", message}}.dump(),
                  "application/json");
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const ValidationError& e) {
    send_error(res, 400, "validation_error", e.what());
  } catch (const NotFoundError& e) {
    send_error(res, 404, "not_found", e.what());
  } catch (const StateError& e) {
    send_error(res, 409, "state_error", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal_error", e.what());
  }
}

}  // namespace

void register_game_routes(httplib::Server& server, GameService& service) {
  server.Post("/api/sessions", [&](const httplib::Request& req,
                                   httplib::Response& res) {
    guarded(res, [&] {
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body);
      } catch (const nlohmann::json::exception&) {
        throw ValidationError("request body must be JSON");
      }
      if (!body.contains("rounds")) throw ValidationError("missing 'rounds'");
      const int rounds = body["rounds"].get<int>();
      const double sigma = body.value("sigma", 0.0);
      const int n = body.value("n", 10);
      const int m = body.value("m", 0);
      const std::uint64_t seed = body.value("seed", std::uint64_t{0});
      const std::string id = service.create_session(rounds, sigma, n, m, seed);
      res.set_content(nlohmann::json{{"session_id", id}}.dump(),
                      "application/json");
    });
  });

  server.Get(R"(/api/sessions/([^/]+)/rounds/(\d+))",
             [&](const httplib::Request& req, httplib::Response& res) {
               guarded(res, [&] {
                 const auto view = service.get_round(
                     req.matches[1], std::stoul(req.matches[2]));
                 res.set_content(
                     nlohmann::json{{"stage", to_string(view.stage)},
                                    {"terms", view.terms}}
                         .dump(),
                     "application/json");
               });
             });

  server.Post(R"(/api/sessions/([^/]+)/rounds/(\d+)/guess)",
              [&](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  nlohmann::json body;
                  try {
                    body = nlohmann::json::parse(req.body);
                  } catch (const nlohmann::json::exception&) {
                    throw ValidationError("request body must be JSON");
                  }
                  if (!body.contains("guess")) {
                    throw ValidationError("missing 'guess'");
                  }
                  const auto result = service.submit_guess(
                      req.matches[1], std::stoul(req.matches[2]),
                      body["guess"].get<std::string>());
                  nlohmann::json j{{"outcome", to_string(result.outcome)},
                                   {"next_stage", to_string(result.next_stage)}};
                  if (result.revealed) j["query"] = *result.revealed;
                  res.set_content(j.dump(), "application/json");
                });
              });

  server.Get(R"(/api/sessions/([^/]+)/stats)", [&](const httplib::Request& req,
                                                   httplib::Response& res) {
    guarded(res, [&] {
      const auto stats = service.session_stats(req.matches[1]);
      nlohmann::json points = nlohmann::json::array();
      for (const auto& [alpha, outcome] : stats.points) {
        points.push_back({{"alpha", alpha}, {"outcome", to_string(outcome)}});
      }
      nlohmann::json j{{"completed", stats.completed},
                       {"total_rounds", stats.total_rounds},
                       {"points", points}};
      j["stage1_rate"] = stats.stage1_rate
                             ? nlohmann::json(*stats.stage1_rate)
                             : nlohmann::json(nullptr);
      j["overall_rate"] = stats.overall_rate
                              ? nlohmann::json(*stats.overall_rate)
                              : nlohmann::json(nullptr);
      res.set_content(j.dump(), "application/json");
    });
  });

  server.Get("/", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("anonsearch query prediction game API\n", "text/plain");
  });
}

int serve_game(GameService& service, const std::string& host, int port) {
  httplib::Server server;
  register_game_routes(server, service);
  std::fprintf(stderr, "game service listening on %s:%d\n", host.c_str(), port);
  return server.listen(host, port) ? 0 : 1;
}

}  // namespace anonsearch
