#include "anonsearch/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "anonsearch/errors.hpp"
#include "anonsearch/rng.hpp"
#include "anonsearch/textio.hpp"

namespace anonsearch {

const std::vector<std::string>& default_query_terms() {
  static const std::vector<std::string> kQueries = {
      "airfield",   "alex",       "anthropology", "antoine",       "antony",
      "autonomous", "belfast",    "ben",          "benares",       "benet",
      "benz",       "biodiversity", "broadway",   "carol",         "commercial",
      "consciousness", "crown",   "custer",       "earths",        "elena",
      "gallery",    "haddad",     "haig",         "helmut",        "hughes",
      "hugo",       "irit",       "judith",       "kahn",          "katarina",
      "leith",      "marshal",    "masaaki",      "memorial",      "negro",
      "oakley",     "outlaw",     "product",      "rings",         "runaway",
      "sammy",      "santa",      "sine",         "stawell",       "steve",
      "toole",      "tube",       "wait",         "wilkerson",     "angel"};
  return kQueries;
}

namespace {

// Pronounceable pseudo-word from a counter: base-85 digits over CV syllables.
std::string pseudo_word(std::size_t counter) {
  static const char* consonants = "bdfghjklmnprstvwz";  // 17
  static const char* vowels = "aeiou";                  // 5
  std::string word;
  std::size_t x = counter;
  do {
    const std::size_t syllable = x % 85;
    x /= 85;
    word += consonants[syllable / 5];
    word += vowels[syllable % 5];
  } while (x > 0);
  return word;
}

std::vector<double> unit_gaussian_direction(Rng& rng, std::size_t dim) {
  std::vector<double> v = rng.gaussian_vector(dim, 1.0);
  double n = 0.0;
  for (double x : v) n += x * x;
  const double inv = 1.0 / std::sqrt(n);
  for (double& x : v) x *= inv;
  return v;
}

}  // namespace

SyntheticWorld make_world(const SyntheticWorldConfig& config) {
  if (config.planted_queries.size() > config.topic_count) {
    throw std::invalid_argument("make_world: more queries than topics");
  }
  const std::size_t per_topic =
      config.vocab_size / std::max<std::size_t>(1, config.topic_count);
  if (config.query_rank >= per_topic) {
    throw std::invalid_argument("make_world: query_rank beyond topic vocab");
  }

  Rng rng(config.seed);
  SyntheticWorld world;
  world.dim = config.dim;

  // Topic centers: independent random unit directions.
  std::vector<std::vector<double>> centers;
  centers.reserve(config.topic_count);
  for (std::size_t t = 0; t < config.topic_count; ++t) {
    centers.push_back(unit_gaussian_direction(rng, config.dim));
  }

  // Vocabulary. Token i belongs to topic i % topic_count with within-topic
  // frequency rank i / topic_count. Planted queries replace the token at
  // query_rank in their topic.
  std::unordered_set<std::string> used(config.planted_queries.begin(),
                                       config.planted_queries.end());
  std::vector<std::string> names(config.vocab_size);
  std::size_t counter = 0;
  for (std::size_t i = 0; i < config.vocab_size; ++i) {
    std::string w;
    do {
      w = pseudo_word(counter++);
    } while (used.contains(w));
    used.insert(w);
    names[i] = std::move(w);
  }
  for (std::size_t q = 0; q < config.planted_queries.size(); ++q) {
    const std::size_t slot = config.query_rank * config.topic_count + q;
    names[slot] = config.planted_queries[q];
    world.queries.push_back(config.planted_queries[q]);
  }

  world.rows.reserve(config.vocab_size);
  for (std::size_t i = 0; i < config.vocab_size; ++i) {
    const std::size_t topic = i % config.topic_count;
    const std::size_t rank = i / config.topic_count;
    const bool is_query =
        rank == config.query_rank && topic < config.planted_queries.size();
    const double spread =
        config.token_spread * (is_query ? config.query_centrality : 1.0);

    std::vector<double> v = rng.gaussian_vector(config.dim, spread);
    for (std::size_t j = 0; j < config.dim; ++j) v[j] += centers[topic][j];
    double n = 0.0;
    for (double x : v) n += x * x;
    const double norm =
        config.norm_mean * std::exp(config.norm_log_sigma * rng.gaussian());
    const double scale = norm / std::sqrt(n);

    std::vector<float> row(config.dim);
    for (std::size_t j = 0; j < config.dim; ++j) {
      row[j] = static_cast<float>(v[j] * scale);
    }
    world.rows.emplace_back(names[i], std::move(row));
  }

  // Zipf cumulative weights over within-topic ranks.
  std::vector<double> zipf_cum(per_topic);
  {
    double acc = 0.0;
    for (std::size_t r = 0; r < per_topic; ++r) {
      acc += 1.0 / std::pow(static_cast<double>(r + 1), config.zipf_exponent);
      zipf_cum[r] = acc;
    }
  }
  auto sample_rank = [&](Rng& r) {
    const double x = r.uniform() * zipf_cum.back();
    return static_cast<std::size_t>(
        std::lower_bound(zipf_cum.begin(), zipf_cum.end(), x) -
        zipf_cum.begin());
  };

  // Corpus: each document draws from one topic's unigram model, with a few
  // background positions from random topics.
  world.docs.reserve(config.doc_count);
  const int len_span = config.doc_len_max - config.doc_len_min + 1;
  for (std::size_t d = 0; d < config.doc_count; ++d) {
    const std::size_t topic = rng.below(config.topic_count);
    const int len = config.doc_len_min + static_cast<int>(rng.below(len_span));
    std::string text;
    for (int p = 0; p < len; ++p) {
      const bool background = rng.uniform() < config.background_fraction;
      const std::size_t t = background ? rng.below(config.topic_count) : topic;
      const std::size_t rank = sample_rank(rng);
      if (p) text += ' ';
      text += names[rank * config.topic_count + t];
    }
    char id[16];
    std::snprintf(id, sizeof(id), "d%06zu", d);
    world.docs.push_back(RawDoc{id, std::move(text)});
  }
  return world;
}

void write_world(const SyntheticWorld& world, const std::string& dir,
                 std::uint64_t eval_master_seed) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base(dir);

  {
    std::ofstream out(base / "embeddings.txt", std::ios::binary);
    if (!out) throw ParseError("cannot write embeddings.txt");
    for (const auto& [term, vec] : world.rows) {
      out << term;
      for (float x : vec) {
        char buf[32];
        auto res = std::to_chars(buf, buf + sizeof(buf), x);
        out << ' ' << std::string_view(buf, res.ptr - buf);
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(base / "corpus.jsonl", std::ios::binary);
    if (!out) throw ParseError("cannot write corpus.jsonl");
    for (const auto& doc : world.docs) {
      out << nlohmann::json{{"id", doc.id}, {"text", doc.text}}.dump() << "\n";
    }
  }
  {
    std::ofstream out(base / "queries.txt", std::ios::binary);
    if (!out) throw ParseError("cannot write queries.txt");
    for (const auto& q : world.queries) out << q << "\n";
  }
  {
    nlohmann::json j;
    j["embedding_path"] = (base / "embeddings.txt").string();
    j["corpus_path"] = (base / "corpus.jsonl").string();
    j["queries"] = world.queries;
    j["output_dir"] = (base / "eval_out").string();
    j["master_seed"] = eval_master_seed;
    std::ofstream out(base / "eval_config.json", std::ios::binary);
    if (!out) throw ParseError("cannot write eval_config.json");
    out << j.dump(2) << "\n";
  }
}

}  // namespace anonsearch
