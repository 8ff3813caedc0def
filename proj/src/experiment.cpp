#include "anonsearch/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "anonsearch/decompose.hpp"
#include "anonsearch/errors.hpp"
#include "anonsearch/reconstruct.hpp"
#include "anonsearch/textio.hpp"

namespace anonsearch {

namespace {

constexpr const char* kNA = "NA";

std::string opt_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string(kNA);
}

void validate(const ExperimentConfig& c) {
  if (c.queries.empty()) throw std::invalid_argument("config: queries empty");
  if (c.sigmas.empty()) throw std::invalid_argument("config: sigmas empty");
  if (c.distractor_counts.empty()) {
    throw std::invalid_argument("config: distractor_counts empty");
  }
  if (c.l_values.empty()) throw std::invalid_argument("config: l_values empty");
  if (c.k_values.empty()) throw std::invalid_argument("config: k_values empty");
  if (c.n_related <= 0) throw std::invalid_argument("config: n_related <= 0");
  if (c.pool_size <= 0) throw std::invalid_argument("config: pool_size <= 0");
  for (double s : c.sigmas) {
    if (s < 0.0) throw std::invalid_argument("config: negative sigma");
  }
  for (int m : c.distractor_counts) {
    if (m < 0) throw std::invalid_argument("config: negative distractor count");
    if (m > c.pool_size) {
      throw std::invalid_argument("config: distractor count exceeds pool_size");
    }
  }
  for (int l : c.l_values) {
    if (l < 1 || l > c.n_related) {
      throw std::invalid_argument("config: l outside [1, n_related]");
    }
  }
  for (int k : c.k_values) {
    if (k < 1) throw std::invalid_argument("config: k < 1");
  }
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config parse error: " + std::string(e.what()));
  }

  ExperimentConfig c;
  try {
    c.embedding_path = j.at("embedding_path").get<std::string>();
    c.corpus_path = j.at("corpus_path").get<std::string>();
    c.queries = j.at("queries").get<std::vector<std::string>>();
    c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("sigmas")) c.sigmas = j["sigmas"].get<std::vector<double>>();
    if (j.contains("distractor_counts")) {
      c.distractor_counts = j["distractor_counts"].get<std::vector<int>>();
    }
    if (j.contains("n_related")) c.n_related = j["n_related"].get<int>();
    if (j.contains("l_values")) c.l_values = j["l_values"].get<std::vector<int>>();
    if (j.contains("k_values")) c.k_values = j["k_values"].get<std::vector<int>>();
    if (j.contains("pool_size")) c.pool_size = j["pool_size"].get<int>();
    if (j.contains("master_seed")) {
      c.master_seed = j["master_seed"].get<std::uint64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config field error: " + std::string(e.what()));
  }
  validate(c);
  return c;
}

std::uint64_t derive_cell_seed(std::uint64_t master_seed,
                               const std::string& query, double sigma, int m,
                               int n, int l) {
  const std::string key = query + "|" + decimal_real(sigma) + "|" +
                          decimal_int(m) + "|" + decimal_int(n) + "|" +
                          decimal_int(l);
  return master_seed ^ fnv1a64(key);
}

std::uint64_t derive_attack_seed(std::uint64_t cell_seed, int k) {
  return cell_seed ^ fnv1a64("attack|" + decimal_int(k));
}

namespace {

EvalRecord eval_cell(const EmbeddingStore& store, const InvertedIndex& index,
                     const ExperimentConfig& config, const std::string& query,
                     double sigma, int m, int l) {
  EvalRecord rec;
  rec.query = query;
  rec.sigma = sigma;
  rec.n = config.n_related;
  rec.m = m;
  rec.l = l;
  rec.cell_seed =
      derive_cell_seed(config.master_seed, query, sigma, m, config.n_related, l);

  DecomposeParams params;
  params.n_related = config.n_related;
  params.m_distractors = m;
  params.sigma = sigma;
  params.pool_size = config.pool_size;
  params.seed = rec.cell_seed;

  Rng rng(rec.cell_seed);
  DecomposedQuery dq = decompose(store, query, params, rng);
  rec.related = dq.related;
  rec.distractors = dq.distractors;
  rec.transmission_order = dq.transmission_order;

  rec.alpha = anonymity(store, query, rec.transmission_order);
  const DocSet reconstructed = reconstruct_results(index, rec.related, l);
  rec.reconstructed_size = reconstructed.size();
  rec.ground_truth_size = index.retrieve(query).size();
  rec.rho = reconstructability(index, query, reconstructed);
  if (rec.rho && *rec.rho > 0.0) rec.log_rho = std::log(*rec.rho);

  const int received = static_cast<int>(rec.transmission_order.size());
  for (int k : config.k_values) {
    if (k > received) continue;
    CellAttack ca;
    ca.k = k;
    AttackParams ap;
    ap.k = k;
    ap.seed = derive_attack_seed(rec.cell_seed, k);

    Rng std_rng(ap.seed);
    ap.conservative = false;
    ca.standard_outcome =
        attack_guess(store, rec.transmission_order, ap, query, std_rng);

    Rng cons_rng(ap.seed);
    ap.conservative = true;
    ca.conservative_outcome =
        attack_guess(store, rec.transmission_order, ap, query, cons_rng);

    rec.attacks.push_back(std::move(ca));
  }
  return rec;
}

std::size_t count_objective_violations(const std::vector<double>& trace) {
  std::size_t v = 0;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i] > trace[i - 1]) ++v;
  }
  return v;
}

}  // namespace

RunResult run_grid(const EmbeddingStore& store, const InvertedIndex& index,
                   const ExperimentConfig& config) {
  validate(config);
  RunResult result;

  std::vector<std::string> usable;
  for (const auto& q : config.queries) {
    if (!store.contains(q)) {
      result.skipped_queries.push_back(q + " (not in vocabulary)");
    } else if (index.retrieve(q).empty()) {
      result.skipped_queries.push_back(q + " (no documents)");
    } else {
      usable.push_back(q);
    }
  }

  struct Cell {
    std::string query;
    double sigma;
    int m;
    int l;
  };
  std::vector<Cell> cells;
  for (const auto& q : usable) {
    for (double sigma : config.sigmas) {
      for (int m : config.distractor_counts) {
        for (int l : config.l_values) {
          cells.push_back({q, sigma, m, l});
        }
      }
    }
  }

  std::vector<std::optional<EvalRecord>> slots(cells.size());
  std::vector<std::string> errors(cells.size());
  const std::int64_t total = static_cast<std::int64_t>(cells.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < total; ++i) {
    const Cell& cell = cells[static_cast<std::size_t>(i)];
    try {
      slots[static_cast<std::size_t>(i)] =
          eval_cell(store, index, config, cell.query, cell.sigma, cell.m, cell.l);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] =
          cell.query + "|" + decimal_real(cell.sigma) + "|" +
          decimal_int(cell.m) + "|" + decimal_int(cell.l) + ": " + e.what();
    }
  }

  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (slots[i]) {
      for (const auto& ca : slots[i]->attacks) {
        result.kmeans_violations +=
            count_objective_violations(ca.standard_outcome.objective_trace);
        result.kmeans_violations +=
            count_objective_violations(ca.conservative_outcome.objective_trace);
      }
      result.records.push_back(std::move(*slots[i]));
    } else {
      result.cell_errors.push_back(errors[i]);
    }
  }
  return result;
}

std::vector<FitRow> compute_fits(const EmbeddingStore& store,
                                 const std::vector<EvalRecord>& records,
                                 const ExperimentConfig& config) {
  std::vector<FitRow> rows;
  for (double sigma : config.sigmas) {
    for (int m : config.distractor_counts) {
      for (int l : config.l_values) {
        FitRow row;
        row.sigma = sigma;
        row.m = m;
        row.l = l;

        std::vector<std::pair<double, double>> points;
        std::vector<double> norms;
        for (const auto& rec : records) {
          if (rec.sigma != sigma || rec.m != m || rec.l != l) continue;
          if (rec.rho && *rec.rho == 0.0) row.dropped_zero_rho++;
          if (rec.log_rho) points.emplace_back(rec.alpha, *rec.log_rho);
          for (const auto& term : rec.related) {
            norms.push_back(store.norm_of(term));
          }
        }
        row.n_points = points.size();

        if (!norms.empty()) {
          double mean = 0.0;
          for (double x : norms) mean += x;
          mean /= static_cast<double>(norms.size());
          double var = 0.0;
          for (double x : norms) var += (x - mean) * (x - mean);
          var /= static_cast<double>(norms.size());
          row.norm_cv = mean > 0.0 ? std::sqrt(var) / mean : 0.0;
        }

        double min_a = 0.0, max_a = 0.0;
        if (!points.empty()) {
          min_a = max_a = points[0].first;
          for (const auto& [a, _] : points) {
            min_a = std::min(min_a, a);
            max_a = std::max(max_a, a);
          }
        }
        if (points.size() >= 3 && min_a < max_a) {
          row.fit = fit_relationship(points);
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::vector<HitRateRow> compute_hitrates(const std::vector<EvalRecord>& records,
                                         const ExperimentConfig& config) {
  std::vector<HitRateRow> rows;
  for (double sigma : config.sigmas) {
    for (int m : config.distractor_counts) {
      for (int k : config.k_values) {
        for (bool conservative : {false, true}) {
          HitRateRow row;
          row.sigma = sigma;
          row.m = m;
          row.k = k;
          row.conservative = conservative;
          for (const auto& rec : records) {
            if (rec.sigma != sigma || rec.m != m) continue;
            for (const auto& ca : rec.attacks) {
              if (ca.k != k) continue;
              const AttackOutcome& o =
                  conservative ? ca.conservative_outcome : ca.standard_outcome;
              row.attacks++;
              row.hits += o.hit ? 1 : 0;
            }
          }
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

namespace {

void write_records_csv(const std::string& path,
                       const std::vector<EvalRecord>& records,
                       const ExperimentConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << "query,sigma,n,m,l,cell_seed,alpha,rho,log_rho,gt_size,recon_size";
  for (int k : config.k_values) {
    out << ",hit_std_k" << k << ",hit_cons_k" << k;
  }
  out << "\n";
  for (const auto& rec : records) {
    out << rec.query << ',' << decimal_real(rec.sigma) << ',' << rec.n << ','
        << rec.m << ',' << rec.l << ',' << rec.cell_seed << ','
        << format_double(rec.alpha) << ',' << opt_field(rec.rho) << ','
        << opt_field(rec.log_rho) << ',' << rec.ground_truth_size << ','
        << rec.reconstructed_size;
    for (int k : config.k_values) {
      auto it = std::find_if(rec.attacks.begin(), rec.attacks.end(),
                             [k](const CellAttack& ca) { return ca.k == k; });
      if (it == rec.attacks.end()) {
        out << ",NA,NA";
      } else {
        out << ',' << (it->standard_outcome.hit ? 1 : 0) << ','
            << (it->conservative_outcome.hit ? 1 : 0);
      }
    }
    out << "\n";
  }
}

void write_fits_csv(const std::string& path, const std::vector<FitRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << "sigma,m,l,slope,intercept,pearson_r,n_points,dropped_zero_rho,"
         "norm_cv\n";
  for (const auto& row : rows) {
    out << decimal_real(row.sigma) << ',' << row.m << ',' << row.l << ',';
    if (row.fit) {
      out << format_double(row.fit->slope) << ','
          << format_double(row.fit->intercept) << ','
          << format_double(row.fit->pearson_r);
    } else {
      out << "NA,NA,NA";
    }
    out << ',' << row.n_points << ',' << row.dropped_zero_rho << ','
        << format_double(row.norm_cv) << "\n";
  }
}

void write_hitrates_csv(const std::string& path,
                        const std::vector<HitRateRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << "sigma,m,k,mode,attacks,hits,hit_rate\n";
  for (const auto& row : rows) {
    out << decimal_real(row.sigma) << ',' << row.m << ',' << row.k << ','
        << (row.conservative ? "conservative" : "standard") << ','
        << row.attacks << ',' << row.hits << ',';
    if (row.attacks == 0) {
      out << "NA";
    } else {
      out << format_double(static_cast<double>(row.hits) /
                           static_cast<double>(row.attacks));
    }
    out << "\n";
  }
}

void write_attacks_csv(const std::string& path,
                       const std::vector<EvalRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << "# query,sigma,n,m,k,mode,hit,guess1..guessk,coherence_max\n";
  for (const auto& rec : records) {
    for (const auto& ca : rec.attacks) {
      for (bool conservative : {false, true}) {
        const AttackOutcome& o =
            conservative ? ca.conservative_outcome : ca.standard_outcome;
        out << rec.query << ',' << decimal_real(rec.sigma) << ',' << rec.n
            << ',' << rec.m << ',' << ca.k << ','
            << (conservative ? "conservative" : "standard") << ','
            << (o.hit ? 1 : 0);
        for (const auto& g : o.guesses) out << ',' << g;
        out << ',' << format_double(o.chosen_cluster_coherence) << "\n";
      }
    }
  }
}

void write_report(const std::string& path, const RunResult& result,
                  const ExperimentConfig& config) {
  nlohmann::json j;
  j["records"] = result.records.size();
  j["grid_cells"] = config.queries.size() * config.sigmas.size() *
                    config.distractor_counts.size() * config.l_values.size();
  j["skipped_queries"] = result.skipped_queries;
  j["cell_errors"] = result.cell_errors;
  j["kmeans_objective_violations"] = result.kmeans_violations;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace

void emit_plot_data(const EmbeddingStore& store,
                    const std::vector<EvalRecord>& records,
                    const ExperimentConfig& config, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const auto fits = compute_fits(store, records, config);
  const auto hitrates = compute_hitrates(records, config);

  for (double sigma : config.sigmas) {
    for (int m : config.distractor_counts) {
      for (int l : config.l_values) {
        const std::string name = "panel_s" + decimal_real(sigma) + "_m" +
                                 decimal_int(m) + "_l" + decimal_int(l) + ".csv";
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        out << "alpha,log_rho\n";
        std::size_t rows = 0;
        for (const auto& rec : records) {
          if (rec.sigma != sigma || rec.m != m || rec.l != l) continue;
          if (!rec.log_rho) continue;
          out << format_double(rec.alpha) << ','
              << format_double(*rec.log_rho) << "\n";
          ++rows;
        }
        auto fit = std::find_if(fits.begin(), fits.end(), [&](const FitRow& f) {
          return f.sigma == sigma && f.m == m && f.l == l;
        });
        if (fit != fits.end() && fit->fit) {
          out << "#fit," << format_double(fit->fit->slope) << ','
              << format_double(fit->fit->intercept) << "\n";
        }
        if (rows == 0) {
          std::fprintf(stderr, "warning: empty panel %s\n", name.c_str());
        }
      }
      const std::string bars = "hitbars_s" + decimal_real(sigma) + "_m" +
                               decimal_int(m) + ".csv";
      std::ofstream out(fs::path(dir) / bars, std::ios::binary);
      out << "k,mode,hit_rate\n";
      for (const auto& row : hitrates) {
        if (row.sigma != sigma || row.m != m || row.attacks == 0) continue;
        out << row.k << ',' << (row.conservative ? "conservative" : "standard")
            << ','
            << format_double(static_cast<double>(row.hits) /
                             static_cast<double>(row.attacks))
            << "\n";
      }
    }
  }
}

void write_outputs(const RunResult& result, const EmbeddingStore& store,
                   const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);
  const fs::path dir(config.output_dir);

  write_records_csv(dir / "records.csv", result.records, config);
  write_fits_csv(dir / "fits.csv", compute_fits(store, result.records, config));
  write_hitrates_csv(dir / "hitrates.csv",
                     compute_hitrates(result.records, config));
  write_attacks_csv(dir / "attacks.csv", result.records);
  write_report(dir / "report.json", result, config);
  emit_plot_data(store, result.records, config, dir / "plots");
}

RunResult run_experiment(const ExperimentConfig& config) {
  const EmbeddingStore store = EmbeddingStore::load(config.embedding_path);

  InvertedIndex index;
  {
    std::ifstream probe(config.corpus_path, std::ios::binary);
    if (!probe) throw ParseError("cannot open corpus: " + config.corpus_path);
    std::string first_line;
    std::getline(probe, first_line);
    probe.close();
    if (first_line.starts_with("ANONIDX ")) {
      index = InvertedIndex::load(config.corpus_path);
    } else {
      index = InvertedIndex::build_from_jsonl(config.corpus_path);
    }
  }

  RunResult result = run_grid(store, index, config);
  write_outputs(result, store, config);
  return result;
}

}  // namespace anonsearch
