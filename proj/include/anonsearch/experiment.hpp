#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "anonsearch/attack.hpp"
#include "anonsearch/embedding.hpp"
#include "anonsearch/index.hpp"
#include "anonsearch/theory.hpp"

namespace anonsearch {

// Full experiment grid: queries x sigmas x distractor counts x l values,
// attacked at every k in both modes. Loaded from JSON with exactly these
// field names.
struct ExperimentConfig {
  std::string embedding_path;
  std::string corpus_path;  // JSON Lines corpus, or a saved ANONIDX file
  std::vector<std::string> queries;
  std::vector<double> sigmas = {0.0, 0.6, 1.0, 1.4, 1.8};
  std::vector<int> distractor_counts = {0, 20, 40, 60, 120};
  int n_related = 10;
  std::vector<int> l_values = {1};
  std::vector<int> k_values = {1, 2, 3, 4, 5};
  int pool_size = 2000;
  std::uint64_t master_seed = 0;
  std::string output_dir;
};

ExperimentConfig load_experiment_config(const std::string& path);

// Per-cell seed: master_seed XOR FNV-1a64 over
// "<query>|<sigma>|<m>|<n>|<l>" with reals rendered by decimal_real().
// Pure in the config, so editing the grid never disturbs other cells.
std::uint64_t derive_cell_seed(std::uint64_t master_seed,
                               const std::string& query, double sigma, int m,
                               int n, int l);

// Seed for the k-cluster attack inside a cell. Shared by the standard and
// conservative runs so both score the identical clustering.
std::uint64_t derive_attack_seed(std::uint64_t cell_seed, int k);

struct CellAttack {
  int k = 0;
  AttackOutcome standard_outcome;
  AttackOutcome conservative_outcome;
};

// One grid cell's results: metrics plus attack outcomes for every k.
struct EvalRecord {
  std::string query;
  double sigma = 0.0;
  int n = 0;
  int m = 0;
  int l = 1;
  std::uint64_t cell_seed = 0;
  double alpha = 0.0;
  std::optional<double> rho;      // empty when |D(A)| = 0
  std::optional<double> log_rho;  // empty when rho undefined or zero
  std::size_t ground_truth_size = 0;
  std::size_t reconstructed_size = 0;
  std::vector<std::string> related;
  std::vector<std::string> distractors;
  std::vector<std::string> transmission_order;
  std::vector<CellAttack> attacks;
};

struct RunResult {
  std::vector<EvalRecord> records;           // grid order
  std::vector<std::string> skipped_queries;  // missing from store or index
  std::vector<std::string> cell_errors;      // "<cell>: <message>"
  std::size_t kmeans_violations = 0;  // objective increases, should be zero
};

// Runs the grid in memory. Cells execute in parallel (OpenMP); every cell
// derives its own seed, so results are independent of the thread count.
RunResult run_grid(const EmbeddingStore& store, const InvertedIndex& index,
                   const ExperimentConfig& config);

// Loads inputs, runs the grid, writes records.csv, fits.csv, hitrates.csv,
// attacks.csv, report.json and plots/ under config.output_dir.
RunResult run_experiment(const ExperimentConfig& config);

struct FitRow {
  double sigma = 0.0;
  int m = 0;
  int l = 1;
  std::optional<TheoryFit> fit;  // empty when the cell is degenerate
  std::size_t n_points = 0;
  std::size_t dropped_zero_rho = 0;
  double norm_cv = 0.0;  // coefficient of variation of related-term norms
};

struct HitRateRow {
  double sigma = 0.0;
  int m = 0;
  int k = 1;
  bool conservative = false;
  std::size_t attacks = 0;
  std::size_t hits = 0;
};

std::vector<FitRow> compute_fits(const EmbeddingStore& store,
                                 const std::vector<EvalRecord>& records,
                                 const ExperimentConfig& config);
std::vector<HitRateRow> compute_hitrates(const std::vector<EvalRecord>& records,
                                         const ExperimentConfig& config);

// Writes all output files for an already-computed run.
void write_outputs(const RunResult& result, const EmbeddingStore& store,
                   const ExperimentConfig& config);

// Per-panel scatter files (alpha,log_rho rows plus a #fit trailer) and
// hit-rate bar data, one panel per (sigma, m) group.
void emit_plot_data(const EmbeddingStore& store,
                    const std::vector<EvalRecord>& records,
                    const ExperimentConfig& config, const std::string& dir);

}  // namespace anonsearch
