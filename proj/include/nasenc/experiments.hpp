#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nasenc/experiment_config.hpp"
#include "nasenc/tuning.hpp"

namespace nasenc {

/// Relative path and content of every file an experiment emits.
using ExperimentFiles = std::vector<std::pair<std::string, std::string>>;

/// Each file goes to `dir / path` via temp file and rename.
void write_experiment(const ExperimentFiles& files, const std::filesystem::path& dir);

/// Loads the benchmark, runs `config.kind`, and renders its files
/// (config.json echo first).
ExperimentFiles run_experiment(const ExperimentConfig& config, int workers = 1);

// -- ablation ------------------------------------------------------------------

/// Throws ConfigError when the cells of one algorithm differ in more than one
/// subroutine slot, or when the matrix is empty.
void check_ablation_matrix(std::span<const CellConfig> cells, const SpecPtr& spec);

struct CurvePoint {
  double time;
  int reporting;  // trials with at least one query by `time`
  double mean_test_error, stderr_test_error;
  double mean_val_error, stderr_val_error;
};

/// Evenly spaced times up to the time budget, or up to the latest event when
/// only queries are budgeted.
std::vector<double> checkpoint_times(std::span<const std::vector<RunTrace>> cells,
                                     const Budget& budget, int count);
std::vector<CurvePoint> summarize_curve(std::span<const RunTrace> trials,
                                        std::span<const double> times);

struct AblationResult {
  std::vector<CellConfig> cells;
  std::vector<std::vector<RunTrace>> traces;  // cell x trial
};

AblationResult run_ablation(const ExperimentConfig& config, const TabularBenchmark& bench,
                            int workers = 1);
/// Each of these is a pure function of the traces, so it can be recomputed
/// from the trace files. Summary: final errors per cell.
std::string ablation_summary_csv(const AblationResult& result);
/// Mean and standard error of the best test error at each checkpoint time.
std::string ablation_curves_csv(const AblationResult& result, const Budget& budget, int checkpoints);
/// Per trial and checkpoint: best validation error and its test error.
std::string ablation_trials_csv(const AblationResult& result, const Budget& budget,
                                int checkpoints);
std::string trace_file_name(std::size_t cell, int trial);

// -- truncation sweep ------------------------------------------------------------

struct TruncationPoint {
  std::string family;  // family name
  std::size_t bits = 0;
  bool full = false;  // untruncated baseline
  std::string error;  // non-empty when the cell could not run
  std::vector<double> final_test;  // per trial
  std::vector<double> final_val;
  std::vector<RunTrace> traces;
};

/// Bit counts swept when the config lists none.
std::vector<std::size_t> default_truncation_bits(const SpecPtr& spec);
std::vector<TruncationPoint> run_truncation_sweep(const ExperimentConfig& config,
                                                  const TabularBenchmark& bench, int workers = 1);
std::string truncation_csv(std::span<const TruncationPoint> points);

// -- outside the training search space --------------------------------------------

struct Partition {
  std::vector<std::size_t> train;  // indices into bench.entries()
  std::vector<std::size_t> test;
};

/// Throws ConfigError when the predicates can overlap and Error when a side
/// is empty (message carries both sizes).
Partition partition_benchmark(const TabularBenchmark& bench, const OutsideSettings& settings);

struct TopSummary {
  double top_val, top_test;  // averages over the `top` predicted-best
  double best_val, best_test;  // the single predicted-best
};

/// Ranks by prediction (lower first, index order on ties) and reads the truth.
TopSummary top_k_summary(std::span<const double> predicted, std::span<const double> val,
                         std::span<const double> test, int top);

struct OutsideRow {
  std::string encoding;
  std::vector<TopSummary> trials;
};

std::vector<OutsideRow> run_outside_search_space(const ExperimentConfig& config,
                                                 const TabularBenchmark& bench, int workers = 1);
std::string outside_csv(std::span<const OutsideRow> rows);

// -- b(k, x) curves ----------------------------------------------------------------

std::string bcurve_csv(const BCurveSettings& settings, std::uint64_t seed);

}  // namespace nasenc
