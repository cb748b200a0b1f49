#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nasenc/benchmark.hpp"
#include "nasenc/predictor.hpp"

namespace nasenc {

enum class Algorithm { RandomSearch, RegularizedEvolution, LocalSearch, BayesianOptimization, Bananas };

std::string_view algorithm_name(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view name);

/// How BANANAS ranks candidates from the ensemble.
enum class Acquisition { Thompson, Mean, LowerConfidence };
std::string_view acquisition_name(Acquisition a);
std::optional<Acquisition> parse_acquisition(std::string_view name);

/// A run stops at the first query that reaches either limit.
struct Budget {
  std::optional<double> seconds;
  std::optional<std::int64_t> queries;

  bool operator==(const Budget&) const = default;
};

struct EncodingSlots {
  std::optional<EncodingKind> sample;
  std::optional<EncodingKind> perturb;
  std::optional<EncodingKind> predictor;
};

struct AlgorithmParams {
  int population = 30;
  int tournament = 10;
  double mutation = 1.0;  // expected resampled features per perturbation
  int initial_queries = 10;
  int pool_random = 50;     // BO candidates from sample_random
  int pool_mutations = 50;  // BO candidates perturbed from the incumbent
  int parents = 10;
  int mutations_per_parent = 10;
  int batch_size = 1;  // BANANAS queries per trained ensemble
  Acquisition acquisition = Acquisition::Thompson;
  double lcb_weight = 1.0;
  GpParams gp;
  EnsembleParams ensemble;

  bool operator==(const AlgorithmParams&) const = default;
};

struct AlgorithmConfig {
  Algorithm algorithm = Algorithm::RandomSearch;
  EncodingSlots encodings;
  Budget budget;
  AlgorithmParams params;
  std::uint64_t seed = 0;
  bool query_cache = true;
};

struct SlotUse {
  bool sample = false, perturb = false, predictor = false;
};
SlotUse slots_used(Algorithm a);

/// Throws ConfigError on a missing or superfluous slot, a missing budget, or
/// out-of-range parameters; returns non-fatal warnings.
std::vector<std::string> validate(const AlgorithmConfig& config, const SearchSpaceSpec& space);

struct TraceEvent {
  double time;  // cumulative simulated seconds
  std::int64_t queries;
  std::string arch;  // canonical representative, text form
  double val_error;
  double test_error;
  double best_val_error;
  double best_test_error;  // test error of the best-validation architecture
};

struct RunTrace {
  std::vector<TraceEvent> events;
  std::vector<std::string> warnings;
  bool stalled = false;  // stopped because no new architecture turned up

  std::string to_jsonl() const;
  static RunTrace from_jsonl(std::string_view text);
  /// Best-validation test error among events with time <= t (nullopt before the first).
  std::optional<double> test_error_at(double t) const;
  std::optional<double> val_error_at(double t) const;
  double final_val_error() const;
  double final_test_error() const;
};

RunTrace run_algorithm(const AlgorithmConfig& config, const TabularBenchmark& bench);

/// Expected improvement below `best` of a normal(mean, sd) outcome.
double expected_improvement(double best, double mean, double sd);

/// Seed of trial `trial` under a master seed; shared by every cell of an
/// experiment so comparisons are paired.
std::uint64_t trial_seed(std::uint64_t master, int trial);

/// `trials` independent runs of `config` (its seed replaced by trial_seed),
/// spread over `workers` threads; output order and content do not depend on
/// the worker count.
std::vector<RunTrace> run_trials(const AlgorithmConfig& config, const TabularBenchmark& bench,
                                 int trials, std::uint64_t master_seed, int workers = 1);

}  // namespace nasenc
