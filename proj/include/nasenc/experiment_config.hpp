#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nasenc/algorithms.hpp"
#include "nasenc/benchmark.hpp"

namespace nasenc {

enum class ExperimentKind { Ablation, Truncation, OutsideSearchSpace, BCurve, Tune };
std::string_view experiment_kind_name(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name);

struct SpaceConfig {
  int n_nodes = 6;
  int max_edges = 9;
  int num_ops = 3;
  std::vector<std::string> op_names;

  SpecPtr make() const { return make_spec(n_nodes, max_edges, num_ops, op_names); }
  bool operator==(const SpaceConfig&) const = default;
};

/// Exactly one of a synthetic generator or a JSON-lines file.
struct BenchmarkSource {
  std::optional<SyntheticParams> synthetic = SyntheticParams{};
  std::optional<std::string> file;

  TabularBenchmark load(const SpecPtr& spec) const;
  bool operator==(const BenchmarkSource&) const = default;
};

/// One algorithm run setting; encodings are tags as accepted by EncodingKind::parse.
struct CellConfig {
  std::string label;  // empty: derived from algorithm and encodings
  Algorithm algorithm = Algorithm::RandomSearch;
  std::optional<std::string> sample;
  std::optional<std::string> perturb;
  std::optional<std::string> predictor;
  AlgorithmParams params;

  std::string display_label() const;
  /// Resolves the tags against `spec`; budget, seed and cache come from the experiment.
  AlgorithmConfig resolve(const SpecPtr& spec) const;
  bool operator==(const CellConfig&) const = default;
};

struct TruncationSettings {
  Algorithm algorithm = Algorithm::RegularizedEvolution;
  /// Fixed sample encoding; the sweep truncates the perturb slot.
  std::string sample = "adj_onehot";
  /// Matched bit counts for both families; empty: the full adjacency
  /// dimension and four evenly spaced interior points down to 0.
  std::vector<std::size_t> bits;
  AlgorithmParams params;

  bool operator==(const TruncationSettings&) const = default;
};

struct OutsideSettings {
  /// Train: at most train_max_nodes live nodes and train_max_edges edges.
  int train_max_nodes = 6;
  int train_max_edges = 7;
  /// Test: exactly test_nodes live nodes, edges in [test_min_edges, test_max_edges].
  int test_nodes = 6;
  int test_min_edges = 8;
  int test_max_edges = 9;
  int train_size = 1000;
  int test_size = 5000;
  int top = 10;
  std::vector<std::string> encodings{"adj_onehot",  "adj_categorical",  "adj_continuous",
                                     "path_onehot", "path_categorical", "path_continuous"};
  EnsembleParams ensemble;

  bool operator==(const OutsideSettings&) const = default;
};

struct BCurvePoint {
  int n;
  double k;
  bool operator==(const BCurvePoint&) const = default;
};

struct BCurveSettings {
  std::vector<BCurvePoint> grid{{7, 9}, {20, 40}, {50, 100}};
  std::int64_t mc_trials = 100'000;
  double c = 3.1;

  bool operator==(const BCurveSettings&) const = default;
};

struct TuneSettings {
  CellConfig cell{.label = "",
                  .algorithm = Algorithm::RegularizedEvolution,
                  .sample = "adj_onehot",
                  .perturb = "adj_onehot",
                  .predictor = std::nullopt,
                  .params = {}};
  int iterations = 50;
  int trials = 10;
  std::int64_t queries = 200;
  /// The experiment's `benchmark` is the tuning objective; the bundle is
  /// meant for this one, and the two must differ.
  BenchmarkSource evaluation = BenchmarkSource{SyntheticParams{.seed = 1}, std::nullopt};

  bool operator==(const TuneSettings&) const = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Ablation;
  SpaceConfig space;
  BenchmarkSource benchmark;
  std::vector<CellConfig> cells;  // ablation matrix
  int trials = 100;
  Budget budget{std::nullopt, 150};
  std::uint64_t seed = 0;
  std::string output = "results";
  bool query_cache = true;
  /// Evenly spaced simulated-time points of the ablation curves.
  int checkpoints = 20;
  TruncationSettings truncation;
  OutsideSettings outside;
  BCurveSettings bcurve;
  TuneSettings tune;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Missing keys keep their defaults; unknown keys are a ConfigError.
ExperimentConfig parse_experiment_config(std::string_view json_text);
/// Every field, so parse(to_json_text(c)) == c.
std::string to_json_text(const ExperimentConfig& config);

/// A parameter bundle in the layout of a cell's "params" object.
std::string to_json_text(const AlgorithmParams& params);

}  // namespace nasenc
