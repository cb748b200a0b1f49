#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "nasenc/algorithms.hpp"

namespace nasenc {

struct TuneOptions {
  int iterations = 50;
  int trials = 10;
  std::int64_t queries = 200;
  std::uint64_t seed = 0;
};

struct TunedBundle {
  AlgorithmParams params;
  double score = 0;  // mean best-validation error over the tuning trials
};

struct TuneResult {
  TunedBundle best;
  std::vector<TunedBundle> history;  // in sampling order
};

/// Draws one bundle uniformly from the declared region of `algorithm`,
/// starting from `base` (parameters outside the region are kept).
/// Regions: population 10..50, tournament 2..25, mutation [0.5, 3],
/// initial queries 5..20, pool sizes 10..100, parents 2..20,
/// mutations per parent 2..20, ensemble learning rate log-uniform
/// [1e-3, 1e-1], ensemble epochs 20..200.
AlgorithmParams sample_bundle(Algorithm algorithm, const AlgorithmParams& base,
                              const EncodingSlots& encodings, Rng& rng);

/// Random search over bundles, each scored on `tuning`; returns the argmin
/// (earliest on ties). Throws ConfigError when `tuning` and the evaluation
/// benchmark share an id.
TuneResult tune_hyperparameters(const AlgorithmConfig& base, const TabularBenchmark& tuning,
                                std::string_view evaluation_id, const TuneOptions& options,
                                int workers = 1);

}  // namespace nasenc
