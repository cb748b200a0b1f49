#include "nasenc/tuning.hpp"

#include <algorithm>
#include <cmath>

#include "nasenc/stats.hpp"

namespace nasenc {

namespace {

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

AlgorithmParams sample_bundle(Algorithm algorithm, const AlgorithmParams& base,
                              const EncodingSlots& encodings, Rng& rng) {
  AlgorithmParams p = base;
  auto mutation = [&] {
    const double d = encodings.perturb ? static_cast<double>(dimension(*encodings.perturb)) : 3.0;
    return std::min(uniform_real(rng, 0.5, 3.0), d);
  };
  switch (algorithm) {
    case Algorithm::RandomSearch:
    case Algorithm::LocalSearch: break;
    case Algorithm::RegularizedEvolution:
      p.population = uniform_int(rng, 10, 50);
      p.tournament = uniform_int(rng, 2, 25);
      p.mutation = mutation();
      break;
    case Algorithm::BayesianOptimization:
      p.initial_queries = uniform_int(rng, 5, 20);
      p.pool_random = uniform_int(rng, 10, 100);
      p.pool_mutations = uniform_int(rng, 10, 100);
      p.mutation = mutation();
      break;
    case Algorithm::Bananas:
      p.initial_queries = uniform_int(rng, 5, 20);
      p.parents = uniform_int(rng, 2, 20);
      p.mutations_per_parent = uniform_int(rng, 2, 20);
      p.mutation = mutation();
      p.ensemble.learning_rate = std::exp(uniform_real(rng, std::log(1e-3), std::log(1e-1)));
      p.ensemble.epochs = uniform_int(rng, 20, 200);
      break;
  }
  return p;
}

TuneResult tune_hyperparameters(const AlgorithmConfig& base, const TabularBenchmark& tuning,
                                std::string_view evaluation_id, const TuneOptions& options,
                                int workers) {
  if (tuning.id() == evaluation_id)
    throw ConfigError("tuning benchmark must differ from the evaluation benchmark (" +
                      tuning.id() + ")");
  if (options.iterations < 1 || options.trials < 1 || options.queries < 1)
    throw ConfigError("tuning needs positive iterations, trials and queries");
  AlgorithmConfig config = base;
  config.budget = {std::nullopt, options.queries};
  validate(config, *tuning.spec());

  TuneResult result;
  for (int i = 0; i < options.iterations; ++i) {
    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(i)));
    config.params = sample_bundle(config.algorithm, base.params, config.encodings, rng);
    const auto traces = run_trials(config, tuning, options.trials,
                                   derive_seed(options.seed, 0x7e57ULL << 32), workers);
    std::vector<double> finals;
    for (const auto& t : traces) finals.push_back(t.final_val_error());
    result.history.push_back({config.params, stats::mean(finals)});
    if (i == 0 || result.history.back().score < result.best.score) result.best = result.history.back();
  }
  return result;
}

}  // namespace nasenc
