#include "nasenc/algorithms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include <boost/math/distributions/normal.hpp>

#include "json.hpp"
#include "nasenc/io.hpp"
#include "nasenc/subroutines.hpp"

namespace nasenc {

namespace {

constexpr std::array<std::string_view, 5> kAlgorithmNames{
    "random_search", "regularized_evolution", "local_search", "bayesian_optimization", "bananas"};
constexpr std::array<std::string_view, 3> kAcquisitionNames{"thompson", "mean", "lcb"};

// Consecutive cache hits tolerated before a run is declared stalled.
constexpr std::int64_t kIdleLimit = 10'000;

struct QueryResult {
  double val;
  double test;
};

/// Budget, cache, and trace bookkeeping shared by every algorithm.
class Oracle {
 public:
  Oracle(const TabularBenchmark& bench, const AlgorithmConfig& config, RunTrace& trace)
      : bench_(bench), config_(config), trace_(trace) {}

  bool done() const { return trace_.stalled || exhausted(); }

  std::optional<QueryResult> query(const Architecture& arch) {
    if (done()) return std::nullopt;
    CanonicalKey key = canonical_form(arch);
    const auto& entry = bench_.entry(key);
    const auto& rec = entry.record;
    const bool seen = queried_.contains(key);
    if (config_.query_cache && seen) {
      if (++idle_ > kIdleLimit) trace_.stalled = true;
      return QueryResult{rec.val_error, rec.test_error};
    }
    idle_ = 0;
    time_ += rec.train_time;
    ++queries_;
    if (trace_.events.empty() || rec.val_error < best_val_) {
      best_val_ = rec.val_error;
      best_test_ = rec.test_error;
    }
    trace_.events.push_back({time_, queries_, entry.arch.to_text(), rec.val_error, rec.test_error,
                             best_val_, best_test_});
    if (!seen) {
      history_.push_back(entry.arch);
      history_val_.push_back(rec.val_error);
      history_key_.push_back(key);
      queried_.insert(std::move(key));
    }
    return QueryResult{rec.val_error, rec.test_error};
  }

  bool queried(const CanonicalKey& key) const { return queried_.contains(key); }

  /// Distinct queried architectures in first-query order.
  const std::vector<Architecture>& history() const { return history_; }
  const std::vector<double>& history_val() const { return history_val_; }
  const std::vector<CanonicalKey>& history_key() const { return history_key_; }

  /// Index into history of the lowest validation error (earliest on ties).
  std::size_t incumbent() const {
    return static_cast<std::size_t>(
        std::min_element(history_val_.begin(), history_val_.end()) - history_val_.begin());
  }

 private:
  bool exhausted() const {
    const auto& b = config_.budget;
    return (b.queries && queries_ >= *b.queries) || (b.seconds && time_ >= *b.seconds);
  }

  const TabularBenchmark& bench_;
  const AlgorithmConfig& config_;
  RunTrace& trace_;
  double time_ = 0;
  std::int64_t queries_ = 0;
  std::int64_t idle_ = 0;
  double best_val_ = 0, best_test_ = 0;
  std::set<CanonicalKey> queried_;
  std::vector<Architecture> history_;
  std::vector<double> history_val_;
  std::vector<CanonicalKey> history_key_;
};

struct Context {
  const AlgorithmConfig& config;
  Oracle& oracle;
  RunTrace& trace;
  Rng rng;
  std::int64_t perturb_exhausted = 0;

  Architecture sample() { return sample_random(*config.encodings.sample, rng); }

  Architecture mutate(const Architecture& arch) {
    auto r = perturb(arch, *config.encodings.perturb, config.params.mutation, rng);
    if (r.exhausted) ++perturb_exhausted;
    return std::move(r.arch);
  }

  void seed_queries() {
    while (!oracle.done() &&
           static_cast<int>(oracle.history().size()) < config.params.initial_queries)
      oracle.query(sample());
  }
};

void random_search(Context& ctx) {
  while (!ctx.oracle.done()) ctx.oracle.query(ctx.sample());
}

void regularized_evolution(Context& ctx) {
  struct Member {
    Architecture arch;
    double val;
  };
  const auto& p = ctx.config.params;
  std::vector<Member> population;
  while (static_cast<int>(population.size()) < p.population) {
    Architecture a = ctx.sample();
    const auto r = ctx.oracle.query(a);
    if (!r) return;
    population.push_back({std::move(a), r->val});
  }
  std::vector<std::size_t> order(population.size());
  while (!ctx.oracle.done()) {
    std::iota(order.begin(), order.end(), 0);
    const std::size_t t = std::min<std::size_t>(p.tournament, population.size());
    for (std::size_t i = 0; i < t; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
      std::swap(order[i], order[pick(ctx.rng)]);
    }
    std::size_t winner = order[0];
    for (std::size_t i = 1; i < t; ++i)
      if (population[order[i]].val < population[winner].val) winner = order[i];
    Architecture child = ctx.mutate(population[winner].arch);
    const auto r = ctx.oracle.query(child);
    if (!r) return;
    population.push_back({std::move(child), r->val});
    // replace the worst, oldest first on ties
    std::size_t worst = 0;
    for (std::size_t i = 1; i < population.size(); ++i)
      if (population[i].val > population[worst].val) worst = i;
    population.erase(population.begin() + static_cast<std::ptrdiff_t>(worst));
  }
}

void local_search(Context& ctx) {
  const EncodingKind& kind = *ctx.config.encodings.perturb;
  while (!ctx.oracle.done()) {
    Architecture current = ctx.sample();
    auto r = ctx.oracle.query(current);
    if (!r) return;
    double current_val = r->val;
    for (;;) {
      std::optional<Architecture> step;
      double step_val = current_val;
      for (auto& nb : neighbors(current, kind)) {
        const auto q = ctx.oracle.query(nb);
        if (!q) return;
        if (q->val < step_val) {
          step_val = q->val;
          step = std::move(nb);
        }
      }
      if (!step) break;  // local optimum: restart
      current = std::move(*step);
      current_val = step_val;
    }
  }
}

// Unqueried candidates keyed (and so ordered) by canonical form.
using Pool = std::map<CanonicalKey, Architecture>;

void add_candidate(Pool& pool, const Oracle& oracle, Architecture a) {
  CanonicalKey key = canonical_form(a);
  if (!oracle.queried(key)) pool.try_emplace(std::move(key), std::move(a));
}

void query_fresh_random(Context& ctx) {
  for (int tries = 0; tries < 1000; ++tries) {
    Architecture a = ctx.sample();
    if (!ctx.oracle.queried(canonical_form(a))) {
      ctx.oracle.query(a);
      return;
    }
  }
  ctx.oracle.query(ctx.sample());
}

void bayesian_optimization(Context& ctx) {
  const auto& p = ctx.config.params;
  ctx.seed_queries();
  while (!ctx.oracle.done()) {
    Predictor gp(*ctx.config.encodings.predictor, p.gp);
    gp.fit(ctx.oracle.history(), ctx.oracle.history_val());
    const Architecture incumbent = ctx.oracle.history()[ctx.oracle.incumbent()];
    const double best = ctx.oracle.history_val()[ctx.oracle.incumbent()];
    Pool pool;
    for (int i = 0; i < p.pool_random; ++i) add_candidate(pool, ctx.oracle, ctx.sample());
    for (int i = 0; i < p.pool_mutations; ++i) add_candidate(pool, ctx.oracle, ctx.mutate(incumbent));
    if (pool.empty()) {
      query_fresh_random(ctx);
      continue;
    }
    std::vector<Architecture> candidates;
    for (auto& [key, a] : pool) candidates.push_back(a);
    const auto pred = gp.predict(candidates);
    std::size_t pick = 0;
    double top = -1;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const double ei = expected_improvement(best, pred[i].mean, pred[i].uncertainty);
      if (ei > top) {
        top = ei;
        pick = i;
      }
    }
    if (!(top > 1e-12)) pick = std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(ctx.rng);
    ctx.oracle.query(candidates[pick]);
  }
}

void bananas(Context& ctx) {
  const auto& p = ctx.config.params;
  ctx.seed_queries();
  for (std::uint64_t iteration = 1; !ctx.oracle.done(); ++iteration) {
    EnsembleParams ep = p.ensemble;
    ep.seed = derive_seed(ctx.config.seed ^ p.ensemble.seed, iteration);
    Predictor ensemble(*ctx.config.encodings.predictor, ep);
    ensemble.fit(ctx.oracle.history(), ctx.oracle.history_val());

    const auto& vals = ctx.oracle.history_val();
    std::vector<std::size_t> ranked(vals.size());
    std::iota(ranked.begin(), ranked.end(), 0);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    ranked.resize(std::min<std::size_t>(ranked.size(), p.parents));
    Pool pool;
    for (std::size_t parent : ranked) {
      const Architecture base = ctx.oracle.history()[parent];
      for (int j = 0; j < p.mutations_per_parent; ++j)
        add_candidate(pool, ctx.oracle, ctx.mutate(base));
    }
    if (pool.empty()) {
      query_fresh_random(ctx);
      continue;
    }
    std::vector<Architecture> candidates;
    for (auto& [key, a] : pool) candidates.push_back(a);
    std::vector<double> score(candidates.size());
    if (p.acquisition == Acquisition::Thompson) {
      const RowMatrix members = ensemble.member_predictions(candidates);
      // one member: no draw, so the run matches greedy mean minimization exactly
      std::uniform_int_distribution<std::size_t> member(0, members.rows - 1);
      for (std::size_t i = 0; i < candidates.size(); ++i)
        score[i] = members.row(members.rows == 1 ? 0 : member(ctx.rng))[i];
    } else {
      const auto pred = ensemble.predict(candidates);
      for (std::size_t i = 0; i < candidates.size(); ++i)
        score[i] = pred[i].mean - (p.acquisition == Acquisition::LowerConfidence
                                       ? p.lcb_weight * pred[i].uncertainty
                                       : 0.0);
    }
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] < score[b]; });
    for (int b = 0; b < p.batch_size && b < static_cast<int>(order.size()); ++b)
      if (!ctx.oracle.query(candidates[order[b]])) break;
  }
}

void check_slot(const std::optional<EncodingKind>& slot, bool used, std::string_view name,
                const SearchSpaceSpec& space) {
  if (used && !slot) throw ConfigError(std::string(name) + " encoding is required");
  if (!used && slot) throw ConfigError(std::string(name) + " encoding is not used by this algorithm");
  if (slot && !(slot->space() == space))
    throw ConfigError(std::string(name) + " encoding is over a different search space");
}

}  // namespace

double expected_improvement(double best, double mean, double sd) {
  if (!(sd > 0)) return std::max(best - mean, 0.0);
  static const boost::math::normal_distribution<> normal;
  const double z = (best - mean) / sd;
  return (best - mean) * boost::math::cdf(normal, z) + sd * boost::math::pdf(normal, z);
}

std::string_view algorithm_name(Algorithm a) { return kAlgorithmNames[static_cast<int>(a)]; }

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (std::size_t i = 0; i < kAlgorithmNames.size(); ++i)
    if (kAlgorithmNames[i] == name) return static_cast<Algorithm>(i);
  return std::nullopt;
}

std::string_view acquisition_name(Acquisition a) { return kAcquisitionNames[static_cast<int>(a)]; }

std::optional<Acquisition> parse_acquisition(std::string_view name) {
  for (std::size_t i = 0; i < kAcquisitionNames.size(); ++i)
    if (kAcquisitionNames[i] == name) return static_cast<Acquisition>(i);
  return std::nullopt;
}

SlotUse slots_used(Algorithm a) {
  switch (a) {
    case Algorithm::RandomSearch: return {true, false, false};
    case Algorithm::RegularizedEvolution:
    case Algorithm::LocalSearch: return {true, true, false};
    case Algorithm::BayesianOptimization:
    case Algorithm::Bananas: return {true, true, true};
  }
  return {};
}

std::vector<std::string> validate(const AlgorithmConfig& c, const SearchSpaceSpec& space) {
  const SlotUse use = slots_used(c.algorithm);
  check_slot(c.encodings.sample, use.sample, "sample", space);
  check_slot(c.encodings.perturb, use.perturb, "perturb", space);
  check_slot(c.encodings.predictor, use.predictor, "predictor", space);
  if (!c.budget.seconds && !c.budget.queries) throw ConfigError("budget needs seconds or queries");
  if ((c.budget.seconds && !(*c.budget.seconds > 0)) || (c.budget.queries && *c.budget.queries < 1))
    throw ConfigError("budget must be positive");
  const auto& p = c.params;
  if (p.population < 1 || p.tournament < 1 || p.initial_queries < 1 || p.pool_random < 0 ||
      p.pool_mutations < 0 || p.parents < 1 || p.mutations_per_parent < 1 || p.batch_size < 1 ||
      p.lcb_weight < 0 || p.ensemble.members < 1 || p.ensemble.epochs < 0 ||
      p.ensemble.batch_size < 1 || !(p.ensemble.learning_rate > 0) || p.gp.length_scales.empty() ||
      !(p.gp.noise > 0))
    throw ConfigError("algorithm parameter out of range");
  std::vector<std::string> warnings;
  if (use.perturb) {
    const double d = static_cast<double>(dimension(*c.encodings.perturb));
    // a fully truncated encoding has nothing to resample; every perturbation is a fresh draw
    if (p.mutation < 0 || (d > 0 && p.mutation > d))
      throw ConfigError("mutation factor must lie in [0, perturb dimension]");
    if (p.mutation == 0 && c.algorithm == Algorithm::RegularizedEvolution)
      warnings.push_back("mutation factor 0: the population never changes after initialization");
  }
  if (c.algorithm == Algorithm::RegularizedEvolution && p.tournament > p.population)
    warnings.push_back("tournament larger than population; using the whole population");
  return warnings;
}

RunTrace run_algorithm(const AlgorithmConfig& config, const TabularBenchmark& bench) {
  RunTrace trace;
  trace.warnings = validate(config, *bench.spec());
  Oracle oracle(bench, config, trace);
  Context ctx{config, oracle, trace, Rng(config.seed)};
  switch (config.algorithm) {
    case Algorithm::RandomSearch: random_search(ctx); break;
    case Algorithm::RegularizedEvolution: regularized_evolution(ctx); break;
    case Algorithm::LocalSearch: local_search(ctx); break;
    case Algorithm::BayesianOptimization: bayesian_optimization(ctx); break;
    case Algorithm::Bananas: bananas(ctx); break;
  }
  if (ctx.perturb_exhausted > 0)
    trace.warnings.push_back("perturbation ceiling hit " + std::to_string(ctx.perturb_exhausted) +
                             " times; parent kept");
  if (trace.stalled) trace.warnings.push_back("stopped early: no unqueried architecture found");
  return trace;
}

std::uint64_t trial_seed(std::uint64_t master, int trial) {
  return derive_seed(master, static_cast<std::uint64_t>(trial));
}

std::vector<RunTrace> run_trials(const AlgorithmConfig& config, const TabularBenchmark& bench,
                                 int trials, std::uint64_t master_seed, int workers) {
  if (trials < 1) throw ConfigError("trials must be >= 1");
  validate(config, *bench.spec());
  std::vector<RunTrace> traces(trials);
  std::vector<std::exception_ptr> errors(trials);
#pragma omp parallel for schedule(dynamic) num_threads(std::max(workers, 1))
  for (int t = 0; t < trials; ++t) {
    try {
      AlgorithmConfig c = config;
      c.seed = trial_seed(master_seed, t);
      traces[t] = run_algorithm(c, bench);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return traces;
}

std::string RunTrace::to_jsonl() const {
  std::string out;
  for (const auto& e : events) {
    out += "{\"time\":" + format_double(e.time) + ",\"queries\":" + std::to_string(e.queries) +
           ",\"arch\":\"" + e.arch + "\",\"val_error\":" + format_double(e.val_error) +
           ",\"test_error\":" + format_double(e.test_error) +
           ",\"best_val_error\":" + format_double(e.best_val_error) +
           ",\"best_test_error\":" + format_double(e.best_test_error) + "}\n";
  }
  return out;
}

RunTrace RunTrace::from_jsonl(std::string_view text) {
  RunTrace trace;
  std::size_t start = 0;
  int line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      trace.events.push_back({j.at("time").get<double>(), j.at("queries").get<std::int64_t>(),
                              j.at("arch").get<std::string>(), j.at("val_error").get<double>(),
                              j.at("test_error").get<double>(), j.at("best_val_error").get<double>(),
                              j.at("best_test_error").get<double>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error("trace line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return trace;
}

namespace {
const TraceEvent* last_before(const std::vector<TraceEvent>& events, double t) {
  auto it = std::upper_bound(events.begin(), events.end(), t,
                             [](double value, const TraceEvent& e) { return value < e.time; });
  return it == events.begin() ? nullptr : &*std::prev(it);
}
}  // namespace

std::optional<double> RunTrace::test_error_at(double t) const {
  const auto* e = last_before(events, t);
  return e ? std::optional(e->best_test_error) : std::nullopt;
}

std::optional<double> RunTrace::val_error_at(double t) const {
  const auto* e = last_before(events, t);
  return e ? std::optional(e->best_val_error) : std::nullopt;
}

double RunTrace::final_val_error() const {
  if (events.empty()) throw Error("empty trace");
  return events.back().best_val_error;
}

double RunTrace::final_test_error() const {
  if (events.empty()) throw Error("empty trace");
  return events.back().best_test_error;
}

}  // namespace nasenc
