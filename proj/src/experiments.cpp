#include "nasenc/experiments.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <map>
#include <numbers>
#include <numeric>

#include "nasenc/io.hpp"
#include "nasenc/random_graph.hpp"
#include "nasenc/stats.hpp"

namespace nasenc {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Mean and standard error, or two empty fields when there are no values.
std::string mean_and_stderr(std::span<const double> xs) {
  if (xs.empty()) return ",";
  return format_double(stats::mean(xs)) + "," + format_double(stats::standard_error(xs));
}

std::vector<double> final_test_errors(std::span<const RunTrace> traces) {
  std::vector<double> out;
  for (const auto& t : traces) out.push_back(t.final_test_error());
  return out;
}

std::vector<double> final_val_errors(std::span<const RunTrace> traces) {
  std::vector<double> out;
  for (const auto& t : traces) out.push_back(t.final_val_error());
  return out;
}

AlgorithmConfig cell_config(const CellConfig& cell, const ExperimentConfig& config,
                            const SpecPtr& spec) {
  AlgorithmConfig c = cell.resolve(spec);
  c.budget = config.budget;
  c.query_cache = config.query_cache;
  return c;
}

}  // namespace

void write_experiment(const ExperimentFiles& files, const std::filesystem::path& dir) {
  for (const auto& [path, content] : files) write_file_atomic(dir / path, content);
}

// -- ablation ------------------------------------------------------------------

void check_ablation_matrix(std::span<const CellConfig> cells, const SpecPtr& spec) {
  if (cells.empty()) throw ConfigError("ablation matrix has no cells");
  std::map<Algorithm, std::vector<AlgorithmConfig>> by_algorithm;
  for (const auto& cell : cells) by_algorithm[cell.algorithm].push_back(cell.resolve(spec));
  for (const auto& [algorithm, configs] : by_algorithm) {
    std::vector<std::string> varying;
    auto check = [&](auto member, const char* name) {
      for (const auto& c : configs)
        if (!(c.encodings.*member == configs.front().encodings.*member)) {
          varying.push_back(name);
          return;
        }
    };
    check(&EncodingSlots::sample, "sample");
    check(&EncodingSlots::perturb, "perturb");
    check(&EncodingSlots::predictor, "predictor");
    if (varying.size() > 1)
      throw ConfigError("invalid ablation matrix: " + std::string(algorithm_name(algorithm)) +
                        " cells vary in both " + varying[0] + " and " + varying[1] + " slots");
  }
}

std::vector<double> checkpoint_times(std::span<const std::vector<RunTrace>> cells,
                                     const Budget& budget, int count) {
  double horizon = 0;
  if (budget.seconds) {
    horizon = *budget.seconds;
  } else {
    for (const auto& traces : cells)
      for (const auto& t : traces)
        if (!t.events.empty()) horizon = std::max(horizon, t.events.back().time);
  }
  std::vector<double> times;
  for (int j = 1; j <= count; ++j) times.push_back(horizon * j / count);
  return times;
}

std::vector<CurvePoint> summarize_curve(std::span<const RunTrace> trials,
                                        std::span<const double> times) {
  std::vector<CurvePoint> out;
  for (double t : times) {
    std::vector<double> test, val;
    for (const auto& trace : trials) {
      if (auto e = trace.test_error_at(t)) test.push_back(*e);
      if (auto e = trace.val_error_at(t)) val.push_back(*e);
    }
    CurvePoint p{t, static_cast<int>(test.size()), NAN, NAN, NAN, NAN};
    if (!test.empty()) {
      p.mean_test_error = stats::mean(test);
      p.stderr_test_error = stats::standard_error(test);
      p.mean_val_error = stats::mean(val);
      p.stderr_val_error = stats::standard_error(val);
    }
    out.push_back(p);
  }
  return out;
}

AblationResult run_ablation(const ExperimentConfig& config, const TabularBenchmark& bench,
                            int workers) {
  check_ablation_matrix(config.cells, bench.spec());
  AblationResult result;
  result.cells = config.cells;
  for (const auto& cell : config.cells)
    result.traces.push_back(run_trials(cell_config(cell, config, bench.spec()), bench, config.trials,
                                       config.seed, workers));
  return result;
}

std::string trace_file_name(std::size_t cell, int trial) {
  return "traces/cell" + std::to_string(cell) + "_trial" + std::to_string(trial) + ".jsonl";
}

std::string ablation_summary_csv(const AblationResult& result) {
  std::string out =
      "cell,label,trials,mean_final_test_error,stderr_final_test_error,mean_final_val_error,"
      "stderr_final_val_error\n";
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    const auto& traces = result.traces[c];
    out += std::to_string(c) + "," + csv_field(result.cells[c].display_label()) + "," +
           std::to_string(traces.size()) + "," + mean_and_stderr(final_test_errors(traces)) + "," +
           mean_and_stderr(final_val_errors(traces)) + "\n";
  }
  return out;
}

std::string ablation_curves_csv(const AblationResult& result, const Budget& budget, int checkpoints) {
  std::string out =
      "cell,label,t,reporting,mean_test_error,stderr_test_error,mean_val_error,stderr_val_error\n";
  const auto times = checkpoint_times(result.traces, budget, checkpoints);
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    for (const auto& p : summarize_curve(result.traces[c], times)) {
      out += std::to_string(c) + "," + csv_field(result.cells[c].display_label()) + "," +
             format_double(p.time) + "," + std::to_string(p.reporting);
      if (p.reporting == 0) {
        out += ",,,,\n";
        continue;
      }
      out += "," + format_double(p.mean_test_error) + "," + format_double(p.stderr_test_error) + "," +
             format_double(p.mean_val_error) + "," + format_double(p.stderr_val_error) + "\n";
    }
  }
  return out;
}

std::string ablation_trials_csv(const AblationResult& result, const Budget& budget,
                                int checkpoints) {
  std::string out = "cell,trial,t,best_val_error,test_error\n";
  const auto times = checkpoint_times(result.traces, budget, checkpoints);
  for (std::size_t c = 0; c < result.cells.size(); ++c)
    for (std::size_t t = 0; t < result.traces[c].size(); ++t)
      for (double time : times) {
        const auto& trace = result.traces[c][t];
        const auto val = trace.val_error_at(time);
        if (!val) continue;
        out += std::to_string(c) + "," + std::to_string(t) + "," + format_double(time) + "," +
               format_double(*val) + "," + format_double(*trace.test_error_at(time)) + "\n";
      }
  return out;
}

// -- truncation sweep ------------------------------------------------------------

std::vector<std::size_t> default_truncation_bits(const SpecPtr& spec) {
  const std::size_t d = dimension(EncodingKind(Family::AdjOneHot, spec));
  std::vector<std::size_t> bits;
  for (int j = 5; j >= 0; --j) bits.push_back(d * j / 5);
  return bits;
}

std::vector<TruncationPoint> run_truncation_sweep(const ExperimentConfig& config,
                                                  const TabularBenchmark& bench, int workers) {
  const auto& settings = config.truncation;
  const SlotUse use = slots_used(settings.algorithm);
  if (!use.perturb) throw ConfigError("truncation sweep needs an algorithm with a perturb slot");
  auto bits = settings.bits.empty() ? default_truncation_bits(bench.spec()) : settings.bits;

  std::vector<TruncationPoint> points;
  for (Family family : {Family::AdjOneHot, Family::PathOneHot}) {
    const EncodingKind full(family, bench.spec());
    const std::size_t d = dimension(full);
    std::vector<std::pair<EncodingKind, bool>> kinds{{full, true}};
    for (std::size_t b : bits)
      if (b < d) kinds.emplace_back(full.truncated_to_bits(b), false);
    for (const auto& [kind, is_full] : kinds) {
      CellConfig cell{.label = "",
                      .algorithm = settings.algorithm,
                      .sample = settings.sample,
                      .perturb = kind.tag(),
                      .predictor = use.predictor ? std::optional(kind.tag()) : std::nullopt,
                      .params = settings.params};
      TruncationPoint point;
      point.family = family_name(family);
      point.bits = kind.truncation().value_or(d);
      point.full = is_full;
      try {
        point.traces = run_trials(cell_config(cell, config, bench.spec()), bench, config.trials,
                                  config.seed, workers);
        point.final_test = final_test_errors(point.traces);
        point.final_val = final_val_errors(point.traces);
      } catch (const RejectionCeiling& e) {
        point.error = e.what();
        point.traces.clear();
      }
      points.push_back(std::move(point));
    }
  }
  return points;
}

std::string truncation_csv(std::span<const TruncationPoint> points) {
  std::map<std::string, double> baseline;
  for (const auto& p : points)
    if (p.full && !p.final_test.empty()) baseline[p.family] = stats::mean(p.final_test);
  std::string out =
      "family,bits,full,trials,mean_final_test_error,stderr_final_test_error,mean_final_val_error,"
      "stderr_final_val_error,increase_over_full,status\n";
  for (const auto& p : points) {
    out += p.family + "," + std::to_string(p.bits) + "," + (p.full ? "1" : "0") + "," +
           std::to_string(p.final_test.size()) + "," + mean_and_stderr(p.final_test) + "," +
           mean_and_stderr(p.final_val) + ",";
    if (!p.final_test.empty() && baseline.contains(p.family))
      out += format_double(stats::mean(p.final_test) - baseline[p.family]);
    out += "," + (p.error.empty() ? std::string("ok") : csv_field("infeasible: " + p.error)) + "\n";
  }
  return out;
}

// -- outside the training search space --------------------------------------------

Partition partition_benchmark(const TabularBenchmark& bench, const OutsideSettings& s) {
  if (s.test_min_edges > s.test_max_edges) throw ConfigError("test edge range is empty");
  if (s.test_nodes <= s.train_max_nodes && s.test_min_edges <= s.train_max_edges)
    throw ConfigError("train and test predicates overlap: test edges must exceed " +
                      std::to_string(s.train_max_edges));
  Partition part;
  const auto& entries = bench.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const int nodes = std::popcount(live_nodes(entries[i].arch));
    const int edges = entries[i].arch.edge_count();
    const bool train = nodes <= s.train_max_nodes && edges <= s.train_max_edges;
    const bool test = nodes == s.test_nodes && edges >= s.test_min_edges && edges <= s.test_max_edges;
    if (train && test) throw Error("architecture in both partitions");
    if (train) part.train.push_back(i);
    if (test) part.test.push_back(i);
  }
  if (part.train.empty() || part.test.empty())
    throw Error("empty partition: train " + std::to_string(part.train.size()) + ", test " +
                std::to_string(part.test.size()));
  return part;
}

TopSummary top_k_summary(std::span<const double> predicted, std::span<const double> val,
                         std::span<const double> test, int top) {
  std::vector<std::size_t> order(predicted.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return predicted[a] < predicted[b]; });
  order.resize(std::min<std::size_t>(order.size(), std::max(top, 1)));
  TopSummary s{0, 0, val[order[0]], test[order[0]]};
  for (std::size_t i : order) {
    s.top_val += val[i] / static_cast<double>(order.size());
    s.top_test += test[i] / static_cast<double>(order.size());
  }
  return s;
}

std::vector<OutsideRow> run_outside_search_space(const ExperimentConfig& config,
                                                 const TabularBenchmark& bench, int workers) {
  const auto& s = config.outside;
  if (s.train_size < 1 || s.test_size < 1 || s.top < 1)
    throw ConfigError("outside-ss sizes must be positive");
  const Partition part = partition_benchmark(bench, s);
  std::vector<EncodingKind> kinds;
  std::vector<OutsideRow> rows;
  for (const auto& tag : s.encodings) {
    kinds.push_back(EncodingKind::parse(tag, bench.spec()));
    rows.push_back({kinds.back().tag(), std::vector<TopSummary>(config.trials)});
  }
  const auto& entries = bench.entries();
  // Returns the first `count` entries of a seeded partial shuffle.
  auto draw = [&](std::vector<std::size_t> pool, int count, Rng& rng) {
    const std::size_t m = std::min<std::size_t>(pool.size(), count);
    for (std::size_t i = 0; i < m; ++i)
      std::swap(pool[i], pool[std::uniform_int_distribution<std::size_t>(i, pool.size() - 1)(rng)]);
    pool.resize(m);
    std::vector<Architecture> archs;
    std::vector<double> val, test;
    for (std::size_t i : pool) {
      archs.push_back(entries[i].arch);
      val.push_back(entries[i].record.val_error);
      test.push_back(entries[i].record.test_error);
    }
    return std::tuple(std::move(archs), std::move(val), std::move(test));
  };

  std::vector<std::exception_ptr> errors(config.trials);
#pragma omp parallel for schedule(dynamic) num_threads(std::max(workers, 1))
  for (int t = 0; t < config.trials; ++t) {
    try {
      const std::uint64_t seed = trial_seed(config.seed, t);
      Rng rng(seed);
      const auto [train, train_val, train_test] = draw(part.train, s.train_size, rng);
      const auto [test, test_val, test_test] = draw(part.test, s.test_size, rng);
      for (std::size_t e = 0; e < kinds.size(); ++e) {
        EnsembleParams params = s.ensemble;
        params.seed = derive_seed(seed ^ s.ensemble.seed, e);
        Predictor predictor(kinds[e], params);
        predictor.fit(train, train_val);
        std::vector<double> means;
        for (const auto& p : predictor.predict(test)) means.push_back(p.mean);
        rows[e].trials[t] = top_k_summary(means, test_val, test_test, s.top);
      }
    } catch (...) {
      errors[t] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

std::string outside_csv(std::span<const OutsideRow> rows) {
  std::string out =
      "encoding,trials,top_val_error,top_val_stderr,top_test_error,top_test_stderr,best_val_error,"
      "best_val_stderr,best_test_error,best_test_stderr\n";
  for (const auto& row : rows) {
    std::vector<double> columns[4];
    for (const auto& t : row.trials) {
      columns[0].push_back(t.top_val);
      columns[1].push_back(t.top_test);
      columns[2].push_back(t.best_val);
      columns[3].push_back(t.best_test);
    }
    out += csv_field(row.encoding) + "," + std::to_string(row.trials.size());
    for (const auto& c : columns) out += "," + mean_and_stderr(c);
    out += "\n";
  }
  return out;
}

// -- b(k, x) curves ----------------------------------------------------------------

std::string bcurve_csv(const BCurveSettings& settings, std::uint64_t seed) {
  if (settings.mc_trials < 1) throw ConfigError("bcurve mc_trials must be >= 1");
  if (!(settings.c > 0)) throw ConfigError("bcurve c must be positive");
  constexpr double e = std::numbers::e;
  std::string out =
      "n,k,x,b_exact,b_monte_carlo,b_monte_carlo_stderr,upper_threshold,lower_threshold,"
      "upper_bound\n";
  for (std::size_t i = 0; i < settings.grid.size(); ++i) {
    const auto [n, k] = settings.grid[i];
    const RandomGraphModel model{n, k, 1};
    validate(model);
    const auto mc = b_curve_monte_carlo(model, settings.mc_trials, derive_seed(seed, i));
    const double upper = 2 * e * settings.c * k / n;
    const double lower = k / (2 * e * settings.c * n);
    for (int x = 1; x <= n; ++x) {
      out += std::to_string(n) + "," + format_double(k) + "," + std::to_string(x) + "," +
             format_double(b_exact(n, k, x)) + "," + format_double(mc[x - 1].value) + "," +
             format_double(mc[x - 1].std_error) + "," + format_double(upper) + "," +
             format_double(lower) + "," + format_double(1 - std::pow(settings.c, 1.0 - x)) + "\n";
    }
  }
  return out;
}

// -- dispatch ------------------------------------------------------------------------

ExperimentFiles run_experiment(const ExperimentConfig& config, int workers) {
  ExperimentFiles files{{"config.json", to_json_text(config)}};
  const SpecPtr spec = config.space.make();
  if (config.kind == ExperimentKind::BCurve) {
    files.emplace_back("summary.csv", bcurve_csv(config.bcurve, config.seed));
    return files;
  }
  const TabularBenchmark bench = config.benchmark.load(spec);
  switch (config.kind) {
    case ExperimentKind::Ablation: {
      const auto result = run_ablation(config, bench, workers);
      files.emplace_back("summary.csv", ablation_summary_csv(result));
      files.emplace_back("curves.csv", ablation_curves_csv(result, config.budget, config.checkpoints));
      files.emplace_back("trials.csv", ablation_trials_csv(result, config.budget, config.checkpoints));
      for (std::size_t c = 0; c < result.traces.size(); ++c)
        for (std::size_t t = 0; t < result.traces[c].size(); ++t)
          files.emplace_back(trace_file_name(c, static_cast<int>(t)), result.traces[c][t].to_jsonl());
      break;
    }
    case ExperimentKind::Truncation: {
      const auto points = run_truncation_sweep(config, bench, workers);
      files.emplace_back("summary.csv", truncation_csv(points));
      for (const auto& p : points)
        for (std::size_t t = 0; t < p.traces.size(); ++t)
          files.emplace_back("traces/" + p.family + "_b" + std::to_string(p.bits) + "_trial" +
                                 std::to_string(t) + ".jsonl",
                             p.traces[t].to_jsonl());
      break;
    }
    case ExperimentKind::OutsideSearchSpace: {
      const Partition part = partition_benchmark(bench, config.outside);
      const auto rows = run_outside_search_space(config, bench, workers);
      files.emplace_back("summary.csv", outside_csv(rows));
      std::string trials = "encoding,trial,top_val_error,top_test_error,best_val_error,best_test_error\n";
      for (const auto& row : rows)
        for (std::size_t t = 0; t < row.trials.size(); ++t) {
          const auto& s = row.trials[t];
          trials += csv_field(row.encoding) + "," + std::to_string(t) + "," + format_double(s.top_val) +
                    "," + format_double(s.top_test) + "," + format_double(s.best_val) + "," +
                    format_double(s.best_test) + "\n";
        }
      files.emplace_back("trials.csv", trials);
      files.emplace_back("partition.csv",
                         "train_available,test_available,train_size,test_size\n" +
                             std::to_string(part.train.size()) + "," + std::to_string(part.test.size()) +
                             "," + std::to_string(std::min<std::size_t>(part.train.size(), config.outside.train_size)) +
                             "," + std::to_string(std::min<std::size_t>(part.test.size(), config.outside.test_size)) +
                             "\n");
      break;
    }
    case ExperimentKind::Tune: {
      const TabularBenchmark evaluation = config.tune.evaluation.load(spec);
      AlgorithmConfig base = cell_config(config.tune.cell, config, spec);
      const auto result = tune_hyperparameters(
          base, bench, evaluation.id(),
          {config.tune.iterations, config.tune.trials, config.tune.queries, config.seed}, workers);
      std::string csv =
          "iteration,score,population,tournament,mutation,initial_queries,pool_random,pool_mutations,"
          "parents,mutations_per_parent,ensemble_learning_rate,ensemble_epochs\n";
      for (std::size_t i = 0; i < result.history.size(); ++i) {
        const auto& [p, score] = result.history[i];
        csv += std::to_string(i) + "," + format_double(score) + "," + std::to_string(p.population) +
               "," + std::to_string(p.tournament) + "," + format_double(p.mutation) + "," +
               std::to_string(p.initial_queries) + "," + std::to_string(p.pool_random) + "," +
               std::to_string(p.pool_mutations) + "," + std::to_string(p.parents) + "," +
               std::to_string(p.mutations_per_parent) + "," +
               format_double(p.ensemble.learning_rate) + "," + std::to_string(p.ensemble.epochs) +
               "\n";
      }
      files.emplace_back("summary.csv", csv);
      files.emplace_back("tuned.json", to_json_text(result.best.params));
      files.emplace_back("benchmarks.csv", "role,id\ntuning," + csv_field(bench.id()) +
                                               "\nevaluation," + csv_field(evaluation.id()) + "\n");
      break;
    }
    case ExperimentKind::BCurve: break;
  }
  return files;
}

}  // namespace nasenc
