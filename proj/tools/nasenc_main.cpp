// Command-line front end: experiments and benchmark utilities.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include "CLI11.hpp"
#include "nasenc/benchmark.hpp"
#include "nasenc/experiments.hpp"
#include "nasenc/io.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

struct RunArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> trials;
  int workers = 1;
};

void add_run_options(CLI::App* cmd, RunArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON); defaults apply when omitted");
  cmd->add_option("--seed", args.seed, "master seed (overrides the config)");
  cmd->add_option("--out", args.out, "output directory (overrides the config)");
  cmd->add_option("--trials", args.trials, "trial count (overrides the config)")->check(CLI::Range(1, 1 << 30));
  cmd->add_option("--workers", args.workers, "parallel trial workers")->check(CLI::Range(1, 4096));
}

int run(nasenc::ExperimentKind kind, const RunArgs& args) {
  nasenc::ExperimentConfig config;
  if (!args.config_path.empty())
    config = nasenc::parse_experiment_config(nasenc::read_file(args.config_path));
  config.kind = kind;
  if (args.seed) config.seed = *args.seed;
  if (args.out) config.output = *args.out;
  if (args.trials) config.trials = *args.trials;
  const auto files = nasenc::run_experiment(config, args.workers);
  nasenc::write_experiment(files, config.output);
  std::cout << "wrote " << files.size() << " files to " << config.output << "\n";
  return 0;
}

struct BenchArgs {
  int n_nodes = 6, max_edges = 9, num_ops = 3;
  std::uint64_t seed = 0;
  std::string file;
  std::string out;
};

void add_space_options(CLI::App* cmd, BenchArgs& args) {
  cmd->add_option("--nodes", args.n_nodes, "node count including input and output");
  cmd->add_option("--edges", args.max_edges, "edge budget");
  cmd->add_option("--ops", args.num_ops, "operation count");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Architecture-encoding experiments on tabular NAS benchmarks"};
  app.require_subcommand(1);

  RunArgs run_args;
  std::optional<nasenc::ExperimentKind> chosen;
  const std::pair<nasenc::ExperimentKind, const char*> kinds[] = {
      {nasenc::ExperimentKind::Ablation, "subroutine x encoding matrix of search runs"},
      {nasenc::ExperimentKind::Truncation, "final error against truncated encoding length"},
      {nasenc::ExperimentKind::OutsideSearchSpace, "predictor trained on small graphs, ranked on larger ones"},
      {nasenc::ExperimentKind::BCurve, "short-path fraction b(k,x), closed form and Monte Carlo"},
      {nasenc::ExperimentKind::Tune, "random hyperparameter search on a separate benchmark"},
  };
  for (const auto& [kind, what] : kinds) {
    auto* cmd = app.add_subcommand(std::string(nasenc::experiment_kind_name(kind)), what);
    if (kind == nasenc::ExperimentKind::BCurve) cmd->alias("b-curve");
    add_run_options(cmd, run_args);
    cmd->callback([&chosen, kind = kind] { chosen = kind; });
  }

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "benchmark utilities");
  bench->require_subcommand(1);
  auto* gen = bench->add_subcommand("gen", "write a synthetic benchmark as JSON lines");
  add_space_options(gen, bench_args);
  gen->add_option("--seed", bench_args.seed, "generator seed");
  gen->add_option("--out", bench_args.out, "output file")->required();
  auto* stats = bench->add_subcommand("stats", "equivalence-class statistics per encoding");
  add_space_options(stats, bench_args);
  stats->add_option("--seed", bench_args.seed, "synthetic generator seed");
  stats->add_option("--file", bench_args.file, "JSON-lines benchmark instead of a synthetic one");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (chosen) return run(*chosen, run_args);
    const auto spec = nasenc::make_spec(bench_args.n_nodes, bench_args.max_edges, bench_args.num_ops);
    nasenc::SyntheticParams params;
    params.seed = bench_args.seed;
    if (gen->parsed()) {
      const auto table = nasenc::TabularBenchmark::generate_synthetic(spec, params);
      table.save(bench_args.out);
      std::cout << table.id() << ": " << table.size() << " architectures\n";
      return 0;
    }
    const auto table = bench_args.file.empty()
                           ? nasenc::TabularBenchmark::generate_synthetic(spec, params)
                           : nasenc::TabularBenchmark::load(bench_args.file, spec);
    std::cout << "encoding,classes,mean_within_std,class_mean_within_std,overall_std\n";
    for (int f = 0; f < 6; ++f) {
      const nasenc::EncodingKind kind(static_cast<nasenc::Family>(f), spec);
      const auto s = nasenc::equivalence_class_stats(table, kind);
      std::cout << kind.tag() << "," << s.class_count << "," << nasenc::format_double(s.mean_within_std)
                << "," << nasenc::format_double(s.class_mean_within_std) << ","
                << nasenc::format_double(s.overall_std) << "\n";
    }
    return 0;
  } catch (const nasenc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}
