// Runs every acceptance criterion and prints one PASS/FAIL line each.
// Exit status counts the failures that were not declared expected.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nasenc/algorithms.hpp"
#include "nasenc/benchmark.hpp"
#include "nasenc/experiments.hpp"
#include "nasenc/mlp.hpp"
#include "nasenc/predictor.hpp"
#include "nasenc/random_graph.hpp"
#include "nasenc/stats.hpp"
#include "nasenc/subroutines.hpp"

using namespace nasenc;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (pass) detail << "first failure: " << what << "; ";
    pass = false;
  }
};

using Criterion = std::function<void(Verdict&)>;

// -- 1. encoding dimensions ------------------------------------------------------

void dimensions(Verdict& v) {
  const auto s7 = make_spec(7, 9, 3);
  const auto dim = [&](Family f) { return dimension(EncodingKind(f, s7)); };
  v.require(dim(Family::AdjOneHot) == 28, "AdjOneHot(n=7) = 28");
  v.require(dim(Family::AdjCategorical) == 16, "AdjCategorical(n=7,k=9) = 16");
  v.require(dim(Family::AdjContinuous) == 29, "AdjContinuous(n=7) = 29");
  v.require(dim(Family::PathOneHot) == 364, "PathOneHot(n=7,q=3) = 364");
  const EncodingKind path(Family::PathOneHot, s7);
  const auto a = sample_random(EncodingKind(Family::AdjOneHot, s7), 1);
  v.require(truncate_paths(encode(a, path), 3).values.size() == 40, "truncated x=3 -> 40");
  v.require(dimension(path.truncated_to_path_length(3)) == 40, "truncated kind dimension 40");
  v.detail << "28/16/29/364/40";
}

// -- 2. expected-path bracket ----------------------------------------------------

void fact_sandwich(Verdict& v) {
  int points = 0;
  for (int n : {10, 20, 40, 60}) {
    const double full = n * (n - 1) / 2.0;
    for (double k : {double(n), 3.0 * n, full / 2, full}) {
      for (int l = 2; l <= n - 1; ++l) {
        const auto b = expected_paths_bounds(n, k, l);
        const double a = log_expected_paths(n, k, l);
        const double slack = 1e-9 * std::max(1.0, std::abs(a));
        ++points;
        v.require(b.log_lower <= a + slack && a <= b.log_upper + slack,
                  "n=" + std::to_string(n) + " k=" + std::to_string(k) + " l=" + std::to_string(l));
      }
    }
  }
  v.detail << points << " grid points";
}

// -- 3. phase transition -------------------------------------------------------------

void theorem1(Verdict& v) {
  int checked = 0, vacuous = 0;
  auto run = [&](int n, double k, double c) {
    const auto r = verify_theorem1(n, k, c);
    if (r.vacuous()) {
      ++vacuous;
      return r;
    }
    ++checked;
    v.require(r.passed(), r.summary());
    return r;
  };
  for (int n : {10, 20, 40, 60, 100})
    for (double k : {double(n), 3.0 * n, n * (n - 1) / 4.0, n * (n - 1) / 2.0})
      for (double c : {3.1, 4.0}) run(n, k, c);
  const auto up = run(50, 100, 4);
  v.require(!up.upper.empty(), "upper regime at (50,100,4) is non-vacuous");
  const auto low = run(100, 4000, 3.1);
  v.require(!low.lower.empty(), "lower regime at (100,4000,3.1) is non-vacuous");
  for (const auto& chk : low.lower) v.require(chk.b < std::ldexp(1.0, -20), "b_exact < 2^-20");
  v.detail << checked << " non-vacuous points, " << vacuous << " vacuous";
}

// -- 4. edge presence under conditioning ----------------------------------------------

void theorem2(Verdict& v) {
  for (auto [n, k] : std::vector<std::pair<int, double>>{{10, 10}, {20, 40}, {30, 200}}) {
    const RandomGraphModel model{n, k, 1};
    const int slots = n * (n - 1) / 2;
    Rng rng(derive_seed(2024, static_cast<std::uint64_t>(n)));
    std::set<int> picked;
    while (picked.size() < 5) picked.insert(std::uniform_int_distribution<int>(0, slots - 1)(rng));
    const auto reports =
        verify_theorem2(model, {picked.begin(), picked.end()}, 1'000'000, derive_seed(99, n));
    double worst = INFINITY;
    for (const auto& r : reports) {
      worst = std::min(worst, r.gap());
      std::ostringstream what;
      what << "(" << n << "," << k << ") edge " << r.edge << " lower bound " << r.lower
           << " vs p " << r.edge_prob << " (estimate " << r.estimate << ")";
      v.require(r.passed(), what.str());
      v.require(r.unconditioned_consistent(), "unconditioned estimate off at edge " +
                                                  std::to_string(r.edge));
    }
    v.detail << "(" << n << "," << k << ") min gap " << worst << "; ";
  }
}

// -- 5. b(k, x) ------------------------------------------------------------------------

void b_consistency(Verdict& v) {
  struct Point {
    int n;
    double k;
    int x;
  };
  // x at fixed quantiles of each curve, so every point is resolvable at this
  // sample size; the far tail of b is covered by the closed-form checks
  std::vector<Point> grid;
  for (auto [n, k] : std::vector<std::pair<int, double>>{
           {7, 9}, {10, 20}, {20, 40}, {30, 100}, {50, 200}, {40, 100}, {15, 60}}) {
    for (double target : {0.1, 0.4, 0.7, 0.95}) {
      int x = 1;
      while (b_exact(n, k, x) < target) ++x;
      const Point p{n, k, x};
      const bool seen = std::any_of(grid.begin(), grid.end(), [&](const Point& g) {
        return g.n == p.n && g.k == p.k && g.x == p.x;
      });
      if (!seen && grid.size() < 20) grid.push_back(p);
    }
  }
  v.require(grid.size() == 20, "grid has " + std::to_string(grid.size()) + " points");
  double worst = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& p = grid[i];
    const double exact = b_exact(p.n, p.k, p.x);
    const auto mc = b_monte_carlo({p.n, p.k, 1}, p.x, 100'000, derive_seed(5, i));
    const double z = std::abs(mc.value - exact) / mc.std_error;
    worst = std::max(worst, z);
    v.require(z <= 3, "n=" + std::to_string(p.n) + " x=" + std::to_string(p.x) + " z=" +
                          std::to_string(z));
    v.require(b_exact(p.n, p.k, p.n) == 1.0, "b(k,n) = 1");
  }
  v.detail << grid.size() << " points (n,k,x):";
  for (const auto& p : grid) v.detail << " (" << p.n << "," << p.k << "," << p.x << ")";
  v.detail << "; max |z| " << worst;
}

// -- 6. encoding semantics ----------------------------------------------------------

void semantics(Verdict& v) {
  const auto spec = make_spec(5, 10, 3);
  const EncodingKind adj(Family::AdjOneHot, spec), path(Family::PathOneHot, spec);
  std::map<CanonicalKey, std::vector<double>> class_code;
  std::map<std::vector<double>, std::set<CanonicalKey>> classes_of_code;
  std::size_t archs = 0;
  enumerate_space(spec, {}, [&](const Architecture& a) {
    ++archs;
    v.require(decode(encode(a, adj)) == a, "adjacency round-trip at " + a.to_text());
    const auto code = encode(a, path).values;
    const auto key = canonical_form(a);
    const auto [it, fresh] = class_code.try_emplace(key, code);
    v.require(fresh || it->second == code, "isomorphic members differ at " + a.to_text());
    classes_of_code[code].insert(key);
    v.require(path_index_set(decode(encode(a, path))) == path_index_set(a),
              "path set changed at " + a.to_text());
  });
  std::size_t witnesses = 0;
  for (const auto& [code, keys] : classes_of_code) witnesses += keys.size() >= 2;
  v.require(witnesses >= 1, "no non-injectivity witness");
  v.detail << archs << " architectures, " << class_code.size() << " classes, " << witnesses
           << " path codes shared by several classes";
}

// -- 7. subroutine statistics -----------------------------------------------------------

// Exact mean changed-feature count of accepted perturbations, by enumerating
// every reachable feature vector.
double perturb_expectation(const Architecture& base, const EncodingKind& kind, double m) {
  const auto x = encode(base, kind).values;
  const auto domains = feature_domains(kind);
  const double rate = m / static_cast<double>(x.size());
  std::vector<std::vector<double>> values;
  for (const auto& d : domains) {
    std::vector<double> vs;
    switch (d.type) {
      case FeatureDomain::Type::Fixed: vs = {double(d.lo)}; break;
      case FeatureDomain::Type::Binary: vs = {0, 1}; break;
      default:
        for (int i = d.lo; i <= d.hi; ++i) vs.push_back(i);
    }
    values.push_back(vs);
  }
  std::vector<std::size_t> digit(x.size(), 0);
  double mass = 0, weighted = 0;
  for (;;) {
    FeatureVector fv{x, kind};
    double prob = 1;
    int changed = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      fv.values[i] = values[i][digit[i]];
      const double each = rate / static_cast<double>(values[i].size());
      if (fv.values[i] == x[i]) {
        prob *= (1 - rate) + each;
      } else {
        prob *= each;
        ++changed;
      }
    }
    const auto a = try_decode(fv);
    if (a && is_valid(*a) && a->edge_count() <= kind.spec()->max_edges) {
      mass += prob;
      weighted += prob * changed;
    }
    std::size_t i = 0;
    while (i < x.size() && ++digit[i] == values[i].size()) digit[i++] = 0;
    if (i == x.size()) break;
  }
  return weighted / mass;
}

void subroutine_stats(Verdict& v) {
  const auto spec = make_spec(4, 4, 3);
  const EncodingKind adj(Family::AdjOneHot, spec);
  const auto space = enumerate_space(spec);
  int cases = 0;
  double worst = 0;
  for (std::size_t b = 0; b < space.size(); b += std::max<std::size_t>(1, space.size() / 4)) {
    const auto& base = space[b];
    const auto x = encode(base, adj).values;
    for (double m : {1.0, 2.0}) {
      const double expected = perturb_expectation(base, adj, m);
      Rng rng(derive_seed(7, b * 10 + static_cast<std::size_t>(m)));
      std::vector<double> counts;
      for (int t = 0; t < 10'000; ++t) {
        const auto r = perturb(base, adj, m, rng);
        const auto y = encode(r.arch, adj).values;
        int changed = 0;
        for (std::size_t i = 0; i < x.size(); ++i) changed += y[i] != x[i];
        counts.push_back(changed);
      }
      const double z = std::abs(stats::mean(counts) - expected) / stats::standard_error(counts);
      worst = std::max(worst, z);
      ++cases;
      v.require(z <= 3, base.to_text() + " m=" + std::to_string(m) + " z=" + std::to_string(z));
    }
  }
  const UniformSpaceSampler sampler(make_spec(5, 10, 3));
  std::map<CanonicalKey, std::size_t> index;
  for (std::size_t i = 0; i < sampler.size(); ++i) index[canonical_form(sampler.members()[i])] = i;
  std::vector<std::int64_t> counts(sampler.size(), 0);
  Rng rng(13);
  for (int i = 0; i < 100'000; ++i) ++counts[index.at(canonical_form(sampler.sample(rng)))];
  const double p = stats::chi_square_uniform(counts).p_value;
  v.require(p > 0.01, "uniform sampler chi-square p = " + std::to_string(p));
  v.detail << cases << " perturb cases, max |z| " << worst << "; chi-square p " << p << " over "
           << sampler.size() << " classes";
}

// -- 8. predictors ----------------------------------------------------------------------------

void predictors(Verdict& v) {
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed + 100);
    std::normal_distribution<double> normal;
    Mlp net(6, {8, 4}, seed);
    for (double& w : net.parameters()) w += 0.5 * normal(rng);
    RowMatrix x(9, 6);
    for (auto& e : x.data) e = normal(rng);
    std::vector<double> y(9);
    for (auto& e : y) e = normal(rng);
    std::vector<double> grad(net.parameters().size());
    net.loss_and_gradient(x, y, grad);
    Mlp probe = net;
    double diff = 0, norm = 0;
    for (std::size_t i = 0; i < grad.size(); ++i) {
      const double orig = probe.parameters()[i], h = 1e-6;
      probe.parameters()[i] = orig + h;
      const double up = probe.loss(x, y);
      probe.parameters()[i] = orig - h;
      const double down = probe.loss(x, y);
      probe.parameters()[i] = orig;
      const double fd = (up - down) / (2 * h);
      diff += (grad[i] - fd) * (grad[i] - fd);
      norm += fd * fd;
    }
    worst = std::max(worst, std::sqrt(diff / norm));
  }
  v.require(worst <= 1e-4, "gradient mismatch " + std::to_string(worst));

  const auto spec = make_spec(6, 9, 3);
  const auto bench = TabularBenchmark::generate_synthetic(spec, {});
  std::vector<Architecture> train;
  std::vector<double> labels;
  for (std::size_t i = 0; i < bench.size() && train.size() < 60; i += 97) {
    train.push_back(bench.entries()[i].arch);
    labels.push_back(bench.entries()[i].record.val_error);
  }
  const GpParams gp_params;
  Predictor gp(EncodingKind(Family::AdjOneHot, spec), gp_params);
  gp.fit(train, labels);
  const auto pred = gp.predict(train);
  // noise sd in label units, three of them
  const double tolerance = 3 * std::sqrt(gp_params.noise) * stats::sample_std(labels);
  double residual = 0;
  for (std::size_t i = 0; i < train.size(); ++i)
    residual = std::max(residual, std::abs(pred[i].mean - labels[i]));
  v.require(residual <= tolerance, "GP residual " + std::to_string(residual));
  v.detail << "max gradient mismatch " << worst << "; GP max residual " << residual
           << " (tolerance " << tolerance << ")";
}

// -- 9. search sanity -----------------------------------------------------------------------------

void search_sanity(Verdict& v) {
  const auto spec = make_spec(6, 9, 3);
  const auto bench = TabularBenchmark::generate_synthetic(spec, {});
  const EncodingKind adj(Family::AdjOneHot, spec), path(Family::PathOneHot, spec);
  auto run = [&](Algorithm a) {
    AlgorithmConfig c;
    c.algorithm = a;
    const auto use = slots_used(a);
    if (use.sample) c.encodings.sample = adj;
    if (use.perturb) c.encodings.perturb = adj;
    if (use.predictor) c.encodings.predictor = path;
    c.budget.queries = 150;
    c.params.ensemble = {.members = 3, .hidden = {32, 32}, .learning_rate = 0.01, .epochs = 60,
                         .batch_size = 32, .seed = 0, .identical_members = false};
    c.params.batch_size = 10;
    std::vector<double> best;
    for (const auto& t : run_trials(c, bench, 100, 31337)) best.push_back(t.final_val_error());
    return best;
  };
  const auto random = run(Algorithm::RandomSearch);
  v.detail << "random " << stats::mean(random);
  for (Algorithm a : {Algorithm::RegularizedEvolution, Algorithm::LocalSearch,
                      Algorithm::BayesianOptimization, Algorithm::Bananas}) {
    const auto best = run(a);
    const auto t = stats::paired_t_less(best, random);
    const double m = stats::mean(best);
    v.require(m < stats::mean(random) && t.p_value < 0.05,
              std::string(algorithm_name(a)) + " p=" + std::to_string(t.p_value));
    v.detail << "; " << algorithm_name(a) << " " << m << " (p " << t.p_value << ")";
  }
}

// -- 10. truncation direction ------------------------------------------------------------------------

void truncation_direction(Verdict& v) {
  ExperimentConfig c;
  c.kind = ExperimentKind::Truncation;
  c.trials = 200;
  const auto spec = c.space.make();
  const auto bench = c.benchmark.load(spec);
  const auto points = run_truncation_sweep(c, bench);
  std::map<std::string, double> full;
  std::map<std::size_t, std::map<std::string, double>> increase;
  for (const auto& p : points) {
    if (!p.error.empty()) continue;
    const double m = stats::mean(p.final_test);
    if (p.full) full[p.family] = m;
    else increase[p.bits][p.family] = m - full.at(p.family);
  }
  const auto bits = default_truncation_bits(spec);
  int interior = 0, wins = 0;
  for (std::size_t b : bits) {
    if (b == 0 || b >= dimension(EncodingKind(Family::AdjOneHot, spec))) continue;
    ++interior;
    const auto& row = increase[b];
    const bool both = row.contains("adj_onehot") && row.contains("path_onehot");
    const bool win = both && row.at("path_onehot") < row.at("adj_onehot");
    wins += win;
    v.detail << b << " bits: path ";
    if (both) v.detail << row.at("path_onehot") << " vs adj " << row.at("adj_onehot") << "; ";
    else v.detail << "n/a; ";
  }
  v.require(interior == 4, "expected 4 interior points, got " + std::to_string(interior));
  v.require(wins >= 3, "path smaller at " + std::to_string(wins) + " of 4");
}

// -- 11. equivalence classes -------------------------------------------------------------------------

void class_direction(Verdict& v) {
  const auto spec = make_spec(6, 9, 3);
  const auto bench = TabularBenchmark::generate_synthetic(spec, {});
  const auto s = equivalence_class_stats(bench, EncodingKind(Family::PathOneHot, spec));
  v.require(s.mean_within_std < s.overall_std, "within-class std not below overall");
  v.detail << "within " << s.mean_within_std << " overall " << s.overall_std << "; by x:";
  double prev = INFINITY;
  for (const auto& row : class_stats_sweep(bench, Family::PathOneHot)) {
    if (!row.path_length) continue;
    v.detail << " " << *row.path_length << ":" << row.stats.mean_within_std;
    v.require(row.stats.mean_within_std <= prev + 1e-12,
              "within-class std rose at x=" + std::to_string(*row.path_length));
    prev = row.stats.mean_within_std;
  }
}

// -- 12. determinism ---------------------------------------------------------------------------------

void determinism(Verdict& v) {
  std::vector<ExperimentConfig> configs;
  ExperimentConfig base;
  base.space = {5, 10, 3, {}};
  base.trials = 4;
  base.budget = {std::nullopt, 40};
  base.seed = 8;
  for (auto kind : {ExperimentKind::Ablation, ExperimentKind::Truncation,
                    ExperimentKind::OutsideSearchSpace, ExperimentKind::BCurve,
                    ExperimentKind::Tune}) {
    auto c = base;
    c.kind = kind;
    c.cells = {{.label = "",
                .algorithm = Algorithm::Bananas,
                .sample = "adj_onehot",
                .perturb = "path_onehot",
                .predictor = "path_onehot",
                .params = {}}};
    c.cells[0].params.ensemble = {.members = 2, .hidden = {8}, .learning_rate = 0.01, .epochs = 5,
                                  .batch_size = 16, .seed = 0, .identical_members = false};
    c.outside = {.train_max_nodes = 5, .train_max_edges = 5, .test_nodes = 5, .test_min_edges = 6,
                 .test_max_edges = 7, .train_size = 50, .test_size = 50, .top = 10,
                 .encodings = {"adj_onehot", "path_onehot"},
                 .ensemble = c.cells[0].params.ensemble};
    c.bcurve.grid = {{10, 20}};
    c.bcurve.mc_trials = 2000;
    c.tune.iterations = 3;
    c.tune.trials = 2;
    c.tune.queries = 20;
    configs.push_back(c);
  }
  for (const auto& c : configs) {
    const auto once = run_experiment(c, 1);
    const auto again = run_experiment(c, 2);
    std::size_t csvs = 0;
    bool same = once.size() == again.size();
    for (std::size_t i = 0; same && i < once.size(); ++i) {
      if (!once[i].first.ends_with(".csv")) continue;
      ++csvs;
      same = once[i] == again[i];
    }
    v.require(same && csvs > 0, std::string(experiment_kind_name(c.kind)) + " differs on rerun");
    v.detail << experiment_kind_name(c.kind) << " " << csvs << " csv; ";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Acceptance checks");
  std::vector<int> only, expect_fail;
  app.add_option("--only", only, "Run just these criteria");
  app.add_option("--expect-fail", expect_fail,
                 "Criteria known to fail; reported as FAIL but not counted in the exit status");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, Criterion>> criteria{
      {"encoding dimensions", dimensions},
      {"expected-path bounds bracket the exact count", fact_sandwich},
      {"b(k,x) phase transition", theorem1},
      {"conditioning raises edge probability", theorem2},
      {"b(k,x) Monte Carlo agrees with the closed form", b_consistency},
      {"encoding semantics on the n=5 space", semantics},
      {"perturbation and uniform sampling statistics", subroutine_stats},
      {"predictor gradient and GP interpolation", predictors},
      {"every search strategy beats random search", search_sanity},
      {"path encoding degrades less under truncation", truncation_direction},
      {"path classes explain variance", class_direction},
      {"experiments are byte-reproducible", determinism},
  };
  int counted = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.require(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool expected = std::find(expect_fail.begin(), expect_fail.end(), id) != expect_fail.end();
    std::printf("criterion %2d %s: %s (%.1f s) %s%s\n", id, v.pass ? "PASS" : "FAIL",
                criteria[i].first.c_str(), secs, v.detail.str().c_str(),
                !v.pass && expected ? " [expected failure]" : "");
    std::fflush(stdout);
    counted += !v.pass && !expected;
  }
  return counted;
}
