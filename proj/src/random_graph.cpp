#include "nasenc/random_graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "nasenc/stats.hpp"

namespace nasenc {

namespace {

constexpr std::int64_t kChunk = 2048;

double unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Successor masks of one unconditioned draw.
struct Draw {
  std::uint64_t succ[kMaxNodes];
};

void draw_edges(int n, double p, Rng& rng, Draw& d) {
  for (int i = 0; i < n; ++i) {
    std::uint64_t mask = 0;
    for (int j = i + 1; j < n; ++j)
      if (unit(rng) < p) mask |= 1ULL << j;
    d.succ[i] = mask;
  }
}

bool connects(int n, const std::uint64_t* succ) {
  std::uint64_t reach = 1;
  for (int i = 0; i < n - 1; ++i)
    if ((reach >> i) & 1U) reach |= succ[i];
  return (reach >> (n - 1)) & 1U;
}

// counts[L] = number of input-output paths with L edges, L in 1..n-1.
void count_paths_by_length(int n, const Draw& d, std::vector<double>& counts,
                           std::vector<double>& scratch) {
  scratch.assign(static_cast<std::size_t>(n) * n, 0.0);
  auto at = [&](int node, int len) -> double& { return scratch[node * n + len]; };
  at(0, 0) = 1;
  std::vector<int> longest(n, -1);
  longest[0] = 0;
  for (int i = 0; i < n - 1; ++i) {
    if (longest[i] < 0) continue;
    for (std::uint64_t m = d.succ[i]; m; m &= m - 1) {
      const int j = std::countr_zero(m);
      for (int len = 0; len <= longest[i]; ++len) at(j, len + 1) += at(i, len);
      longest[j] = std::max(longest[j], longest[i] + 1);
    }
  }
  counts.assign(n, 0.0);
  for (int len = 1; len < n; ++len) counts[len] = at(n - 1, len);
}

double log_choose(int a, int b) {
  return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0);
}

double log_sum_exp(const std::vector<double>& xs) {
  double top = -std::numeric_limits<double>::infinity();
  for (double x : xs) top = std::max(top, x);
  if (!std::isfinite(top)) return top;
  double s = 0;
  for (double x : xs) s += std::exp(x - top);
  return top + std::log(s);
}

void check_trials(std::int64_t trials) {
  if (trials < 1) throw ConfigError("trials must be >= 1");
}

SpecPtr model_spec(const RandomGraphModel& model) {
  return make_spec(model.n, model.n * (model.n - 1) / 2, model.r);
}

Architecture to_architecture(const RandomGraphModel& model, const Draw& d, Rng& rng) {
  std::vector<int> ops(model.n - 2);
  std::uniform_int_distribution<int> op(0, model.r - 1);
  for (auto& o : ops) o = op(rng);
  return Architecture::from_masks(model_spec(model),
                                  std::vector<std::uint64_t>(d.succ, d.succ + model.n),
                                  std::move(ops));
}

// Per-trial cumulative short-path counts: row t holds count(len <= x) for x=1..n-1.
struct CurveSamples {
  int n;
  std::vector<double> cumulative;  // trials x (n-1)
};

void curve_chunk(const RandomGraphModel& model, std::uint64_t seed, std::int64_t chunk,
                 std::int64_t begin, std::int64_t end, CurveSamples& out) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(chunk)));
  const int n = model.n;
  const double p = model.edge_prob();
  Draw d;
  std::vector<double> counts, scratch;
  for (std::int64_t t = begin; t < end; ++t) {
    draw_edges(n, p, rng, d);
    count_paths_by_length(n, d, counts, scratch);
    double run = 0;
    for (int len = 1; len < n; ++len) {
      run += counts[len];
      out.cumulative[t * (n - 1) + (len - 1)] = run;
    }
  }
}

CurveSamples curve_samples(const RandomGraphModel& model, std::int64_t trials, std::uint64_t seed,
                           bool parallel) {
  validate(model);
  check_trials(trials);
  CurveSamples s{model.n, std::vector<double>(trials * (model.n - 1))};
  const std::int64_t chunks = (trials + kChunk - 1) / kChunk;
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t c = 0; c < chunks; ++c)
      curve_chunk(model, seed, c, c * kChunk, std::min(trials, (c + 1) * kChunk), s);
  } else {
    for (std::int64_t c = 0; c < chunks; ++c)
      curve_chunk(model, seed, c, c * kChunk, std::min(trials, (c + 1) * kChunk), s);
  }
  return s;
}

constexpr int kBootstrap = 200;

// Ratio estimates for the requested columns plus bootstrap standard errors.
std::vector<Estimate> ratio_estimates(const CurveSamples& s, std::int64_t trials,
                                      std::uint64_t seed) {
  const int width = s.n - 1;
  auto ratios = [&](auto index_of) {
    std::vector<double> sums(width, 0.0);
    for (std::int64_t t = 0; t < trials; ++t) {
      const double* row = &s.cumulative[index_of(t) * width];
      for (int c = 0; c < width; ++c) sums[c] += row[c];
    }
    return sums;
  };
  const auto sums = ratios([](std::int64_t t) { return t; });
  const double total = sums[width - 1];
  if (total <= 0) throw Error("no paths observed");

  std::vector<double> boot_sum(width, 0.0), boot_sq(width, 0.0);
  Rng rng(derive_seed(seed, 0xb007ULL << 32));
  std::uniform_int_distribution<std::int64_t> pick(0, trials - 1);
  std::vector<std::int64_t> idx(trials);
  int used = 0;
  for (int b = 0; b < kBootstrap; ++b) {
    for (auto& i : idx) i = pick(rng);
    const auto bs = ratios([&](std::int64_t t) { return idx[t]; });
    if (bs[width - 1] <= 0) continue;
    ++used;
    for (int c = 0; c < width; ++c) {
      const double r = bs[c] / bs[width - 1];
      boot_sum[c] += r;
      boot_sq[c] += r * r;
    }
  }
  std::vector<Estimate> out(width + 1);
  for (int c = 0; c < width; ++c) {
    out[c].value = sums[c] / total;
    if (used > 1) {
      const double m = boot_sum[c] / used;
      out[c].std_error = std::sqrt(std::max(0.0, (boot_sq[c] - used * m * m) / (used - 1)));
    }
  }
  out[width - 1] = {1.0, 0.0};
  out[width] = {1.0, 0.0};  // x = n
  return out;
}

Estimate b_monte_carlo_impl(const RandomGraphModel& model, int x, std::int64_t trials,
                            std::uint64_t seed, bool parallel) {
  if (x < 1 || x > model.n) throw ConfigError("x must lie in 1..n");
  const auto s = curve_samples(model, trials, seed, parallel);
  return ratio_estimates(s, trials, seed)[x - 1];
}

struct EdgeTally {
  std::int64_t present = 0, pivotal = 0, raw_present = 0;
};

struct Theorem2Chunk {
  std::int64_t raw = 0;
  std::vector<EdgeTally> edges;
};

void theorem2_chunk(const RandomGraphModel& model, const std::vector<std::pair<int, int>>& ends,
                    std::uint64_t seed, std::int64_t chunk, std::int64_t accepted_target,
                    Theorem2Chunk& out) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(chunk)));
  const int n = model.n;
  const double p = model.edge_prob();
  out.edges.assign(ends.size(), {});
  Draw d;
  std::int64_t accepted = 0, misses = 0;
  while (accepted < accepted_target) {
    draw_edges(n, p, rng, d);
    ++out.raw;
    for (std::size_t e = 0; e < ends.size(); ++e)
      out.edges[e].raw_present += (d.succ[ends[e].first] >> ends[e].second) & 1U;
    if (!connects(n, d.succ)) {
      if (++misses > 1'000'000) throw RejectionCeiling("acceptance probability too low");
      continue;
    }
    misses = 0;
    ++accepted;
    for (std::size_t e = 0; e < ends.size(); ++e) {
      const auto [i, j] = ends[e];
      if (!((d.succ[i] >> j) & 1U)) continue;
      ++out.edges[e].present;
      d.succ[i] &= ~(1ULL << j);
      if (!connects(n, d.succ)) ++out.edges[e].pivotal;
      d.succ[i] |= 1ULL << j;
    }
  }
}

std::vector<Theorem2Report> theorem2_impl(const RandomGraphModel& model,
                                          const std::vector<int>& edges, std::int64_t trials,
                                          std::uint64_t seed, double confidence, bool parallel) {
  validate(model);
  check_trials(trials);
  const int slots = model.n * (model.n - 1) / 2;
  std::vector<std::pair<int, int>> ends;
  for (int z : edges) {
    if (z < 0 || z >= slots) throw ConfigError("edge index out of range");
    ends.push_back(edge_at(model.n, z));
  }
  const std::int64_t chunks = (trials + kChunk - 1) / kChunk;
  std::vector<Theorem2Chunk> parts(chunks);
  auto run = [&](std::int64_t c) {
    theorem2_chunk(model, ends, seed, c, std::min(trials, (c + 1) * kChunk) - c * kChunk, parts[c]);
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t c = 0; c < chunks; ++c) run(c);
  } else {
    for (std::int64_t c = 0; c < chunks; ++c) run(c);
  }

  const double p = model.edge_prob();
  std::vector<Theorem2Report> reports;
  for (std::size_t e = 0; e < ends.size(); ++e) {
    EdgeTally total;
    std::int64_t raw = 0;
    for (const auto& part : parts) {
      raw += part.raw;
      total.present += part.edges[e].present;
      total.pivotal += part.edges[e].pivotal;
      total.raw_present += part.edges[e].raw_present;
    }
    Theorem2Report r{};
    r.edge = edges[e];
    r.edge_prob = p;
    r.trials = trials;
    r.naive_estimate = static_cast<double>(total.present) / trials;
    r.naive_lower = stats::wilson_lower(total.present, trials, confidence);
    r.pivotal_count = total.pivotal;
    const double pivotal = static_cast<double>(total.pivotal) / trials;
    r.estimate = p + (1 - p) * pivotal;
    r.lower = p + (1 - p) * stats::wilson_lower(total.pivotal, trials, confidence);
    r.raw_draws = raw;
    r.unconditioned_estimate = static_cast<double>(total.raw_present) / raw;
    r.unconditioned_stderr =
        std::sqrt(r.unconditioned_estimate * (1 - r.unconditioned_estimate) / raw);
    reports.push_back(r);
  }
  return reports;
}

}  // namespace

void validate(const RandomGraphModel& model) {
  if (model.n < 2 || model.n > kMaxNodes) throw ConfigError("random graph needs 2 <= n <= 64");
  if (model.r < 1) throw ConfigError("random graph needs r >= 1");
  const double p = model.edge_prob();
  if (!(p > 0) || p > 1) throw ConfigError("edge probability must lie in (0, 1]");
}

Architecture sample(const RandomGraphModel& model, std::uint64_t seed, std::int64_t max_restarts) {
  validate(model);
  Rng rng(seed);
  Draw d;
  for (std::int64_t attempt = 0; attempt <= max_restarts; ++attempt) {
    draw_edges(model.n, model.edge_prob(), rng, d);
    if (connects(model.n, d.succ)) return to_architecture(model, d, rng);
  }
  throw RejectionCeiling("acceptance probability too low");
}

Architecture sample_unconditioned(const RandomGraphModel& model, std::uint64_t seed) {
  validate(model);
  Rng rng(seed);
  Draw d;
  draw_edges(model.n, model.edge_prob(), rng, d);
  return to_architecture(model, d, rng);
}

double log_expected_paths(int n, double k, int length) {
  if (length < 1 || length > n - 1) return -std::numeric_limits<double>::infinity();
  const double p = 2.0 * k / (static_cast<double>(n) * (n - 1));
  return log_choose(n - 2, length - 1) + length * std::log(p);
}

double expected_paths(int n, double k, int length) {
  return std::exp(log_expected_paths(n, k, length));
}

PathBounds expected_paths_bounds(int n, double k, int length) {
  if (length < 2 || length > n - 1) throw ConfigError("bounds need 2 <= length <= n-1");
  const double nn = static_cast<double>(n) * (n - 1);
  const double base = std::log(2.0 * k / nn);
  const double ratio = std::log(2.0 * k * (n - 2) / ((length - 1) * nn));
  return {base + (length - 1) * ratio, base + (length - 1) * (ratio + 1.0)};
}

namespace {
std::vector<double> log_terms(int n, double k, int from, int to) {
  std::vector<double> out;
  for (int len = from; len <= to; ++len) out.push_back(log_expected_paths(n, k, len));
  return out;
}
}  // namespace

double b_exact(int n, double k, int x) {
  if (x < 1) throw ConfigError("x must be >= 1");
  if (x >= n - 1) return 1.0;
  return std::exp(log_sum_exp(log_terms(n, k, 1, x)) - log_sum_exp(log_terms(n, k, 1, n - 1)));
}

double log_b_complement(int n, double k, int x) {
  if (x < 1) throw ConfigError("x must be >= 1");
  if (x >= n - 1) return -std::numeric_limits<double>::infinity();
  return log_sum_exp(log_terms(n, k, x + 1, n - 1)) - log_sum_exp(log_terms(n, k, 1, n - 1));
}

Estimate b_monte_carlo(const RandomGraphModel& model, int x, std::int64_t trials,
                       std::uint64_t seed) {
  return b_monte_carlo_impl(model, x, trials, seed, true);
}

Estimate b_monte_carlo_serial(const RandomGraphModel& model, int x, std::int64_t trials,
                              std::uint64_t seed) {
  return b_monte_carlo_impl(model, x, trials, seed, false);
}

std::vector<Estimate> b_curve_monte_carlo(const RandomGraphModel& model, std::int64_t trials,
                                          std::uint64_t seed) {
  return ratio_estimates(curve_samples(model, trials, seed, true), trials, seed);
}

bool Theorem1Report::passed() const {
  auto ok = [](const Theorem1Check& c) { return c.holds; };
  return std::all_of(upper.begin(), upper.end(), ok) && std::all_of(lower.begin(), lower.end(), ok);
}

std::string Theorem1Report::summary() const {
  if (vacuous()) return "vacuous";
  char buf[160];
  std::snprintf(buf, sizeof buf, "upper %zu points, lower %zu points, %s", upper.size(),
                lower.size(), passed() ? "all hold" : "VIOLATED");
  return buf;
}

Theorem1Report verify_theorem1(int n, double k, double c) {
  if (n < 10 || k < n || k > n * (n - 1) / 2.0 || !(c > 3))
    throw ConfigError("theorem 1 needs 10 <= n <= k <= n(n-1)/2 and c > 3");
  constexpr double e = std::numbers::e;
  Theorem1Report r{n, k, c, 2 * e * c * k / n, k / (2 * e * c * n), {}, {}};
  for (int x = static_cast<int>(std::floor(r.upper_threshold)) + 1; x <= n; ++x) {
    if (x < 1) continue;
    const double lhs = log_b_complement(n, k, x);
    const double rhs = (1 - x) * std::log(c);
    r.upper.push_back({x, b_exact(n, k, x), lhs, rhs, lhs < rhs});
  }
  const double log_cap = -k / (2.0 * n) * std::numbers::ln2;
  for (int x = 1; x < r.lower_threshold && x <= n; ++x) {
    const double b = b_exact(n, k, x);
    const double lhs = x >= n - 1 ? 0.0 : log_sum_exp(log_terms(n, k, 1, x)) -
                                              log_sum_exp(log_terms(n, k, 1, n - 1));
    r.lower.push_back({x, b, lhs, log_cap, lhs < log_cap});
  }
  return r;
}

bool Theorem2Report::unconditioned_consistent() const {
  return std::abs(unconditioned_estimate - edge_prob) <= 3 * unconditioned_stderr;
}

std::vector<Theorem2Report> verify_theorem2(const RandomGraphModel& model,
                                            const std::vector<int>& edges, std::int64_t trials,
                                            std::uint64_t seed, double confidence) {
  return theorem2_impl(model, edges, trials, seed, confidence, true);
}

std::vector<Theorem2Report> verify_theorem2_serial(const RandomGraphModel& model,
                                                   const std::vector<int>& edges,
                                                   std::int64_t trials, std::uint64_t seed,
                                                   double confidence) {
  return theorem2_impl(model, edges, trials, seed, confidence, false);
}

}  // namespace nasenc
