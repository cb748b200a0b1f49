#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nasenc/search_space.hpp"

namespace nasenc {

/// Random DAG: every forward edge independently with probability
/// 2k/(n(n-1)), interior ops uniform over r labels, conditioned on an
/// input-output path.
struct RandomGraphModel {
  int n = 2;
  double k = 1;
  int r = 1;

  double edge_prob() const { return 2.0 * k / (static_cast<double>(n) * (n - 1)); }
};

/// Throws ConfigError unless 2 <= n <= 64, r >= 1 and 0 < edge_prob <= 1.
void validate(const RandomGraphModel& model);

/// Draws from the conditioned model; throws RejectionCeiling ("acceptance
/// probability too low") after `max_restarts` invalid draws.
Architecture sample(const RandomGraphModel& model, std::uint64_t seed,
                    std::int64_t max_restarts = 1'000'000);
/// One unconditioned draw (may be invalid).
Architecture sample_unconditioned(const RandomGraphModel& model, std::uint64_t seed);

/// Expected number of input-output paths with `length` edges in the
/// unconditioned model; 0 outside 1..n-1.
double expected_paths(int n, double k, int length);
double log_expected_paths(int n, double k, int length);

/// Bracket on expected_paths from binomial-coefficient bounds, length >= 2.
struct PathBounds {
  double log_lower;
  double log_upper;
};
PathBounds expected_paths_bounds(int n, double k, int length);

/// Fraction of expected input-output paths with at most x edges (x >= 1).
double b_exact(int n, double k, int x);
/// log(1 - b_exact), accurate when b_exact rounds to 1; -inf for x >= n-1.
double log_b_complement(int n, double k, int x);

struct Estimate {
  double value = 0;
  double std_error = 0;
};

/// Ratio of summed short-path counts to summed path counts over `trials`
/// unconditioned draws; bootstrap standard error. Chunked seeding makes the
/// result independent of the thread count.
Estimate b_monte_carlo(const RandomGraphModel& model, int x, std::int64_t trials,
                       std::uint64_t seed);
/// Single-threaded reference with identical output.
Estimate b_monte_carlo_serial(const RandomGraphModel& model, int x, std::int64_t trials,
                              std::uint64_t seed);

/// Same, for every x in 1..n at once (index x-1).
std::vector<Estimate> b_curve_monte_carlo(const RandomGraphModel& model, std::int64_t trials,
                                          std::uint64_t seed);

/// Compared in log space: upper regime log(1 - b) < (1 - x) log c,
/// lower regime log b < -(k / 2n) log 2.
struct Theorem1Check {
  int x;
  double b;
  double log_lhs;
  double log_rhs;
  bool holds;
};

struct Theorem1Report {
  int n;
  double k;
  double c;
  double upper_threshold;  // statement covers x above this
  double lower_threshold;  // and x below this
  std::vector<Theorem1Check> upper;  // b > 1 - c^(1-x)
  std::vector<Theorem1Check> lower;  // b < 2^(-k/(2n))
  bool vacuous() const { return upper.empty() && lower.empty(); }
  bool passed() const;
  std::string summary() const;
};

/// Requires 10 <= n <= k <= n(n-1)/2 and c > 3 (ConfigError otherwise).
Theorem1Report verify_theorem1(int n, double k, double c);

struct Theorem2Report {
  int edge;               // row-major edge slot
  double edge_prob;       // the bound to beat
  std::int64_t trials;    // conditioned draws
  double naive_estimate;  // presence frequency among conditioned draws
  double naive_lower;
  // Conditioned on the other edges, z is forced exactly when it is the only
  // link left (pivotal), and Bernoulli(p) otherwise: P = p + (1 - p) * pivotal.
  std::int64_t pivotal_count;
  double estimate;
  double lower;
  double gap() const { return lower - edge_prob; }
  // Unconditioned presence frequency over every raw draw, rejected ones included.
  std::int64_t raw_draws;
  double unconditioned_estimate;
  double unconditioned_stderr;
  bool passed() const { return lower > edge_prob; }
  bool unconditioned_consistent() const;
};

/// One-sided Wilson bounds at `confidence`; all `edges` share the same draws.
std::vector<Theorem2Report> verify_theorem2(const RandomGraphModel& model,
                                            const std::vector<int>& edges, std::int64_t trials,
                                            std::uint64_t seed, double confidence = 0.99);
std::vector<Theorem2Report> verify_theorem2_serial(const RandomGraphModel& model,
                                                   const std::vector<int>& edges,
                                                   std::int64_t trials, std::uint64_t seed,
                                                   double confidence = 0.99);

}  // namespace nasenc
