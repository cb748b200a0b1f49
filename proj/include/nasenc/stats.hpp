#pragma once

#include <cstdint>
#include <span>

namespace nasenc::stats {

double mean(std::span<const double> xs);
/// Population standard deviation (divides by count); 0 for fewer than 2 values.
double population_std(std::span<const double> xs);
/// Unbiased sample standard deviation; 0 for fewer than 2 values.
double sample_std(std::span<const double> xs);
/// sample_std / sqrt(count).
double standard_error(std::span<const double> xs);

double normal_quantile(double p);

/// One-sided Wilson score bounds for a binomial proportion.
double wilson_lower(std::int64_t successes, std::int64_t trials, double confidence);
double wilson_upper(std::int64_t successes, std::int64_t trials, double confidence);

struct TestResult {
  double statistic = 0;
  double p_value = 1;
};

/// One-sided paired t-test of H1: mean(a - b) < 0. Equal sizes, at least 2.
TestResult paired_t_less(std::span<const double> a, std::span<const double> b);

/// Pearson chi-square goodness of fit against equal cell probabilities.
TestResult chi_square_uniform(std::span<const std::int64_t> counts);

}  // namespace nasenc::stats
