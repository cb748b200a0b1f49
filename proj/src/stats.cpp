#include "nasenc/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>
#include <vector>

#include "nasenc/common.hpp"

namespace nasenc::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

namespace {
double squared_deviation(std::span<const double> xs) {
  const double m = mean(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return s;
}
}  // namespace

double population_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0;
  return std::sqrt(squared_deviation(xs) / static_cast<double>(xs.size()));
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) return 0;
  return std::sqrt(squared_deviation(xs) / static_cast<double>(xs.size() - 1));
}

double standard_error(std::span<const double> xs) {
  if (xs.empty()) return 0;
  return sample_std(xs) / std::sqrt(static_cast<double>(xs.size()));
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<>(), p);
}

namespace {
double wilson(std::int64_t successes, std::int64_t trials, double confidence, double sign) {
  if (trials <= 0) throw Error("wilson bound needs trials > 0");
  const double z = normal_quantile(confidence);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double centre = p + z * z / (2 * n);
  const double spread = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
  return (centre + sign * spread) / (1 + z * z / n);
}
}  // namespace

double wilson_lower(std::int64_t successes, std::int64_t trials, double confidence) {
  if (successes == 0) return 0;
  return wilson(successes, trials, confidence, -1);
}

double wilson_upper(std::int64_t successes, std::int64_t trials, double confidence) {
  if (successes == trials) return 1;
  return wilson(successes, trials, confidence, +1);
}

TestResult paired_t_less(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw Error("paired test needs equal sizes >= 2");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  const double se = standard_error(diff);
  const double m = mean(diff);
  if (se == 0) return {m < 0 ? -INFINITY : (m > 0 ? INFINITY : 0), m < 0 ? 0.0 : 1.0};
  const double t = m / se;
  boost::math::students_t_distribution<> dist(static_cast<double>(diff.size() - 1));
  return {t, boost::math::cdf(dist, t)};
}

TestResult chi_square_uniform(std::span<const std::int64_t> counts) {
  if (counts.size() < 2) throw Error("chi-square needs at least 2 cells");
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  const double expected = total / static_cast<double>(counts.size());
  double chi2 = 0;
  for (auto c : counts) chi2 += (c - expected) * (c - expected) / expected;
  boost::math::chi_squared_distribution<> dist(static_cast<double>(counts.size() - 1));
  return {chi2, boost::math::cdf(boost::math::complement(dist, chi2))};
}

}  // namespace nasenc::stats
