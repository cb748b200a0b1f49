#include <bit>
#include <cmath>

#include <boost/math/special_functions/binomial.hpp>

#include "doctest.h"
#include "nasenc/random_graph.hpp"

using namespace nasenc;

namespace {

// Exact expectation by summing over every edge set of a small DAG.
std::vector<double> brute_expected_paths(int n, double p) {
  const int slots = n * (n - 1) / 2;
  std::vector<double> expected(n, 0.0);
  for (std::uint32_t bits = 0; bits < (1U << slots); ++bits) {
    const int present = std::popcount(bits);
    const double weight = std::pow(p, present) * std::pow(1 - p, slots - present);
    // count[v][len] = paths input -> v with len edges
    std::vector<std::vector<double>> count(n, std::vector<double>(n, 0.0));
    count[0][0] = 1;
    for (int j = 1; j < n; ++j)
      for (int i = 0; i < j; ++i)
        if ((bits >> edge_index(n, i, j)) & 1U)
          for (int len = 0; len + 1 < n; ++len) count[j][len + 1] += count[i][len];
    for (int len = 1; len < n; ++len) expected[len] += weight * count[n - 1][len];
  }
  return expected;
}

}  // namespace

TEST_CASE("expected path counts match a brute-force sum over edge sets") {
  for (auto [n, k] : {std::pair{5, 3.0}, std::pair{6, 6.0}, std::pair{6, 15.0}}) {
    const double p = 2 * k / (n * (n - 1.0));
    const auto brute = brute_expected_paths(n, p);
    for (int len = 1; len < n; ++len)
      CHECK(expected_paths(n, k, len) == doctest::Approx(brute[len]).epsilon(1e-12));
    CHECK(expected_paths(n, k, 0) == 0);
    CHECK(expected_paths(n, k, n) == 0);
  }
}

TEST_CASE("binomial-coefficient bounds bracket the expectation") {
  for (int n : {10, 20, 40}) {
    for (double k : {static_cast<double>(n), n * (n - 1) / 2.0}) {
      for (int len = 2; len < n; ++len) {
        const auto b = expected_paths_bounds(n, k, len);
        const double exact = std::log(boost::math::binomial_coefficient<double>(n - 2, len - 1)) +
                             len * std::log(2 * k / (n * (n - 1.0)));
        CHECK(b.log_lower <= exact + 1e-9 * std::abs(exact));
        CHECK(exact <= b.log_upper + 1e-9 * std::abs(exact));
        CHECK(log_expected_paths(n, k, len) == doctest::Approx(exact).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("b_exact is a nondecreasing fraction reaching one") {
  for (auto [n, k] : {std::pair{10, 10.0}, std::pair{30, 200.0}, std::pair{100, 4000.0}}) {
    double prev = 0;
    long double total = 0;
    for (int len = 1; len < n; ++len) total += std::exp(static_cast<long double>(log_expected_paths(n, k, len)));
    long double partial = 0;
    for (int x = 1; x <= n; ++x) {
      if (x < n) partial += std::exp(static_cast<long double>(log_expected_paths(n, k, x)));
      const double b = b_exact(n, k, x);
      CHECK(b >= prev);
      CHECK(b == doctest::Approx(static_cast<double>(partial / total)).epsilon(1e-9));
      prev = b;
    }
    CHECK(b_exact(n, k, n) == 1.0);
    CHECK(b_exact(n, k, n - 1) == 1.0);
    CHECK(std::isinf(log_b_complement(n, k, n - 1)));
  }
}

TEST_CASE("Monte Carlo b agrees with the closed form and is thread-count independent") {
  const RandomGraphModel model{12, 20, 1};
  for (int x : {2, 4, 6}) {
    const auto mc = b_monte_carlo(model, x, 20'000, 5);
    const auto serial = b_monte_carlo_serial(model, x, 20'000, 5);
    CHECK(mc.value == serial.value);
    CHECK(mc.std_error == serial.std_error);
    CHECK(std::abs(mc.value - b_exact(12, 20, x)) < 4 * mc.std_error + 1e-12);
  }
  const auto curve = b_curve_monte_carlo(model, 20'000, 5);
  CHECK(curve.size() == 12);
  CHECK(curve[3].value == b_monte_carlo(model, 4, 20'000, 5).value);
  CHECK(curve.back().value == 1.0);
}

TEST_CASE("conditioned samples are valid, deterministic, and within the model") {
  const RandomGraphModel model{10, 10, 3};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = sample(model, seed);
    CHECK(is_valid(a));
    CHECK(a == sample(model, seed));
    for (int op : a.ops()) CHECK((op >= 0 && op < 3));
  }
  CHECK_THROWS_AS(sample({40, 0.01, 1}, 1, 10), RejectionCeiling);
  CHECK_THROWS_AS(validate(RandomGraphModel{10, 100, 1}), ConfigError);
  CHECK_THROWS_AS(validate(RandomGraphModel{1, 1, 1}), ConfigError);
}

TEST_CASE("theorem 1 regimes on small grids") {
  const auto report = verify_theorem1(50, 100, 4);
  CHECK_FALSE(report.vacuous());
  CHECK(report.passed());
  for (const auto& check : report.upper) {
    CHECK(check.x > report.upper_threshold);
    CHECK(check.log_lhs < check.log_rhs);
  }
  CHECK_THROWS_AS(verify_theorem1(5, 5, 4), ConfigError);
  CHECK_THROWS_AS(verify_theorem1(20, 40, 2), ConfigError);
}

TEST_CASE("theorem 2 estimates: parallel equals serial and the pivotal identity holds") {
  const RandomGraphModel model{10, 10, 1};
  const std::vector<int> edges{0, 5, 44};
  const auto par = verify_theorem2(model, edges, 20'000, 10);
  const auto ser = verify_theorem2_serial(model, edges, 20'000, 10);
  REQUIRE(par.size() == 3);
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(par[i].estimate == ser[i].estimate);
    CHECK(par[i].pivotal_count == ser[i].pivotal_count);
    const double p = model.edge_prob();
    const double pivotal = static_cast<double>(par[i].pivotal_count) / par[i].trials;
    CHECK(par[i].estimate == doctest::Approx(p + (1 - p) * pivotal));
    CHECK(par[i].lower <= par[i].estimate);
    // the naive and pivotal estimators target the same probability
    CHECK(std::abs(par[i].naive_estimate - par[i].estimate) < 0.03);
    CHECK(par[i].unconditioned_consistent());
  }
}
