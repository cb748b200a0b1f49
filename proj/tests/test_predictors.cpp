#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "nasenc/predictor.hpp"
#include "nasenc/subroutines.hpp"

using namespace nasenc;

namespace {

RowMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  RowMatrix m(rows, cols);
  std::normal_distribution<double> normal;
  for (auto& v : m.data) v = normal(rng);
  return m;
}

// ||analytic - central difference|| / ||central difference||
double gradient_mismatch(const Mlp& net, const RowMatrix& x, std::span<const double> y) {
  std::vector<double> grad(net.parameters().size());
  net.loss_and_gradient(x, y, grad);
  Mlp probe = net;
  const double h = 1e-6;
  double diff = 0, norm = 0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double orig = probe.parameters()[i];
    probe.parameters()[i] = orig + h;
    const double up = probe.loss(x, y);
    probe.parameters()[i] = orig - h;
    const double down = probe.loss(x, y);
    probe.parameters()[i] = orig;
    const double fd = (up - down) / (2 * h);
    diff += (grad[i] - fd) * (grad[i] - fd);
    norm += fd * fd;
  }
  return std::sqrt(diff / norm);
}

}  // namespace

TEST_CASE("backprop matches central differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Mlp net(4, {5, 3}, seed);
    // random biases too, so no unit sits exactly on its kink
    for (double& w : net.parameters()) w += 0.5 * std::normal_distribution<double>()(rng);
    const auto x = random_matrix(7, 4, rng);
    const auto y = random_matrix(1, 7, rng).data;
    CHECK(gradient_mismatch(net, x, y) <= 1e-4);
  }
}

TEST_CASE("loss is the mean absolute error of forward") {
  Rng rng(1);
  const Mlp net(3, {4}, 2);
  const auto x = random_matrix(5, 3, rng);
  const std::vector<double> y{0, 1, 2, 3, 4};
  const auto out = net.forward(x);
  double mae = 0;
  for (std::size_t i = 0; i < 5; ++i) mae += std::abs(out[i] - y[i]) / 5;
  CHECK(net.loss(x, y) == doctest::Approx(mae));
}

TEST_CASE("Adam fits a linear target") {
  Rng rng(3);
  const auto x = random_matrix(200, 5, rng);
  const std::vector<double> coef{1.5, -2, 0.5, 3, -1};
  std::vector<double> y;
  for (std::size_t r = 0; r < x.rows; ++r)
    y.push_back(std::inner_product(coef.begin(), coef.end(), x.row(r).begin(), 0.0));
  NeuralEnsemble ensemble({.members = 1, .hidden = {32, 32}, .learning_rate = 0.01, .epochs = 300,
                           .batch_size = 32, .seed = 4, .identical_members = false});
  ensemble.fit(x, y);
  const auto pred = ensemble.predict(x);
  double mae = 0;
  for (std::size_t r = 0; r < x.rows; ++r) mae += std::abs(pred[r].mean - y[r]) / x.rows;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  CHECK(mae < 0.005 * (*hi - *lo));
}

TEST_CASE("ensemble uncertainty and ordering properties") {
  Rng rng(5);
  const auto x = random_matrix(40, 3, rng);
  std::vector<double> y;
  for (std::size_t r = 0; r < x.rows; ++r) y.push_back(x.row(r)[0] * 2 + 1);
  EnsembleParams same{.members = 3, .hidden = {8}, .learning_rate = 0.01, .epochs = 20,
                      .batch_size = 8, .seed = 1, .identical_members = true};
  NeuralEnsemble twins(same);
  twins.fit(x, y);
  for (const auto& p : twins.predict(x)) CHECK(p.std < 1e-12);

  EnsembleParams varied = same;
  varied.identical_members = false;
  NeuralEnsemble ensemble(varied);
  ensemble.fit(x, y);
  const auto pred = ensemble.predict(x);
  const auto members = ensemble.member_predictions(x);
  REQUIRE(members.rows == 3);
  for (std::size_t r = 0; r < x.rows; ++r) {
    double m = 0;
    for (std::size_t k = 0; k < 3; ++k) m += members.row(k)[r] / 3;
    CHECK(pred[r].mean == doctest::Approx(m));
  }
  // reversing the query order reverses the output
  RowMatrix reversed(x.rows, x.cols);
  for (std::size_t r = 0; r < x.rows; ++r)
    std::copy(x.row(r).begin(), x.row(r).end(), reversed.row(x.rows - 1 - r).begin());
  const auto back = ensemble.predict(reversed);
  for (std::size_t r = 0; r < x.rows; ++r) CHECK(back[x.rows - 1 - r].mean == pred[r].mean);
}

TEST_CASE("GP interpolates its training points") {
  const auto spec = make_spec(5, 10, 3);
  const auto archs = UniformSpaceSampler(spec).members();
  std::vector<Architecture> train(archs.begin(), archs.begin() + 30);
  std::vector<double> labels;
  for (std::size_t i = 0; i < train.size(); ++i) labels.push_back(10 + std::sin(static_cast<double>(i)) * 5);
  Predictor gp(EncodingKind(Family::AdjOneHot, spec), GpParams{});
  gp.fit(train, labels);
  const auto pred = gp.predict(train);
  double label_sd = 0;
  for (double v : labels) label_sd = std::max(label_sd, std::abs(v - 10));
  for (std::size_t i = 0; i < train.size(); ++i) {
    // noise variance 0.01 in standardized units: residual within a few noise sds
    CHECK(std::abs(pred[i].mean - labels[i]) < 0.3 * label_sd);
    CHECK(pred[i].uncertainty < 0.5 * label_sd);
  }
}

TEST_CASE("GP on constant labels has zero error; unfitted predictors throw") {
  const auto spec = make_spec(5, 10, 3);
  const auto archs = UniformSpaceSampler(spec).members();
  std::vector<Architecture> train(archs.begin(), archs.begin() + 10);
  std::vector<Architecture> test(archs.begin() + 10, archs.begin() + 20);
  const std::vector<double> flat(10, 7.5);
  Predictor gp(EncodingKind(Family::PathOneHot, spec), GpParams{});
  CHECK_THROWS_AS(gp.predict(test), Error);
  CHECK(evaluate_mae(gp, train, flat, test, flat) == doctest::Approx(0).epsilon(1e-9));
  Predictor net(EncodingKind(Family::PathOneHot, spec), EnsembleParams{});
  CHECK_THROWS_AS(net.predict(test), Error);
  CHECK_THROWS_AS(gp.member_predictions(test), Error);
}

TEST_CASE("GP posterior sd shrinks at observed points") {
  const auto spec = make_spec(5, 10, 3);
  const auto archs = UniformSpaceSampler(spec).members();
  std::vector<Architecture> train(archs.begin(), archs.begin() + 20);
  std::vector<double> labels;
  for (std::size_t i = 0; i < 20; ++i) labels.push_back(static_cast<double>(i % 7));
  Predictor gp(EncodingKind(Family::AdjOneHot, spec), GpParams{});
  gp.fit(train, labels);
  std::vector<Architecture> far(archs.end() - 20, archs.end());
  const auto seen = gp.predict(train);
  const auto unseen = gp.predict(far);
  double seen_sd = 0, unseen_sd = 0;
  for (const auto& p : seen) seen_sd += p.uncertainty;
  for (const auto& p : unseen) unseen_sd += p.uncertainty;
  CHECK(seen_sd < unseen_sd);
}
