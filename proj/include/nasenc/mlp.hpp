#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nasenc/matrix.hpp"

namespace nasenc {

/// Fully connected ReLU network with one linear output unit. Parameters are
/// stored flat, layer by layer: weights (out x in, row-major) then biases.
class Mlp {
 public:
  /// Weights uniform in +-sqrt(6 / fan_in), biases zero.
  Mlp(std::size_t inputs, std::vector<int> hidden, std::uint64_t seed);

  std::size_t inputs() const { return inputs_; }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::vector<double> forward(const RowMatrix& x) const;
  /// Mean absolute error over the rows of x.
  double loss(const RowMatrix& x, std::span<const double> y) const;
  /// Returns the loss and writes d loss / d parameters into `grad`.
  double loss_and_gradient(const RowMatrix& x, std::span<const double> y,
                           std::span<double> grad) const;

 private:
  std::size_t inputs_;
  std::vector<int> widths_;  // inputs, hidden..., 1
  std::vector<double> params_;
};

struct AdamOptions {
  double learning_rate = 0.01;
  int epochs = 200;
  int batch_size = 32;
  std::uint64_t shuffle_seed = 0;
};

/// Mini-batch Adam on the MAE loss; throws Error on a non-finite loss.
void train_adam(Mlp& net, const RowMatrix& x, std::span<const double> y, const AdamOptions& options);

struct EnsembleParams {
  int members = 5;
  std::vector<int> hidden{64, 64};
  double learning_rate = 0.01;
  int epochs = 200;
  int batch_size = 32;
  std::uint64_t seed = 0;
  /// Every member shares one initialization and shuffle order.
  bool identical_members = false;

  bool operator==(const EnsembleParams&) const = default;
};

struct EnsemblePrediction {
  double mean;
  double std;  // across members (population)
};

/// Members differ only by initialization seed and shuffle order. Inputs and
/// labels are standardized with training statistics.
class NeuralEnsemble {
 public:
  explicit NeuralEnsemble(EnsembleParams params = {}) : params_(std::move(params)) {}

  void fit(const RowMatrix& x, std::span<const double> y);
  std::vector<EnsemblePrediction> predict(const RowMatrix& x) const;
  /// members x rows, in label units.
  RowMatrix member_predictions(const RowMatrix& x) const;

  bool fitted() const { return !nets_.empty(); }
  const EnsembleParams& params() const { return params_; }

 private:
  RowMatrix standardize(const RowMatrix& x) const;

  EnsembleParams params_;
  std::vector<Mlp> nets_;
  std::vector<double> in_mean_, in_scale_;
  double out_mean_ = 0, out_scale_ = 1;
};

}  // namespace nasenc
