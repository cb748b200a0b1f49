#pragma once

#include <span>
#include <variant>
#include <vector>

#include "nasenc/encodings.hpp"
#include "nasenc/gaussian_process.hpp"
#include "nasenc/mlp.hpp"

namespace nasenc {

enum class PredictorKind { GaussianProcess, NeuralEnsemble };

struct Prediction {
  double mean;
  double uncertainty;
};

/// Encodes architectures under one EncodingKind and regresses validation error.
class Predictor {
 public:
  Predictor(EncodingKind encoding, GpParams params);
  Predictor(EncodingKind encoding, EnsembleParams params);

  PredictorKind kind() const;
  const EncodingKind& encoding() const { return encoding_; }

  void fit(std::span<const Architecture> archs, std::span<const double> val_errors);
  std::vector<Prediction> predict(std::span<const Architecture> archs) const;
  /// Ensemble only: members x archs.
  RowMatrix member_predictions(std::span<const Architecture> archs) const;
  bool fitted() const;

  RowMatrix features(std::span<const Architecture> archs) const;

 private:
  EncodingKind encoding_;
  std::variant<GaussianProcess, NeuralEnsemble> model_;
};

/// Mean absolute error on `test` after fitting on `train`.
double evaluate_mae(Predictor& predictor, std::span<const Architecture> train_archs,
                    std::span<const double> train_errors, std::span<const Architecture> test_archs,
                    std::span<const double> test_errors);

}  // namespace nasenc
