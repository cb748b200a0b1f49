#pragma once

#include <vector>

#include "nasenc/encodings.hpp"
#include "nasenc/matrix.hpp"

namespace nasenc {

struct GpParams {
  /// Candidate length scales; the one with the largest marginal likelihood wins.
  std::vector<double> length_scales{0.5, 1, 2, 4, 8, 16, 32};
  /// Observation noise variance in standardized label units.
  double noise = 0.01;

  bool operator==(const GpParams&) const = default;
};

struct GpPrediction {
  double mean;
  double std;  // latent function, label units
};

/// Zero-mean GP on standardized labels with kernel exp(-edit_distance / scale).
class GaussianProcess {
 public:
  explicit GaussianProcess(GpParams params = {}) : params_(std::move(params)) {}

  /// Throws Error on empty data, non-finite labels, or a kernel matrix that
  /// stays singular after jitter escalation.
  void fit(const RowMatrix& features, std::vector<FeatureDomain> domains, std::vector<double> labels);
  std::vector<GpPrediction> predict(const RowMatrix& features) const;

  bool fitted() const { return !labels_.empty(); }
  double length_scale() const { return scale_; }
  double log_marginal_likelihood() const { return lml_; }

 private:
  GpParams params_;
  RowMatrix train_;
  std::vector<FeatureDomain> domains_;
  std::vector<double> labels_;
  double label_mean_ = 0, label_scale_ = 1;
  double scale_ = 1, lml_ = 0;
  std::vector<double> alpha_;     // K^-1 y
  std::vector<double> cholesky_;  // lower factor, row-major
};

}  // namespace nasenc
