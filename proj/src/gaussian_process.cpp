#include "nasenc/gaussian_process.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "nasenc/common.hpp"
#include "nasenc/stats.hpp"

namespace nasenc {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Matrix distances(const RowMatrix& a, const RowMatrix& b, std::span<const FeatureDomain> domains) {
  Matrix d(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < b.rows; ++j) d(i, j) = edit_distance(a.row(i), b.row(j), domains);
  return d;
}

struct Factor {
  Eigen::LLT<Matrix> llt;
  double jitter;
};

// Noise on the diagonal, escalating jitter until the factorization succeeds.
std::optional<Factor> factor(const Matrix& kernel, double noise) {
  for (double jitter = 0; jitter <= 1.0; jitter = jitter == 0 ? 1e-10 : jitter * 10) {
    Matrix k = kernel;
    k.diagonal().array() += noise + jitter;
    Eigen::LLT<Matrix> llt(k);
    if (llt.info() == Eigen::Success) return Factor{std::move(llt), jitter};
  }
  return std::nullopt;
}

}  // namespace

void GaussianProcess::fit(const RowMatrix& features, std::vector<FeatureDomain> domains,
                          std::vector<double> labels) {
  if (features.rows == 0 || features.rows != labels.size())
    throw Error("gaussian process needs matching non-empty data");
  if (domains.size() != features.cols) throw Error("domain list does not match feature width");
  for (double y : labels)
    if (!std::isfinite(y)) throw Error("non-finite training label");
  if (params_.length_scales.empty()) throw ConfigError("gaussian process needs a length scale");

  train_ = features;
  domains_ = std::move(domains);
  label_mean_ = stats::mean(labels);
  label_scale_ = stats::population_std(labels);
  if (label_scale_ <= 0) label_scale_ = 1;
  const std::size_t n = labels.size();
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) y(i) = (labels[i] - label_mean_) / label_scale_;
  labels_ = std::move(labels);

  const Matrix dist = distances(train_, train_, domains_);
  // a single point carries no length-scale information
  const std::size_t candidates = n >= 2 ? params_.length_scales.size() : 1;
  double best_lml = -std::numeric_limits<double>::infinity();
  std::optional<Factor> best;
  for (std::size_t c = 0; c < candidates; ++c) {
    const double scale = params_.length_scales[c];
    const Matrix kernel = (-dist.array() / scale).exp().matrix();
    auto f = factor(kernel, params_.noise);
    if (!f) continue;
    const Eigen::VectorXd alpha = f->llt.solve(y);
    const Matrix& l = f->llt.matrixLLT();
    const double log_det = 2 * l.diagonal().array().log().sum();
    const double lml = -0.5 * y.dot(alpha) - 0.5 * log_det - 0.5 * n * std::log(2 * M_PI);
    if (lml > best_lml) {
      best_lml = lml;
      scale_ = scale;
      best = std::move(f);
    }
  }
  if (!best) throw Error("singular kernel matrix after jitter escalation");
  lml_ = best_lml;
  const Eigen::VectorXd alpha = best->llt.solve(y);
  alpha_.assign(alpha.data(), alpha.data() + n);
  const Matrix l = best->llt.matrixL();
  cholesky_.assign(l.data(), l.data() + n * n);
}

std::vector<GpPrediction> GaussianProcess::predict(const RowMatrix& features) const {
  if (!fitted()) throw Error("predict called before fit");
  if (features.cols != train_.cols) throw Error("feature width differs from training data");
  const std::size_t n = labels_.size();
  const Matrix cross = (-distances(features, train_, domains_).array() / scale_).exp().matrix();
  const Eigen::Map<const Eigen::VectorXd> alpha(alpha_.data(), n);
  const Eigen::Map<const Matrix> l(cholesky_.data(), n, n);
  const Eigen::VectorXd mean = cross * alpha;
  const Matrix v = l.triangularView<Eigen::Lower>().solve(cross.transpose());
  std::vector<GpPrediction> out(features.rows);
  for (std::size_t i = 0; i < features.rows; ++i) {
    const double var = std::max(0.0, 1.0 - v.col(i).squaredNorm());
    out[i] = {label_mean_ + label_scale_ * mean(i), label_scale_ * std::sqrt(var)};
  }
  return out;
}

}  // namespace nasenc
