#include "nasenc/mlp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "nasenc/common.hpp"
#include "nasenc/stats.hpp"

namespace nasenc {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

std::size_t parameter_count(const std::vector<int>& widths) {
  std::size_t total = 0;
  for (std::size_t l = 1; l < widths.size(); ++l)
    total += static_cast<std::size_t>(widths[l]) * (widths[l - 1] + 1);
  return total;
}

struct Pass {
  std::vector<Matrix> pre;   // per layer, before activation
  std::vector<Matrix> post;  // post[0] = input
};

Pass run_forward(const std::vector<int>& widths, std::span<const double> params, const Matrix& input) {
  Pass p;
  p.post.push_back(input);
  std::size_t offset = 0;
  const std::size_t layers = widths.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const int in = widths[l], out = widths[l + 1];
    ConstMatrixMap w(params.data() + offset, out, in);
    offset += static_cast<std::size_t>(out) * in;
    Eigen::Map<const Eigen::RowVectorXd> b(params.data() + offset, out);
    offset += out;
    Matrix z = p.post.back() * w.transpose();
    z.rowwise() += b;
    p.pre.push_back(z);
    p.post.push_back(l + 1 == layers ? z : Matrix(z.cwiseMax(0.0)));
  }
  return p;
}

double mae_and_gradient(const std::vector<int>& widths, std::span<const double> params,
                        const Matrix& input, const Eigen::VectorXd& y, std::span<double> grad) {
  const Pass p = run_forward(widths, params, input);
  const auto batch = static_cast<double>(input.rows());
  const Eigen::VectorXd residual = p.post.back().col(0) - y;
  const double loss = residual.cwiseAbs().sum() / batch;
  if (grad.empty()) return loss;

  Matrix delta = residual.unaryExpr([](double r) { return (r > 0) - (r < 0) + 0.0; }) / batch;
  std::size_t end = params.size();
  for (std::size_t l = widths.size() - 1; l-- > 0;) {
    const int in = widths[l], out = widths[l + 1];
    const std::size_t b_off = end - out;
    const std::size_t w_off = b_off - static_cast<std::size_t>(out) * in;
    MatrixMap gw(grad.data() + w_off, out, in);
    Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + b_off, out);
    gw = delta.transpose() * p.post[l];
    gb = delta.colwise().sum();
    if (l > 0) {
      ConstMatrixMap w(params.data() + w_off, out, in);
      Matrix back = delta * w;
      delta = back.cwiseProduct((p.pre[l - 1].array() > 0).cast<double>().matrix());
    }
    end = w_off;
  }
  return loss;
}

}  // namespace

Mlp::Mlp(std::size_t inputs, std::vector<int> hidden, std::uint64_t seed) : inputs_(inputs) {
  if (inputs == 0) throw Error("network needs at least one input");
  widths_.push_back(static_cast<int>(inputs));
  for (int h : hidden) {
    if (h < 1) throw ConfigError("hidden layer width must be >= 1");
    widths_.push_back(h);
  }
  widths_.push_back(1);
  params_.assign(parameter_count(widths_), 0.0);
  Rng rng(seed);
  std::size_t offset = 0;
  for (std::size_t l = 1; l < widths_.size(); ++l) {
    const double limit = std::sqrt(6.0 / widths_[l - 1]);
    std::uniform_real_distribution<double> init(-limit, limit);
    const std::size_t weights = static_cast<std::size_t>(widths_[l]) * widths_[l - 1];
    for (std::size_t i = 0; i < weights; ++i) params_[offset + i] = init(rng);
    offset += weights + widths_[l];
  }
}

std::vector<double> Mlp::forward(const RowMatrix& x) const {
  if (x.cols != inputs_) throw Error("input width differs from the network");
  const Pass p = run_forward(widths_, params_, ConstMatrixMap(x.data.data(), x.rows, x.cols));
  return {p.post.back().data(), p.post.back().data() + x.rows};
}

double Mlp::loss(const RowMatrix& x, std::span<const double> y) const {
  return loss_and_gradient(x, y, {});
}

double Mlp::loss_and_gradient(const RowMatrix& x, std::span<const double> y,
                              std::span<double> grad) const {
  if (x.cols != inputs_ || x.rows != y.size() || x.rows == 0)
    throw Error("training data does not match the network");
  if (!grad.empty() && grad.size() != params_.size()) throw Error("gradient buffer has wrong size");
  const Eigen::VectorXd target = Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
  return mae_and_gradient(widths_, params_, ConstMatrixMap(x.data.data(), x.rows, x.cols), target,
                          grad);
}

void train_adam(Mlp& net, const RowMatrix& x, std::span<const double> y, const AdamOptions& o) {
  if (x.rows == 0 || x.rows != y.size()) throw Error("training data does not match the network");
  if (o.batch_size < 1 || o.epochs < 0 || !(o.learning_rate > 0))
    throw ConfigError("bad optimizer settings");
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  auto params = net.parameters();
  std::vector<double> grad(params.size()), m(params.size(), 0.0), v(params.size(), 0.0);
  std::vector<std::size_t> order(x.rows);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(o.shuffle_seed);
  RowMatrix batch;
  std::vector<double> target;
  double corr1 = 1, corr2 = 1;
  for (int epoch = 0; epoch < o.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < x.rows; start += o.batch_size) {
      const std::size_t stop = std::min(x.rows, start + static_cast<std::size_t>(o.batch_size));
      batch = RowMatrix(stop - start, x.cols);
      target.resize(stop - start);
      for (std::size_t r = start; r < stop; ++r) {
        std::copy_n(x.row(order[r]).begin(), x.cols, batch.row(r - start).begin());
        target[r - start] = y[order[r]];
      }
      const double loss = net.loss_and_gradient(batch, target, grad);
      if (!std::isfinite(loss)) throw Error("non-finite training loss");
      corr1 *= beta1;
      corr2 *= beta2;
      for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = beta1 * m[i] + (1 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1 - beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / (1 - corr1), v_hat = v[i] / (1 - corr2);
        params[i] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + eps);
      }
    }
  }
}

RowMatrix NeuralEnsemble::standardize(const RowMatrix& x) const {
  if (x.cols != in_mean_.size()) throw Error("input width differs from training data");
  RowMatrix out = x;
  for (std::size_t r = 0; r < x.rows; ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < x.cols; ++c) row[c] = (row[c] - in_mean_[c]) / in_scale_[c];
  }
  return out;
}

void NeuralEnsemble::fit(const RowMatrix& x, std::span<const double> y) {
  if (x.rows == 0 || x.rows != y.size()) throw Error("ensemble needs matching non-empty data");
  if (params_.members < 1) throw ConfigError("ensemble needs at least one member");
  in_mean_.assign(x.cols, 0.0);
  in_scale_.assign(x.cols, 1.0);
  std::vector<double> column(x.rows);
  for (std::size_t c = 0; c < x.cols; ++c) {
    for (std::size_t r = 0; r < x.rows; ++r) column[r] = x.data[r * x.cols + c];
    in_mean_[c] = stats::mean(column);
    const double s = stats::population_std(column);
    in_scale_[c] = s > 0 ? s : 1.0;
  }
  out_mean_ = stats::mean(y);
  out_scale_ = stats::population_std(y);
  if (out_scale_ <= 0) out_scale_ = 1;
  std::vector<double> target(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) target[i] = (y[i] - out_mean_) / out_scale_;

  const RowMatrix input = standardize(x);
  nets_.clear();
  for (int k = 0; k < params_.members; ++k) {
    const std::uint64_t member = params_.identical_members ? 0 : static_cast<std::uint64_t>(k);
    Mlp net(x.cols, params_.hidden, derive_seed(params_.seed, 2 * member));
    train_adam(net, input, target,
               {params_.learning_rate, params_.epochs, params_.batch_size,
                derive_seed(params_.seed, 2 * member + 1)});
    nets_.push_back(std::move(net));
  }
}

RowMatrix NeuralEnsemble::member_predictions(const RowMatrix& x) const {
  if (!fitted()) throw Error("predict called before fit");
  const RowMatrix input = standardize(x);
  RowMatrix out(nets_.size(), x.rows);
  for (std::size_t k = 0; k < nets_.size(); ++k) {
    const auto pred = nets_[k].forward(input);
    for (std::size_t i = 0; i < x.rows; ++i) out.row(k)[i] = out_mean_ + out_scale_ * pred[i];
  }
  return out;
}

std::vector<EnsemblePrediction> NeuralEnsemble::predict(const RowMatrix& x) const {
  const RowMatrix members = member_predictions(x);
  std::vector<EnsemblePrediction> out(x.rows);
  std::vector<double> column(members.rows);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t k = 0; k < members.rows; ++k) column[k] = members.row(k)[i];
    out[i] = {stats::mean(column), stats::population_std(column)};
  }
  return out;
}

}  // namespace nasenc
