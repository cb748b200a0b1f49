#include "nasenc/predictor.hpp"

#include <cmath>

namespace nasenc {

Predictor::Predictor(EncodingKind encoding, GpParams params)
    : encoding_(std::move(encoding)), model_(GaussianProcess(std::move(params))) {}

Predictor::Predictor(EncodingKind encoding, EnsembleParams params)
    : encoding_(std::move(encoding)), model_(NeuralEnsemble(std::move(params))) {}

PredictorKind Predictor::kind() const {
  return std::holds_alternative<GaussianProcess>(model_) ? PredictorKind::GaussianProcess
                                                         : PredictorKind::NeuralEnsemble;
}

RowMatrix Predictor::features(std::span<const Architecture> archs) const {
  RowMatrix out(archs.size(), dimension(encoding_));
  for (std::size_t i = 0; i < archs.size(); ++i) {
    const auto fv = encode(archs[i], encoding_);
    std::copy(fv.values.begin(), fv.values.end(), out.row(i).begin());
  }
  return out;
}

void Predictor::fit(std::span<const Architecture> archs, std::span<const double> val_errors) {
  if (archs.size() != val_errors.size() || archs.empty())
    throw Error("predictor needs matching non-empty training data");
  const RowMatrix x = features(archs);
  if (auto* gp = std::get_if<GaussianProcess>(&model_))
    gp->fit(x, feature_domains(encoding_), {val_errors.begin(), val_errors.end()});
  else
    std::get<NeuralEnsemble>(model_).fit(x, val_errors);
}

bool Predictor::fitted() const {
  return std::visit([](const auto& m) { return m.fitted(); }, model_);
}

std::vector<Prediction> Predictor::predict(std::span<const Architecture> archs) const {
  if (!fitted()) throw Error("predict called before fit");
  std::vector<Prediction> out;
  if (archs.empty()) return out;
  const RowMatrix x = features(archs);
  if (const auto* gp = std::get_if<GaussianProcess>(&model_)) {
    for (const auto& p : gp->predict(x)) out.push_back({p.mean, p.std});
  } else {
    for (const auto& p : std::get<NeuralEnsemble>(model_).predict(x)) out.push_back({p.mean, p.std});
  }
  return out;
}

RowMatrix Predictor::member_predictions(std::span<const Architecture> archs) const {
  const auto* ensemble = std::get_if<NeuralEnsemble>(&model_);
  if (!ensemble) throw Error("member predictions need a neural ensemble");
  return ensemble->member_predictions(features(archs));
}

double evaluate_mae(Predictor& predictor, std::span<const Architecture> train_archs,
                    std::span<const double> train_errors, std::span<const Architecture> test_archs,
                    std::span<const double> test_errors) {
  if (test_archs.size() != test_errors.size() || test_archs.empty())
    throw Error("evaluation needs matching non-empty test data");
  predictor.fit(train_archs, train_errors);
  const auto pred = predictor.predict(test_archs);
  double total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += std::abs(pred[i].mean - test_errors[i]);
  return total / static_cast<double>(pred.size());
}

}  // namespace nasenc
