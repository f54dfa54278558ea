#include "waltz/classifier.hpp"

#include <cmath>

namespace waltz {

Standardizer Standardizer::fit(const Eigen::MatrixXd& columns) {
  Standardizer s;
  const double n = static_cast<double>(columns.cols());
  s.mean = columns.rowwise().sum() / n;
  const Eigen::VectorXd var =
      (columns.colwise() - s.mean).array().square().rowwise().sum() / n;
  s.scale = var.cwiseMax(kVarianceFloor).cwiseSqrt();
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& columns) const {
  return (columns.colwise() - mean).array().colwise() / scale.array();
}

Eigen::MatrixXd flatten_samples(std::span<const FigureSample> samples) {
  Eigen::MatrixXd out(kNumAxes * kNumBins,
                      static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = samples[i].flat();
  }
  return out;
}

FigureClassifier train_classifier(std::span<const FigureSample> samples,
                                  const ClassifierConfig& config) {
  if (samples.empty()) throw LengthMismatch("no training samples");
  MlpSpec spec = config.spec;
  spec.input_dim = kNumAxes * kNumBins;
  spec.output_dim = kNumFigures;

  std::vector<int> labels;
  labels.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!samples[i].label) {
      throw InvalidSample("training sample " + std::to_string(i) +
                          " has no label");
    }
    labels.push_back(samples[i].label->index());
  }
  const Eigen::MatrixXd raw = flatten_samples(samples);
  Standardizer standardizer = Standardizer::fit(raw);
  const auto inputs = standardizer.apply(raw).cast<ClassifierScalar>().eval();
  auto trained = train_mlp<ClassifierScalar>(spec, inputs, labels, config.train);
  return FigureClassifier{std::move(standardizer), std::move(trained.model),
                          std::move(trained.epoch_loss)};
}

std::vector<ProbVector> predict_proba(const FigureClassifier& model,
                                      std::span<const FigureSample> samples) {
  std::vector<ProbVector> out;
  if (samples.empty()) return out;
  const auto inputs = model.standardizer.apply(flatten_samples(samples))
                          .cast<ClassifierScalar>()
                          .eval();
  // Softmax in double from the network's logits keeps the unit-sum check
  // tight even when the network runs in float.
  const Eigen::MatrixXd logits = model.network.logits(inputs).cast<double>();
  const Eigen::MatrixXd probs = softmax_columns(logits);
  out.reserve(samples.size());
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    out.push_back(ProbVector::normalized(probs.col(c)));
  }
  return out;
}

ProbVector forward(const FigureClassifier& model, const FigureSample& sample) {
  return predict_proba(model, std::span<const FigureSample>(&sample, 1)).front();
}

}  // namespace waltz
