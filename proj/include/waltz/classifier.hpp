#pragma once

#include <span>
#include <vector>

#include "waltz/figure.hpp"
#include "waltz/mlp.hpp"

namespace waltz {

/// Arithmetic type of the figure classifier's network.
using ClassifierScalar = float;

/// Per-feature z-scoring fitted on training data only.
struct Standardizer {
  static constexpr double kVarianceFloor = 1e-8;

  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // standard deviation, floored

  /// `columns` is features x samples.
  static Standardizer fit(const Eigen::MatrixXd& columns);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& columns) const;
};

/// 400 x N matrix of axis-major flattened samples.
Eigen::MatrixXd flatten_samples(std::span<const FigureSample> samples);

struct ClassifierConfig {
  MlpSpec spec;  // input/output dims are forced to 400/16
  TrainOptions train;
};

struct FigureClassifier {
  Standardizer standardizer;
  Mlp<ClassifierScalar> network;
  std::vector<double> epoch_loss;
};

/// Every sample needs a label. Deterministic for a given spec.seed.
FigureClassifier train_classifier(std::span<const FigureSample> samples,
                                  const ClassifierConfig& config);

ProbVector forward(const FigureClassifier& model, const FigureSample& sample);

std::vector<ProbVector> predict_proba(const FigureClassifier& model,
                                      std::span<const FigureSample> samples);

}  // namespace waltz
