#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "waltz/classifier.hpp"
#include "waltz/correction.hpp"
#include "waltz/figure.hpp"
#include "waltz/ghmm.hpp"
#include "waltz/transitions.hpp"

namespace waltz {

inline constexpr int kDefaultFolds = 7;

/// Dance id -> fold index. Folds partition the dances.
struct FoldSpec {
  std::map<std::string, int, std::less<>> assignments;
  int n_folds = kDefaultFolds;
  std::uint64_t seed = 0;

  std::vector<std::string> fold_members(int fold) const;
};

/// Seeded shuffle of the dance ids chunked into n_folds folds whose sizes
/// differ by at most one. Throws TooFewDances.
FoldSpec make_folds(std::span<const std::string> dance_ids, std::uint64_t seed,
                    int n_folds = kDefaultFolds);
FoldSpec make_folds(const Dataset& dataset, std::uint64_t seed,
                    int n_folds = kDefaultFolds);

using CountMatrix = Eigen::Matrix<std::int64_t, kNumFigures, kNumFigures>;

/// counts(truth, predicted); rows normalized to sum 1 (zero rows stay 0).
struct ConfusionMatrix {
  CountMatrix counts = CountMatrix::Zero();
  Matrix16 normalized = Matrix16::Zero();

  void add(FigureLabel truth, FigureLabel predicted) {
    counts(truth.index(), predicted.index()) += 1;
  }
  void renormalize();
  std::int64_t total() const { return counts.sum(); }
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
};

/// Throws LengthMismatch.
ConfusionMatrix confusion(std::span<const FigureLabel> predicted,
                          std::span<const FigureLabel> truth);

double accuracy(std::span<const FigureLabel> predicted,
                std::span<const FigureLabel> truth);

enum class ClassifierKind {
  FeedForward,  // trained network posteriors
  GaussianHmm,  // generative labels; no posteriors, so no correction
  Oracle,       // one-hot posteriors on the truth
  Uniform,      // 1/16 everywhere
  External,     // posteriors supplied by the caller
};

std::string_view classifier_name(ClassifierKind kind);
/// Throws ConfigError.
ClassifierKind classifier_from_name(std::string_view name);

enum class TransitionSource { Trained, Unbiased };

/// Posteriors keyed by dance id, one per figure position.
using PosteriorTable = std::map<std::string, std::vector<ProbVector>, std::less<>>;

struct FoldContext {
  int fold = 0;
  std::span<const DanceSequence> training;
  std::span<const DanceSequence> testing;
};

struct PipelineConfig {
  ClassifierKind classifier = ClassifierKind::FeedForward;
  ClassifierConfig network;
  EmOptions em;
  TransitionSource transitions = TransitionSource::Trained;
  CorrectionMode correction = CorrectionMode::Unchained;
  int n_folds = kDefaultFolds;
  std::uint64_t seed = 0;
  int jobs = 1;
  /// Required for ClassifierKind::External.
  const PosteriorTable* external = nullptr;
  /// Called once per fold with exactly the data handed to training.
  std::function<void(const FoldContext&)> observer;
};

/// Labels and posteriors for one held-out dance.
struct DancePrediction {
  std::string dance_id;
  int fold = 0;
  std::vector<FigureLabel> truth;
  std::vector<ProbVector> posteriors;  // empty for the HMM
  CorrectionResult correction;
};

struct FoldResult {
  int fold = 0;
  std::vector<std::string> test_dances;
  std::size_t figures = 0;
  double raw_accuracy = 0.0;
  std::optional<double> corrected_accuracy;

  /// corrected - raw, in percentage points (0 without correction).
  double improvement_points() const {
    return corrected_accuracy ? 100.0 * (*corrected_accuracy - raw_accuracy)
                              : 0.0;
  }
};

struct EvalReport {
  std::string classifier;
  std::uint64_t seed = 0;
  std::vector<FoldResult> folds;
  double mean_raw_accuracy = 0.0;
  std::optional<double> mean_corrected_accuracy;
  ConfusionMatrix confusion_raw;
  std::optional<ConfusionMatrix> confusion_corrected;
  std::vector<DancePrediction> predictions;

  bool has_correction() const { return mean_corrected_accuracy.has_value(); }
  std::vector<double> improvements() const;
};

/// Leave-dances-out cross-validation. Per fold the transition matrix and the
/// classifier are trained on the other folds only; mean accuracies are
/// unweighted means over folds.
EvalReport run_cv(const Dataset& dataset, const PipelineConfig& config);

struct ImprovementStats {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  /// floor(improvement) -> count; bins are one point wide.
  std::map<int, int> histogram;
};

ImprovementStats improvement_stats(std::span<const double> improvements);
ImprovementStats improvement_stats(const EvalReport& report);

}  // namespace waltz
