#pragma once

#include <span>

#include "waltz/figure.hpp"

namespace waltz {

/// Row-stochastic 16x16 figure transition matrix. probs(i, j) is the
/// probability that figure j follows figure i; support marks the legal
/// transitions. probs(i, j) > 0 exactly where support(i, j) holds.
class TransitionMatrix {
 public:
  static constexpr double kRowTolerance = 1e-12;

  /// Validates the invariants; throws InvalidDistribution.
  TransitionMatrix(const Matrix16& probs, const Mask16& support);

  const Matrix16& probs() const { return probs_; }
  const Mask16& support() const { return support_; }
  double operator()(FigureLabel from, FigureLabel to) const {
    return probs_(from.index(), to.index());
  }
  bool allowed(FigureLabel from, FigureLabel to) const {
    return support_(from.index(), to.index());
  }

  friend bool operator==(const TransitionMatrix& a,
                         const TransitionMatrix& b) {
    return a.probs_ == b.probs_ && a.support_ == b.support_;
  }

 private:
  Matrix16 probs_;
  Mask16 support_;
};

/// Legal figure-to-figure transitions of the waltz vocabulary.
Mask16 waltz_support();

/// Equal probability over every legal successor.
TransitionMatrix unbiased_matrix();

/// Uniform rows over an arbitrary support; every row needs a legal successor.
TransitionMatrix uniform_over_support(const Mask16& support);

/// Add-one counts: 1 on every supported cell plus one per observed
/// transition. Kept separately so the smoothing can be inspected.
struct TransitionCounts {
  Matrix16 observed = Matrix16::Zero();
  Matrix16 smoothed = Matrix16::Zero();
};

/// Throws ImpossibleTransitionInData naming the dance, position and pair.
TransitionCounts transition_counts(std::span<const DanceSequence> training,
                                   const Mask16& support = waltz_support());
TransitionCounts transition_counts(std::span<const std::vector<FigureLabel>> training,
                                   const Mask16& support = waltz_support());

/// Row-normalized add-one counts over the support.
TransitionMatrix trained_matrix(std::span<const DanceSequence> training,
                                const Mask16& support = waltz_support());
/// Same, from bare label sequences.
TransitionMatrix trained_matrix(std::span<const std::vector<FigureLabel>> training,
                                const Mask16& support = waltz_support());

ProbVector row(const TransitionMatrix& matrix, FigureLabel from);

}  // namespace waltz
