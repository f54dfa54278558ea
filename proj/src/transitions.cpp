#include "waltz/transitions.hpp"

#include <cmath>
#include <initializer_list>
#include <string>

namespace waltz {

TransitionMatrix::TransitionMatrix(const Matrix16& probs,
                                   const Mask16& support)
    : probs_(probs), support_(support) {
  for (int i = 0; i < kNumFigures; ++i) {
    for (int j = 0; j < kNumFigures; ++j) {
      const double p = probs_(i, j);
      if (!std::isfinite(p) || p < 0.0 || (p > 0.0) != support_(i, j)) {
        throw InvalidDistribution(
            "transition " + std::string(FigureLabel(i).short_name()) + "->" +
            std::string(FigureLabel(j).short_name()) +
            " disagrees with the support");
      }
    }
    if (std::abs(probs_.row(i).sum() - 1.0) > kRowTolerance) {
      throw InvalidDistribution("transition row " +
                                std::string(FigureLabel(i).short_name()) +
                                " does not sum to 1");
    }
  }
}

Mask16 waltz_support() {
  using namespace figures;
  // Successor sets; rows sharing a set end on the same foot and direction.
  const std::initializer_list<int> after_lock = {BL, BW, N2, NST, OC};
  const std::initializer_list<int> after_whisk = {PC};
  const std::initializer_list<int> after_reverse = {CTR, DR, LCC, R1, W};
  const std::initializer_list<int> after_change = {N1, PC, RCC};
  const std::initializer_list<int> after_spin = {R2, RC, Weave};

  Mask16 support = Mask16::Constant(false);
  auto set_row = [&](int from, std::initializer_list<int> to) {
    for (int j : to) support(from, j) = true;
  };
  for (int r : {BL, CTR, N1, RC, Weave}) set_row(r, after_lock);
  for (int r : {BW, W}) set_row(r, after_whisk);
  for (int r : {DR, R2, RCC}) set_row(r, after_reverse);
  for (int r : {LCC, N2, OC, PC}) set_row(r, after_change);
  for (int r : {NST, R1}) set_row(r, after_spin);
  return support;
}

TransitionMatrix uniform_over_support(const Mask16& support) {
  Matrix16 probs = Matrix16::Zero();
  for (int i = 0; i < kNumFigures; ++i) {
    const int n = static_cast<int>(support.row(i).count());
    if (n == 0) {
      throw InvalidDistribution("row " +
                                std::string(FigureLabel(i).short_name()) +
                                " has no legal successor");
    }
    for (int j = 0; j < kNumFigures; ++j) {
      if (support(i, j)) probs(i, j) = 1.0 / n;
    }
  }
  return TransitionMatrix(probs, support);
}

TransitionMatrix unbiased_matrix() {
  return uniform_over_support(waltz_support());
}

namespace {

void count_sequence(std::span<const FigureLabel> labels, const std::string& name,
                    const Mask16& support, TransitionCounts& counts) {
  for (std::size_t t = 1; t < labels.size(); ++t) {
    const int i = labels[t - 1].index();
    const int j = labels[t].index();
    if (!support(i, j)) {
      throw ImpossibleTransitionInData(
          name + " position " + std::to_string(t) + ": transition " +
          std::string(labels[t - 1].short_name()) + "->" +
          std::string(labels[t].short_name()) + " is not allowed");
    }
    counts.observed(i, j) += 1.0;
  }
}

TransitionMatrix normalize_counts(const TransitionCounts& counts,
                                  const Mask16& support) {
  Matrix16 probs = Matrix16::Zero();
  for (int i = 0; i < kNumFigures; ++i) {
    const double total = counts.smoothed.row(i).sum();
    if (total > 0.0) probs.row(i) = counts.smoothed.row(i) / total;
  }
  return TransitionMatrix(probs, support);
}

}  // namespace

TransitionCounts transition_counts(std::span<const DanceSequence> training,
                                   const Mask16& support) {
  TransitionCounts counts;
  for (const auto& dance : training) {
    count_sequence(dance.labels(), "dance '" + dance.id + "'", support, counts);
  }
  counts.smoothed = support.cast<double>() + counts.observed;
  return counts;
}

TransitionCounts transition_counts(std::span<const std::vector<FigureLabel>> training,
                                   const Mask16& support) {
  TransitionCounts counts;
  for (std::size_t k = 0; k < training.size(); ++k) {
    count_sequence(training[k], "sequence " + std::to_string(k), support, counts);
  }
  counts.smoothed = support.cast<double>() + counts.observed;
  return counts;
}

TransitionMatrix trained_matrix(std::span<const DanceSequence> training,
                                const Mask16& support) {
  return normalize_counts(transition_counts(training, support), support);
}

TransitionMatrix trained_matrix(std::span<const std::vector<FigureLabel>> training,
                                const Mask16& support) {
  return normalize_counts(transition_counts(training, support), support);
}

ProbVector row(const TransitionMatrix& matrix, FigureLabel from) {
  return ProbVector(matrix.probs().row(from.index()).transpose());
}

}  // namespace waltz
