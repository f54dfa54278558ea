#pragma once

#include <optional>
#include <span>
#include <vector>

#include "waltz/figure.hpp"
#include "waltz/transitions.hpp"

namespace waltz {

struct CorrectionResult {
  std::vector<FigureLabel> raw_labels;
  std::vector<FigureLabel> corrected_labels;
  std::vector<bool> changed;

  std::size_t size() const { return raw_labels.size(); }
};

enum class CorrectionMode {
  /// Each predecessor is re-scored against the classifier's raw argmax of
  /// its successor.
  Unchained,
  /// The successor's already corrected label is used instead (experimental).
  Chained,
};

/// Re-estimates X[t-1] as argmax_i T(i, j) * p[t-1](i), where j is the label
/// assumed for X[t]. The last position keeps its argmax. When every score is
/// zero the raw label stands. Ties go to the lowest index.
FigureLabel correct_predecessor(const ProbVector& predecessor,
                                FigureLabel successor,
                                const TransitionMatrix& transitions,
                                FigureLabel fallback);

CorrectionResult correct_sequence(
    std::span<const ProbVector> posteriors, const TransitionMatrix& transitions,
    CorrectionMode mode = CorrectionMode::Unchained);

/// Online, one-step-lagged form of correct_sequence (unchained).
class StreamingCorrector {
 public:
  struct Update {
    /// Final label for position t-1; empty for the first posterior.
    std::optional<FigureLabel> final_previous;
    /// Provisional label for position t (its raw argmax).
    FigureLabel provisional;
  };

  explicit StreamingCorrector(TransitionMatrix transitions);

  Update push(const ProbVector& posterior);
  /// Finalizes the last position; empty when nothing was pushed.
  std::optional<FigureLabel> close();

  /// Raw and final labels emitted so far.
  const CorrectionResult& result() const { return result_; }

 private:
  TransitionMatrix transitions_;
  std::optional<ProbVector> previous_;
  CorrectionResult result_;
  bool closed_ = false;
};

}  // namespace waltz
