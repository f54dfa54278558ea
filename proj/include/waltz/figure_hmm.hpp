#pragma once

#include <span>
#include <vector>

#include "waltz/ghmm.hpp"
#include "waltz/transitions.hpp"

namespace waltz {

/// A 16-state Gaussian HMM over per-figure mean features, plus the
/// state-to-label assignment learned on its training dances.
struct FigureHmm {
  GaussianHmm<double> model;
  StateLabelMap state_labels;
  std::vector<double> log_likelihood_trace;
};

/// Initial model: the given transitions, first-figure frequencies of the
/// training dances as the start distribution, and per-label feature
/// means/variances as emissions. Labels with fewer than two samples fall
/// back to the pooled statistics.
GaussianHmm<double> initial_figure_hmm(std::span<const DanceSequence> training,
                                       const TransitionMatrix& transitions);

/// Fits with EM, decodes the training dances and matches states to labels.
FigureHmm train_figure_hmm(std::span<const DanceSequence> training,
                           const TransitionMatrix& transitions,
                           const EmOptions& options = {});

/// Viterbi decode mapped through the state labels.
std::vector<FigureLabel> decode_labels(const FigureHmm& hmm,
                                       const DanceSequence& dance);

}  // namespace waltz
