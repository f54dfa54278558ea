#include "waltz/correction.hpp"

namespace waltz {

FigureLabel correct_predecessor(const ProbVector& predecessor,
                                FigureLabel successor,
                                const TransitionMatrix& transitions,
                                FigureLabel fallback) {
  const int j = successor.index();
  int best = -1;
  double best_score = 0.0;
  for (int i = 0; i < kNumFigures; ++i) {
    const double score = transitions.probs()(i, j) * predecessor[i];
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best < 0 ? fallback : FigureLabel(best);
}

CorrectionResult correct_sequence(std::span<const ProbVector> posteriors,
                                  const TransitionMatrix& transitions,
                                  CorrectionMode mode) {
  CorrectionResult out;
  const std::size_t n = posteriors.size();
  out.raw_labels.reserve(n);
  for (const auto& p : posteriors) out.raw_labels.push_back(argmax_label(p));
  out.corrected_labels = out.raw_labels;
  for (std::size_t t = n; t-- > 1;) {
    const FigureLabel successor = mode == CorrectionMode::Chained
                                      ? out.corrected_labels[t]
                                      : out.raw_labels[t];
    out.corrected_labels[t - 1] = correct_predecessor(
        posteriors[t - 1], successor, transitions, out.raw_labels[t - 1]);
  }
  out.changed.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    out.changed[t] = out.raw_labels[t] != out.corrected_labels[t];
  }
  return out;
}

StreamingCorrector::StreamingCorrector(TransitionMatrix transitions)
    : transitions_(std::move(transitions)) {}

StreamingCorrector::Update StreamingCorrector::push(
    const ProbVector& posterior) {
  if (closed_) throw Error("posterior pushed after the stream was closed");
  Update update;
  update.provisional = argmax_label(posterior);
  if (previous_) {
    const FigureLabel raw_previous = result_.raw_labels.back();
    const FigureLabel final_previous = correct_predecessor(
        *previous_, update.provisional, transitions_, raw_previous);
    result_.corrected_labels.push_back(final_previous);
    result_.changed.push_back(final_previous != raw_previous);
    update.final_previous = final_previous;
  }
  result_.raw_labels.push_back(update.provisional);
  previous_ = posterior;
  return update;
}

std::optional<FigureLabel> StreamingCorrector::close() {
  if (closed_ || !previous_) {
    closed_ = true;
    return std::nullopt;
  }
  closed_ = true;
  const FigureLabel last = result_.raw_labels.back();
  result_.corrected_labels.push_back(last);
  result_.changed.push_back(false);
  return last;
}

}  // namespace waltz
