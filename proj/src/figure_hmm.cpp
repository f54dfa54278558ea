#include "waltz/figure_hmm.hpp"

namespace waltz {

GaussianHmm<double> initial_figure_hmm(std::span<const DanceSequence> training,
                                       const TransitionMatrix& transitions) {
  GaussianHmm<double> model;
  model.transition = transitions.probs();
  model.initial = Eigen::VectorXd::Zero(kNumFigures);
  model.means = Eigen::MatrixXd::Zero(kNumFigures, kNumAxes);
  model.variances = Eigen::MatrixXd::Zero(kNumFigures, kNumAxes);

  Eigen::VectorXd count = Eigen::VectorXd::Zero(kNumFigures);
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(kNumFigures, kNumAxes);
  Eigen::MatrixXd sum2 = Eigen::MatrixXd::Zero(kNumFigures, kNumAxes);
  for (const auto& dance : training) {
    const auto labels = dance.labels();
    model.initial(labels.front().index()) += 1.0;
    for (std::size_t t = 0; t < labels.size(); ++t) {
      const MeanFeature x = reduce_means(dance.figures[t]);
      const int l = labels[t].index();
      count(l) += 1.0;
      sum.row(l) += x.transpose();
      sum2.row(l) += x.array().square().matrix().transpose();
    }
  }
  if (model.initial.sum() > 0.0) {
    model.initial /= model.initial.sum();
  } else {
    model.initial.setConstant(1.0 / kNumFigures);
  }

  const double total = count.sum();
  const Eigen::RowVectorXd pooled_mean = sum.colwise().sum() / total;
  const Eigen::RowVectorXd pooled_var =
      (sum2.colwise().sum() / total).array() - pooled_mean.array().square();
  for (int l = 0; l < kNumFigures; ++l) {
    if (count(l) >= 2.0) {
      model.means.row(l) = sum.row(l) / count(l);
      model.variances.row(l) =
          (sum2.row(l) / count(l)).array() - model.means.row(l).array().square();
    } else {
      model.means.row(l) = pooled_mean;
      model.variances.row(l) = pooled_var;
    }
  }
  model.variances =
      model.variances.cwiseMax(GaussianHmm<double>::kVarianceFloor);
  return model;
}

FigureHmm train_figure_hmm(std::span<const DanceSequence> training,
                           const TransitionMatrix& transitions,
                           const EmOptions& options) {
  std::vector<FeatureSequence<double>> features;
  features.reserve(training.size());
  for (const auto& dance : training) features.push_back(mean_features(dance));

  auto fit = fit_em<double>(features, initial_figure_hmm(training, transitions),
                            options);

  std::vector<std::vector<int>> decoded;
  std::vector<std::vector<FigureLabel>> truth;
  for (std::size_t d = 0; d < training.size(); ++d) {
    decoded.push_back(viterbi(fit.model, features[d]));
    truth.push_back(training[d].labels());
  }
  FigureHmm out;
  out.state_labels = match_states(decoded, truth, kNumFigures);
  out.model = std::move(fit.model);
  out.log_likelihood_trace = std::move(fit.log_likelihood_trace);
  return out;
}

std::vector<FigureLabel> decode_labels(const FigureHmm& hmm,
                                       const DanceSequence& dance) {
  const auto path = viterbi(hmm.model, mean_features(dance));
  std::vector<FigureLabel> out;
  out.reserve(path.size());
  for (int s : path) out.push_back(hmm.state_labels[s]);
  return out;
}

}  // namespace waltz
