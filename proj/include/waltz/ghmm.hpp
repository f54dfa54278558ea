#pragma once

// Gaussian hidden Markov model with diagonal covariances: log-space
// forward-backward, Baum-Welch fitting, Viterbi decoding, and the
// majority-vote mapping from hidden states to known figure labels.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "waltz/error.hpp"
#include "waltz/figure.hpp"
#include "waltz/numeric.hpp"

namespace waltz {

using MeanFeature = Eigen::Matrix<double, kNumAxes, 1>;

/// Per-axis mean of the 100 readings.
inline MeanFeature reduce_means(const FigureSample& sample) {
  return sample.values.rowwise().mean();
}

/// Feature sequence, one row per time step.
template <typename Scalar>
using FeatureSequence = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline FeatureSequence<double> mean_features(const DanceSequence& dance) {
  FeatureSequence<double> seq(static_cast<Eigen::Index>(dance.figures.size()),
                              kNumAxes);
  for (std::size_t t = 0; t < dance.figures.size(); ++t) {
    seq.row(static_cast<Eigen::Index>(t)) =
        reduce_means(dance.figures[t]).transpose();
  }
  return seq;
}

template <typename Scalar = double>
struct GaussianHmm {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  static constexpr Scalar kVarianceFloor = Scalar(1e-6);

  Vector initial;     // K
  Matrix transition;  // K x K, rows sum to 1
  Matrix means;       // K x D
  Matrix variances;   // K x D

  Eigen::Index states() const { return initial.size(); }
  Eigen::Index dims() const { return means.cols(); }

  /// Sum over axes of log N(x[a]; mean[s][a], var[s][a]).
  template <typename Derived>
  Scalar log_emission(Eigen::Index state,
                      const Eigen::MatrixBase<Derived>& x) const {
    constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
    Scalar out = 0;
    for (Eigen::Index a = 0; a < dims(); ++a) {
      const Scalar var = variances(state, a);
      const Scalar d = x(a) - means(state, a);
      out -= Scalar(0.5) * (std::log(two_pi * var) + d * d / var);
    }
    return out;
  }

  /// T x K matrix of log emission densities.
  Matrix log_emissions(const FeatureSequence<Scalar>& seq) const {
    Matrix out(seq.rows(), states());
    for (Eigen::Index t = 0; t < seq.rows(); ++t) {
      for (Eigen::Index s = 0; s < states(); ++s) {
        out(t, s) = log_emission(s, seq.row(t).transpose());
      }
    }
    return out;
  }

  Matrix log_transition() const { return transition.array().log().matrix(); }
  Vector log_initial() const { return initial.array().log().matrix(); }
};

template <typename Scalar>
struct ForwardBackward {
  using Matrix = typename GaussianHmm<Scalar>::Matrix;
  Matrix log_alpha;  // T x K
  Matrix log_beta;   // T x K
  Scalar log_likelihood = 0;
};

template <typename Scalar>
ForwardBackward<Scalar> forward_backward(const GaussianHmm<Scalar>& model,
                                         const FeatureSequence<Scalar>& seq) {
  using Matrix = typename GaussianHmm<Scalar>::Matrix;
  using Vector = typename GaussianHmm<Scalar>::Vector;
  const Eigen::Index n = seq.rows();
  const Eigen::Index k = model.states();
  const Matrix log_e = model.log_emissions(seq);
  const Matrix log_t = model.log_transition();

  ForwardBackward<Scalar> fb;
  fb.log_alpha.resize(n, k);
  fb.log_beta.resize(n, k);
  fb.log_alpha.row(0) = model.log_initial().transpose() + log_e.row(0);
  Vector scratch(k);
  for (Eigen::Index t = 1; t < n; ++t) {
    for (Eigen::Index j = 0; j < k; ++j) {
      scratch = fb.log_alpha.row(t - 1).transpose() + log_t.col(j);
      fb.log_alpha(t, j) = log_sum_exp(scratch) + log_e(t, j);
    }
  }
  fb.log_beta.row(n - 1).setZero();
  for (Eigen::Index t = n - 2; t >= 0; --t) {
    for (Eigen::Index i = 0; i < k; ++i) {
      scratch = log_t.row(i).transpose() + log_e.row(t + 1).transpose() +
                fb.log_beta.row(t + 1).transpose();
      fb.log_beta(t, i) = log_sum_exp(scratch);
    }
  }
  fb.log_likelihood = log_sum_exp(fb.log_alpha.row(n - 1));
  return fb;
}

template <typename Scalar>
Scalar log_likelihood(const GaussianHmm<Scalar>& model,
                      const FeatureSequence<Scalar>& seq) {
  return forward_backward(model, seq).log_likelihood;
}

struct EmOptions {
  int max_iters = 100;
  double tol = 1e-4;
  bool freeze_transitions = false;
};

template <typename Scalar>
struct EmResult {
  GaussianHmm<Scalar> model;
  /// trace[0] is the initial model, trace.back() the returned model.
  std::vector<Scalar> log_likelihood_trace;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

template <typename Scalar>
struct EmStats {
  using Matrix = typename GaussianHmm<Scalar>::Matrix;
  using Vector = typename GaussianHmm<Scalar>::Vector;
  Vector first;       // sum of gamma at t = 0
  Vector occupancy;   // sum of gamma over all t
  Matrix weighted;    // sum of gamma * x
  Matrix weighted2;   // sum of gamma * x^2
  Matrix transitions; // sum of xi
  Scalar log_likelihood = 0;
};

template <typename Scalar>
EmStats<Scalar> expectation(const GaussianHmm<Scalar>& model,
                            std::span<const FeatureSequence<Scalar>> data) {
  using Matrix = typename GaussianHmm<Scalar>::Matrix;
  const Eigen::Index k = model.states();
  const Eigen::Index d = model.dims();
  EmStats<Scalar> st;
  st.first = GaussianHmm<Scalar>::Vector::Zero(k);
  st.occupancy = GaussianHmm<Scalar>::Vector::Zero(k);
  st.weighted = Matrix::Zero(k, d);
  st.weighted2 = Matrix::Zero(k, d);
  st.transitions = Matrix::Zero(k, k);
  const Matrix log_t = model.log_transition();
  for (const auto& seq : data) {
    const auto fb = forward_backward(model, seq);
    const Matrix log_e = model.log_emissions(seq);
    st.log_likelihood += fb.log_likelihood;
    const Matrix gamma =
        ((fb.log_alpha + fb.log_beta).array() - fb.log_likelihood).exp();
    st.first += gamma.row(0).transpose();
    st.occupancy += gamma.colwise().sum().transpose();
    st.weighted += gamma.transpose() * seq;
    st.weighted2 += gamma.transpose() * seq.array().square().matrix();
    for (Eigen::Index t = 0; t + 1 < seq.rows(); ++t) {
      for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
          const Scalar lx = fb.log_alpha(t, i) + log_t(i, j) +
                            log_e(t + 1, j) + fb.log_beta(t + 1, j) -
                            fb.log_likelihood;
          st.transitions(i, j) += std::exp(lx);
        }
      }
    }
  }
  return st;
}

template <typename Scalar>
void maximization(const EmStats<Scalar>& st, std::size_t n_sequences,
                  bool freeze_transitions, GaussianHmm<Scalar>& model) {
  const Eigen::Index k = model.states();
  for (Eigen::Index s = 0; s < k; ++s) {
    if (!(st.occupancy(s) >= Scalar(1e-12))) {
      throw DegenerateFit("hidden state " + std::to_string(s) +
                          " received no responsibility");
    }
  }
  model.initial = st.first / static_cast<Scalar>(n_sequences);
  model.initial /= model.initial.sum();
  if (!freeze_transitions) {
    for (Eigen::Index i = 0; i < k; ++i) {
      const Scalar total = st.transitions.row(i).sum();
      // A state seen only at sequence ends has no outgoing evidence.
      if (total > Scalar(0)) model.transition.row(i) = st.transitions.row(i) / total;
    }
  }
  for (Eigen::Index s = 0; s < k; ++s) {
    const Scalar w = st.occupancy(s);
    model.means.row(s) = st.weighted.row(s) / w;
    const auto second = st.weighted2.row(s).array() / w;
    model.variances.row(s) =
        (second - model.means.row(s).array().square())
            .max(GaussianHmm<Scalar>::kVarianceFloor)
            .matrix();
  }
}

}  // namespace detail

/// Baum-Welch. Transition zeros of the initial model stay zero. Stops when
/// the total log-likelihood gains less than options.tol or after
/// options.max_iters updates. Throws DegenerateFit on a starved state.
template <typename Scalar>
EmResult<Scalar> fit_em(std::span<const FeatureSequence<Scalar>> data,
                        GaussianHmm<Scalar> init, const EmOptions& options) {
  if (data.empty()) throw DegenerateFit("no training sequences");
  for (const auto& seq : data) {
    if (seq.rows() == 0) throw DegenerateFit("empty training sequence");
  }
  EmResult<Scalar> result;
  result.model = std::move(init);
  result.model.variances =
      result.model.variances.cwiseMax(GaussianHmm<Scalar>::kVarianceFloor);
  auto stats = detail::expectation<Scalar>(result.model, data);
  result.log_likelihood_trace.push_back(stats.log_likelihood);
  for (int it = 0; it < options.max_iters; ++it) {
    detail::maximization(stats, data.size(), options.freeze_transitions,
                         result.model);
    stats = detail::expectation<Scalar>(result.model, data);
    const Scalar previous = result.log_likelihood_trace.back();
    result.log_likelihood_trace.push_back(stats.log_likelihood);
    result.iterations = it + 1;
    if (stats.log_likelihood - previous < options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

/// Most probable state path; ties resolve toward lower state indices.
template <typename Scalar>
std::vector<int> viterbi(const GaussianHmm<Scalar>& model,
                         const FeatureSequence<Scalar>& seq) {
  using Matrix = typename GaussianHmm<Scalar>::Matrix;
  const Eigen::Index n = seq.rows();
  const Eigen::Index k = model.states();
  if (n == 0) return {};
  const Matrix log_e = model.log_emissions(seq);
  const Matrix log_t = model.log_transition();
  Matrix score(n, k);
  Eigen::MatrixXi back(n, k);
  score.row(0) = model.log_initial().transpose() + log_e.row(0);
  for (Eigen::Index t = 1; t < n; ++t) {
    for (Eigen::Index j = 0; j < k; ++j) {
      Eigen::Index best = 0;
      Scalar best_score = score(t - 1, 0) + log_t(0, j);
      for (Eigen::Index i = 1; i < k; ++i) {
        const Scalar s = score(t - 1, i) + log_t(i, j);
        if (s > best_score) {
          best_score = s;
          best = i;
        }
      }
      score(t, j) = best_score + log_e(t, j);
      back(t, j) = static_cast<int>(best);
    }
  }
  std::vector<int> path(static_cast<std::size_t>(n));
  Eigen::Index last = 0;
  for (Eigen::Index j = 1; j < k; ++j) {
    if (score(n - 1, j) > score(n - 1, last)) last = j;
  }
  path.back() = static_cast<int>(last);
  for (Eigen::Index t = n - 1; t > 0; --t) {
    path[t - 1] = back(t, path[t]);
  }
  return path;
}

/// Joint log-probability of a given state path.
template <typename Scalar>
Scalar path_log_probability(const GaussianHmm<Scalar>& model,
                            const FeatureSequence<Scalar>& seq,
                            std::span<const int> path) {
  Scalar out = std::log(model.initial(path[0])) +
               model.log_emission(path[0], seq.row(0).transpose());
  for (std::size_t t = 1; t < path.size(); ++t) {
    out += std::log(model.transition(path[t - 1], path[t])) +
           model.log_emission(path[t], seq.row(static_cast<Eigen::Index>(t))
                                           .transpose());
  }
  return out;
}

/// Hidden state -> figure label. Total, not necessarily injective.
using StateLabelMap = std::vector<FigureLabel>;

/// Majority vote of the true labels at positions decoded as each state.
/// Unvisited states map to index 0; ties go to the lower label index.
inline StateLabelMap match_states(
    std::span<const std::vector<int>> decoded,
    std::span<const std::vector<FigureLabel>> truth, int n_states) {
  if (decoded.size() != truth.size()) {
    throw LengthMismatch("decoded and truth sequence counts differ");
  }
  Eigen::MatrixXi votes = Eigen::MatrixXi::Zero(n_states, kNumFigures);
  for (std::size_t s = 0; s < decoded.size(); ++s) {
    if (decoded[s].size() != truth[s].size()) {
      throw LengthMismatch("decoded and truth lengths differ in sequence " +
                           std::to_string(s));
    }
    for (std::size_t t = 0; t < decoded[s].size(); ++t) {
      votes(decoded[s][t], truth[s][t].index()) += 1;
    }
  }
  StateLabelMap map(static_cast<std::size_t>(n_states));
  for (int s = 0; s < n_states; ++s) {
    int best = 0;
    for (int l = 1; l < kNumFigures; ++l) {
      if (votes(s, l) > votes(s, best)) best = l;
    }
    map[s] = FigureLabel(best);
  }
  return map;
}

}  // namespace waltz
