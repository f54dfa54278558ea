#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. None of these call into the library routine they check.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "waltz/ghmm.hpp"
#include "waltz/mlp.hpp"

namespace oracle {

using Hmm = waltz::GaussianHmm<double>;
using Seq = waltz::FeatureSequence<double>;

inline Hmm random_model(int k, int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::normal_distribution<double> n(0.0, 2.0);
  Hmm m;
  m.initial.resize(k);
  m.transition.resize(k, k);
  m.means.resize(k, d);
  m.variances.resize(k, d);
  for (int i = 0; i < k; ++i) {
    m.initial(i) = u(rng);
    for (int j = 0; j < k; ++j) m.transition(i, j) = u(rng);
    m.transition.row(i) /= m.transition.row(i).sum();
    for (int a = 0; a < d; ++a) {
      m.means(i, a) = n(rng);
      m.variances(i, a) = 0.3 + u(rng);
    }
  }
  m.initial /= m.initial.sum();
  return m;
}

inline Seq random_sequence(int len, int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 2.5);
  Seq s(len, d);
  for (int t = 0; t < len; ++t) {
    for (int a = 0; a < d; ++a) s(t, a) = n(rng);
  }
  return s;
}

/// Joint log-density of observations and a state path.
inline double joint(const Hmm& m, const Seq& x, const std::vector<int>& path) {
  auto emit = [&](int s, int t) {
    double out = 0.0;
    for (int a = 0; a < x.cols(); ++a) {
      const double v = m.variances(s, a);
      const double r = x(t, a) - m.means(s, a);
      out += -0.5 * std::log(2.0 * std::numbers::pi * v) - r * r / (2.0 * v);
    }
    return out;
  };
  double lp = std::log(m.initial(path[0])) + emit(path[0], 0);
  for (std::size_t t = 1; t < path.size(); ++t) {
    lp += std::log(m.transition(path[t - 1], path[t])) + emit(path[t], static_cast<int>(t));
  }
  return lp;
}

/// Calls fn on every path of length n over k states.
template <typename Fn>
void for_each_path(int k, int n, Fn&& fn) {
  std::vector<int> path(static_cast<std::size_t>(n), 0);
  while (true) {
    fn(path);
    int pos = n - 1;
    while (pos >= 0 && ++path[pos] == k) path[pos--] = 0;
    if (pos < 0) return;
  }
}

/// Highest-density path by enumeration; first path wins ties.
inline std::vector<int> best_path(const Hmm& m, const Seq& x, double* best_lp = nullptr) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> out;
  for_each_path(static_cast<int>(m.states()), static_cast<int>(x.rows()),
                [&](const std::vector<int>& p) {
                  const double lp = joint(m, x, p);
                  if (lp > best) {
                    best = lp;
                    out = p;
                  }
                });
  if (best_lp) *best_lp = best;
  return out;
}

/// log of the sum over all paths of the joint density.
inline double path_sum(const Hmm& m, const Seq& x) {
  std::vector<double> terms;
  for_each_path(static_cast<int>(m.states()), static_cast<int>(x.rows()),
                [&](const std::vector<int>& p) { terms.push_back(joint(m, x, p)); });
  double mx = -std::numeric_limits<double>::infinity();
  for (double t : terms) mx = std::max(mx, t);
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}

/// The correction rule written out directly: raw argmax, then for t >= 1
/// corrected[t-1] = argmax_i T(i, raw[t]) * p[t-1](i), lowest index on ties,
/// raw label when every score is zero.
inline std::vector<int> corrected_labels(const std::vector<waltz::ProbVector>& p,
                                         const waltz::Matrix16& t) {
  std::vector<int> raw;
  for (const auto& q : p) {
    int best = 0;
    for (int i = 1; i < 16; ++i) {
      if (q[i] > q[best]) best = i;
    }
    raw.push_back(best);
  }
  std::vector<int> out = raw;
  for (std::size_t k = 1; k < p.size(); ++k) {
    double best_score = 0.0;
    int best = -1;
    for (int i = 0; i < 16; ++i) {
      const double s = t(i, raw[k]) * p[k - 1][i];
      if (s > best_score) {
        best_score = s;
        best = i;
      }
    }
    out[k - 1] = best < 0 ? raw[k - 1] : best;
  }
  return out;
}

/// Random posteriors with roughly 60% of the entries exactly zero.
inline std::vector<waltz::ProbVector> random_posteriors(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution sparse(0.6);
  std::vector<waltz::ProbVector> out;
  for (int k = 0; k < n; ++k) {
    waltz::Vector16 w;
    for (int i = 0; i < 16; ++i) w[i] = sparse(rng) ? 0.0 : u(rng);
    if (w.sum() == 0.0) w[static_cast<int>(u(rng) * 16) % 16] = 1.0;
    out.push_back(waltz::ProbVector::normalized(w));
  }
  return out;
}

/// Largest relative difference between the analytic gradient and central
/// differences of the loss, over every parameter. Relative error uses
/// max(|numeric|, |analytic|, 1e-6) as the scale.
inline double gradient_check(waltz::Mlp<double>& net, const Eigen::MatrixXd& x,
                             const std::vector<int>& y, double eps = 1e-5) {
  const auto analytic = net.loss_and_grad(x, y).grad;
  double worst = 0.0;
  auto& params = net.parameters();
  auto probe = [&](double& theta, double g) {
    const double keep = theta;
    theta = keep + eps;
    const double up = net.loss_and_grad(x, y).loss;
    theta = keep - eps;
    const double down = net.loss_and_grad(x, y).loss;
    theta = keep;
    const double numeric = (up - down) / (2.0 * eps);
    const double scale = std::max({std::abs(numeric), std::abs(g), 1e-6});
    worst = std::max(worst, std::abs(numeric - g) / scale);
  };
  for (std::size_t l = 0; l < params.layers(); ++l) {
    for (Eigen::Index i = 0; i < params.weights[l].size(); ++i) {
      probe(params.weights[l].data()[i], analytic.weights[l].data()[i]);
    }
    for (Eigen::Index i = 0; i < params.biases[l].size(); ++i) {
      probe(params.biases[l].data()[i], analytic.biases[l].data()[i]);
    }
  }
  return worst;
}

}  // namespace oracle
