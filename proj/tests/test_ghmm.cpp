#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "waltz/figure_hmm.hpp"
#include "waltz/ghmm.hpp"
#include "oracles.hpp"

using namespace waltz;
using Hmm = GaussianHmm<double>;
using Seq = FeatureSequence<double>;

using oracle::for_each_path;
using oracle::joint;
using oracle::random_model;
using oracle::random_sequence;

TEST_SUITE("ghmm") {

TEST_CASE("reduce_means examples") {
  SampleMatrix v;
  for (int a = 0; a < kNumAxes; ++a) v.row(a).setConstant(1.5 * a - 2.0);
  CHECK(reduce_means(FigureSample(v)) == MeanFeature(-2.0, -0.5, 1.0, 2.5));
  for (int b = 0; b < kNumBins; ++b) v(0, b) = b;
  CHECK(reduce_means(FigureSample(v))(0) == 49.5);
}

TEST_CASE("log_emission closed forms") {
  Hmm m;
  m.initial = Eigen::VectorXd::Ones(1);
  m.transition = Eigen::MatrixXd::Ones(1, 1);
  m.means = Eigen::MatrixXd(1, 4);
  m.means << 1, -2, 3, 0.5;
  m.variances = Eigen::MatrixXd::Ones(1, 4);
  const Eigen::Vector4d at_mean = m.means.row(0).transpose();
  CHECK(m.log_emission(0, at_mean) ==
        doctest::Approx(-2.0 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
  Hmm doubled = m;
  doubled.variances *= 2.0;
  CHECK(m.log_emission(0, at_mean) - doubled.log_emission(0, at_mean) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
  const Eigen::Vector4d delta(0.3, -1.1, 0.7, 2.0);
  CHECK(m.log_emission(0, Eigen::Vector4d(at_mean + delta)) ==
        doctest::Approx(m.log_emission(0, Eigen::Vector4d(at_mean - delta))).epsilon(1e-14));
}

TEST_CASE("viterbi equals exhaustive enumeration") {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> len(1, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const Hmm m = random_model(4, 2, rng);
    const Seq x = random_sequence(len(rng), 2, rng);
    double best = 0.0;
    const auto expected = oracle::best_path(m, x, &best);
    const auto path = viterbi(m, x);
    CHECK(path == expected);
    CHECK(joint(m, x, path) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("viterbi base and absorbing cases") {
  std::mt19937_64 rng(3);
  Hmm m = random_model(4, 4, rng);
  const Seq one = random_sequence(1, 4, rng);
  int arg = 0;
  double best = -1e300;
  for (int s = 0; s < 4; ++s) {
    const double v = std::log(m.initial(s)) + m.log_emission(s, one.row(0).transpose());
    if (v > best) {
      best = v;
      arg = s;
    }
  }
  CHECK(viterbi(m, one) == std::vector<int>{arg});

  m.initial = Eigen::Vector4d(0, 0, 1, 0);
  m.transition = Eigen::Matrix4d::Identity();
  CHECK(viterbi(m, random_sequence(7, 4, rng)) == std::vector<int>(7, 2));
}

TEST_CASE("forward likelihood equals the brute-force path sum") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const Hmm m = random_model(3, 4, rng);
    const Seq x = random_sequence(6, 4, rng);
    const double brute = oracle::path_sum(m, x);
    const double fwd = log_likelihood(m, x);
    CHECK(std::abs(fwd - brute) <= 1e-9 * std::abs(brute));
  }
}

TEST_CASE("single-state EM reduces to sample moments") {
  std::mt19937_64 rng(8);
  std::vector<Seq> data{random_sequence(30, 4, rng), random_sequence(17, 4, rng)};
  Hmm init;
  init.initial = Eigen::VectorXd::Ones(1);
  init.transition = Eigen::MatrixXd::Ones(1, 1);
  init.means = Eigen::MatrixXd::Zero(1, 4);
  init.variances = Eigen::MatrixXd::Ones(1, 4);
  const auto fit = fit_em<double>(data, init, EmOptions{5, 0.0, false});
  Seq all(47, 4);
  all << data[0], data[1];
  const Eigen::RowVectorXd mean = all.colwise().mean();
  const Eigen::RowVectorXd var = (all.rowwise() - mean).array().square().colwise().mean();
  CHECK((fit.model.means.row(0) - mean).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((fit.model.variances.row(0) - var).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("EM separates two clusters") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<Seq> data;
  for (int s = 0; s < 5; ++s) {
    Seq x(40, 4);
    for (int t = 0; t < 40; ++t) {
      for (int a = 0; a < 4; ++a) x(t, a) = (t % 2 ? 10.0 : 0.0) + noise(rng);
    }
    data.push_back(x);
  }
  Hmm init;
  init.initial = Eigen::Vector2d(0.5, 0.5);
  init.transition = Eigen::Matrix2d::Constant(0.5);
  init.means = Eigen::MatrixXd(2, 4);
  init.means << 2, 1, 3, 2, 7, 8, 6, 9;
  init.variances = Eigen::MatrixXd::Constant(2, 4, 4.0);
  const auto fit = fit_em<double>(data, init, EmOptions{});
  CHECK((fit.model.means.row(0).array() - 0.0).abs().maxCoeff() < 0.1);
  CHECK((fit.model.means.row(1).array() - 10.0).abs().maxCoeff() < 0.1);
  for (std::size_t i = 1; i < fit.log_likelihood_trace.size(); ++i) {
    CHECK(fit.log_likelihood_trace[i] >= fit.log_likelihood_trace[i - 1] - 1e-8);
  }
}

TEST_CASE("EM keeps transition zeros and the variance floor") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    Hmm init = random_model(4, 4, rng);
    init.transition(0, 1) = 0.0;
    init.transition(2, 3) = 0.0;
    for (int i = 0; i < 4; ++i) init.transition.row(i) /= init.transition.row(i).sum();
    std::vector<Seq> data{random_sequence(25, 4, rng), random_sequence(25, 4, rng)};
    const auto fit = fit_em<double>(data, init, EmOptions{30, 0.0, false});
    CHECK(fit.model.transition(0, 1) == 0.0);
    CHECK(fit.model.transition(2, 3) == 0.0);
    CHECK(fit.model.variances.minCoeff() >= Hmm::kVarianceFloor);
    for (std::size_t i = 1; i < fit.log_likelihood_trace.size(); ++i) {
      CHECK(fit.log_likelihood_trace[i] >= fit.log_likelihood_trace[i - 1] - 1e-8);
    }
    const auto frozen = fit_em<double>(data, init, EmOptions{10, 0.0, true});
    CHECK(frozen.model.transition == init.transition);
  }
}

TEST_CASE("EM reports a starved state") {
  Hmm init;
  init.initial = Eigen::Vector2d(1.0, 0.0);
  init.transition = Eigen::Matrix2d::Identity();
  init.means = Eigen::MatrixXd::Zero(2, 1);
  init.variances = Eigen::MatrixXd::Ones(2, 1);
  std::vector<Seq> data{Seq::Zero(5, 1)};
  CHECK_THROWS_AS(fit_em<double>(data, init, EmOptions{}), DegenerateFit);
}

TEST_CASE("match_states examples") {
  using L = std::vector<FigureLabel>;
  const FigureLabel W = label_from_short_name("W");
  const FigureLabel PC = label_from_short_name("PC");
  std::vector<std::vector<int>> decoded{{3, 3, 3, 0}};
  std::vector<L> truth{{W, W, PC, PC}};
  const auto map = match_states(decoded, truth, 16);
  CHECK(map[3] == W);
  CHECK(map[0] == PC);
  CHECK(map[7] == FigureLabel(0));

  std::vector<std::vector<int>> ident{{}};
  std::vector<L> all{{}};
  for (int i = 0; i < 16; ++i) {
    ident[0].push_back(i);
    all[0].push_back(FigureLabel(i));
  }
  const auto bij = match_states(ident, all, 16);
  for (int i = 0; i < 16; ++i) CHECK(bij[static_cast<std::size_t>(i)] == FigureLabel(i));
}

TEST_CASE("figure HMM on separable data decodes perfectly") {
  // Sequences that follow the support, features = label index on every axis.
  std::mt19937_64 rng(30);
  std::normal_distribution<double> noise(0.0, 0.05);
  const auto t = unbiased_matrix();
  std::vector<DanceSequence> train;
  for (int d = 0; d < 20; ++d) {
    DanceSequence dance;
    dance.id = "d" + std::to_string(d);
    int label = d % 16;
    for (int k = 0; k < 40; ++k) {
      SampleMatrix v;
      for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 100; ++b) v(a, b) = 3.0 * label + noise(rng);
      }
      dance.figures.emplace_back(v, FigureLabel(label));
      std::vector<int> next;
      for (int j = 0; j < 16; ++j) {
        if (t.support()(label, j)) next.push_back(j);
      }
      label = next[std::uniform_int_distribution<std::size_t>(0, next.size() - 1)(rng)];
    }
    train.push_back(std::move(dance));
  }
  const auto hmm = train_figure_hmm(train, trained_matrix(train));
  for (const auto& d : train) CHECK(decode_labels(hmm, d) == d.labels());
  for (std::size_t i = 1; i < hmm.log_likelihood_trace.size(); ++i) {
    CHECK(hmm.log_likelihood_trace[i] >= hmm.log_likelihood_trace[i - 1] - 1e-8);
  }
}

}  // TEST_SUITE
