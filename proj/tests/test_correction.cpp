#include "doctest.h"

#include <random>

#include "waltz/correction.hpp"
#include "oracles.hpp"

using namespace waltz;
namespace fig = waltz::figures;

namespace {

ProbVector two_point(int a, double pa, int b, double pb) {
  Vector16 v = Vector16::Zero();
  v[a] = pa;
  v[b] = pb;
  return ProbVector(v);
}

std::vector<int> indices(const std::vector<FigureLabel>& labels) {
  std::vector<int> out;
  for (auto l : labels) out.push_back(l.index());
  return out;
}

}  // namespace

TEST_SUITE("correction") {

TEST_CASE("whisk corrected to left closed change") {
  const std::vector<ProbVector> p{two_point(fig::W, 0.6, fig::LCC, 0.4),
                                  ProbVector::one_hot(FigureLabel(fig::RCC))};
  const auto r = correct_sequence(p, unbiased_matrix());
  CHECK(r.raw_labels[0].index() == fig::W);
  CHECK(r.corrected_labels[0].index() == fig::LCC);
  CHECK(r.corrected_labels[1].index() == fig::RCC);
  CHECK(r.changed == std::vector<bool>{true, false});
}

TEST_CASE("uniform predecessor before a progressive chasse") {
  const std::vector<ProbVector> p{ProbVector(), ProbVector::one_hot(FigureLabel(fig::PC))};
  const auto r = correct_sequence(p, unbiased_matrix());
  CHECK(r.raw_labels[0].index() == fig::BL);
  CHECK(r.corrected_labels[0].index() == fig::BW);
}

TEST_CASE("single figure is unchanged") {
  const std::vector<ProbVector> p{two_point(fig::W, 0.7, fig::N1, 0.3)};
  const auto r = correct_sequence(p, unbiased_matrix());
  CHECK(r.corrected_labels == r.raw_labels);
  CHECK(correct_sequence(std::vector<ProbVector>{}, unbiased_matrix()).size() == 0);
}

TEST_CASE("unreachable successor keeps the raw label") {
  // Only W has mass and W never precedes N1, so every score is zero.
  const std::vector<ProbVector> p{ProbVector::one_hot(FigureLabel(fig::W)),
                                  ProbVector::one_hot(FigureLabel(fig::N1))};
  CHECK(correct_sequence(p, unbiased_matrix()).corrected_labels[0].index() == fig::W);
}

TEST_CASE("matches the brute-force rule and its invariants") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> len(1, 12);
  const std::vector<TransitionMatrix> matrices{unbiased_matrix()};
  const Matrix16& t = matrices[0].probs();
  for (int trial = 0; trial < 10000; ++trial) {
    const auto p = oracle::random_posteriors(rng, len(rng));
    const auto r = correct_sequence(p, matrices[0]);
    CHECK(indices(r.corrected_labels) == oracle::corrected_labels(p, t));
    CHECK(r.corrected_labels.back() == r.raw_labels.back());
    for (std::size_t k = 1; k < p.size(); ++k) {
      const int j = r.raw_labels[k].index();
      bool possible = false;
      for (int i = 0; i < 16; ++i) possible = possible || (p[k - 1][i] > 0 && t(i, j) > 0);
      if (possible) CHECK(t(r.corrected_labels[k - 1].index(), j) > 0);
    }
  }
}

TEST_CASE("scaling a posterior leaves corrections unchanged") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int trial = 0; trial < 500; ++trial) {
    auto p = oracle::random_posteriors(rng, 6);
    const auto base = correct_sequence(p, unbiased_matrix()).corrected_labels;
    for (auto& q : p) q = ProbVector::normalized(u(rng) * q.values());
    CHECK(correct_sequence(p, unbiased_matrix()).corrected_labels == base);
  }
}

TEST_CASE("uniform rows over a regular support add nothing") {
  // Every row has exactly four successors, so T(i, j) is 1/4 on the support.
  Mask16 support = Mask16::Constant(false);
  for (int i = 0; i < 16; ++i) {
    for (int d = 0; d < 4; ++d) support(i, (i + 3 * d) % 16) = true;
  }
  const auto t = uniform_over_support(support);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int j = static_cast<int>(u(rng) * 16);
    Vector16 w = Vector16::Zero();
    for (int i = 0; i < 16; ++i) {
      if (support(i, j)) w[i] = u(rng) + 1e-3;
    }
    const std::vector<ProbVector> p{ProbVector::normalized(w), ProbVector::one_hot(FigureLabel(j))};
    const auto r = correct_sequence(p, t);
    CHECK(r.corrected_labels[0] == r.raw_labels[0]);
  }
}

TEST_CASE("chained mode uses corrected successors") {
  // Position 1: raw PC, corrected to N1 because only N1 may precede BW.
  // Unchained, position 0 is scored against PC: W (1 * 0.6) beats LCC.
  // Chained, it is scored against N1, which W cannot precede: LCC wins.
  const std::vector<ProbVector> p{two_point(fig::W, 0.6, fig::LCC, 0.4),
                                  two_point(fig::PC, 0.6, fig::N1, 0.4),
                                  ProbVector::one_hot(FigureLabel(fig::BW))};
  const auto plain = correct_sequence(p, unbiased_matrix());
  const auto chained = correct_sequence(p, unbiased_matrix(), CorrectionMode::Chained);
  CHECK(plain.corrected_labels[1].index() == fig::N1);
  CHECK(chained.corrected_labels[1].index() == fig::N1);
  CHECK(plain.corrected_labels[0].index() == fig::W);
  CHECK(chained.corrected_labels[0].index() == fig::LCC);
}

TEST_CASE("streaming equals batch") {
  const std::vector<std::vector<ProbVector>> examples{
      {two_point(fig::W, 0.6, fig::LCC, 0.4), ProbVector::one_hot(FigureLabel(fig::RCC))},
      {two_point(fig::W, 0.7, fig::N1, 0.3)},
      {ProbVector(), ProbVector::one_hot(FigureLabel(fig::PC))}};
  std::mt19937_64 rng(9);
  auto all = examples;
  for (int k = 0; k < 200; ++k) all.push_back(oracle::random_posteriors(rng, 1 + k % 15));
  for (const auto& p : all) {
    StreamingCorrector s(unbiased_matrix());
    std::vector<FigureLabel> finals;
    for (std::size_t t = 0; t < p.size(); ++t) {
      const auto u = s.push(p[t]);
      CHECK(u.provisional == argmax_label(p[t]));
      CHECK(u.final_previous.has_value() == (t > 0));
      if (u.final_previous) finals.push_back(*u.final_previous);
      // Finals so far agree with the batch answer on the prefix.
      const auto prefix = correct_sequence(std::span(p).first(t + 1), unbiased_matrix());
      for (std::size_t k = 0; k < finals.size(); ++k) CHECK(finals[k] == prefix.corrected_labels[k]);
    }
    finals.push_back(*s.close());
    const auto batch = correct_sequence(p, unbiased_matrix());
    CHECK(finals == batch.corrected_labels);
    CHECK(s.result().corrected_labels == batch.corrected_labels);
    CHECK(s.result().changed == batch.changed);
  }
}

TEST_CASE("stream of one") {
  StreamingCorrector s(unbiased_matrix());
  const auto p = two_point(fig::OC, 0.8, fig::N2, 0.2);
  const auto u = s.push(p);
  CHECK_FALSE(u.final_previous);
  CHECK(u.provisional.index() == fig::OC);
  CHECK(s.close()->index() == fig::OC);
  CHECK_THROWS_AS(s.push(p), Error);
  StreamingCorrector empty(unbiased_matrix());
  CHECK_FALSE(empty.close());
}

}  // TEST_SUITE
