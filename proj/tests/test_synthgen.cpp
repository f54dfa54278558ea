#include "doctest.h"

#include <cmath>
#include <sstream>

#include "waltz/ingest.hpp"
#include "waltz/synthgen.hpp"

using namespace waltz;
namespace fig = waltz::figures;

namespace {

SynthConfig small_config(int dances, int length) {
  SynthConfig c = default_synth_config();
  c.dances = dances;
  c.length_min = c.length_max = length;
  return c;
}

std::string config_without(std::string_view prefix) {
  std::istringstream in{std::string(default_synth_config_text())};
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) != 0) out << line << '\n';
  }
  return out.str();
}

}  // namespace

TEST_SUITE("synthgen") {

TEST_CASE("default fixture parses and validates") {
  const auto c = default_synth_config();
  CHECK(c.dances == 200);
  CHECK(c.length_min == 40);
  CHECK(c.length_max == 60);
  CHECK(c.tempo_bpm == doctest::Approx(28.5));
  CHECK(c.transitions == unbiased_matrix());
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("profiles interpolate linearly") {
  const Profile p{{0.0, 0.5, 1.0}, {0.0, 2.0, -2.0}};
  CHECK(p.at(0.0) == 0.0);
  CHECK(p.at(0.25) == doctest::Approx(1.0));
  CHECK(p.at(0.75) == doctest::Approx(0.0));
  CHECK(p.at(1.0) == -2.0);
}

TEST_CASE("sequences follow the support and the length range") {
  const auto c = small_config(1, 5);
  for (std::uint64_t d = 0; d < 2000; ++d) {
    auto rng = dance_rng(7, d);
    const auto labels = gen_sequence(c, rng);
    REQUIRE(labels.size() == 5);
    for (std::size_t k = 0; k + 1 < labels.size(); ++k) {
      CHECK(c.transitions.allowed(labels[k], labels[k + 1]));
      if (labels[k].index() == fig::W) CHECK(labels[k + 1].index() == fig::PC);
    }
  }
}

TEST_CASE("successor frequencies match the row") {
  auto c = small_config(1, 10000);
  Vector16 counts = Vector16::Zero();
  for (std::uint64_t d = 0; d < 40; ++d) {
    auto rng = dance_rng(11, d);
    const auto labels = gen_sequence(c, rng);
    for (std::size_t k = 0; k + 1 < labels.size(); ++k) {
      if (labels[k].index() == fig::LCC) counts[labels[k + 1].index()] += 1.0;
    }
  }
  REQUIRE(counts.sum() > 10000);
  const Vector16 freq = counts / counts.sum();
  for (int j = 0; j < kNumFigures; ++j) {
    CHECK(std::abs(freq[j] - unbiased_matrix().probs()(fig::LCC, j)) < 0.01);
  }
}

TEST_CASE("trained matrix on a long corpus approaches the generator") {
  auto c = small_config(1, 10000);
  std::vector<std::vector<FigureLabel>> seqs;
  for (std::uint64_t d = 0; d < 30; ++d) {
    auto rng = dance_rng(3, d);
    seqs.push_back(gen_sequence(c, rng));
  }
  const auto t = trained_matrix(std::span<const std::vector<FigureLabel>>(seqs));
  CHECK((t.probs() - unbiased_matrix().probs()).cwiseAbs().maxCoeff() < 0.02);
}

TEST_CASE("generation is deterministic in the seed") {
  const auto c = small_config(3, 6);
  const auto a = gen_dance(c, 2);
  const auto b = gen_dance(c, 2);
  CHECK(a.ideal.labels() == b.ideal.labels());
  CHECK(a.initial_heading_deg == b.initial_heading_deg);
  std::ostringstream la, lb;
  write_log(la, a.log);
  write_log(lb, b.log);
  CHECK(la.str() == lb.str());
  auto other = c;
  other.seed = 99;
  std::ostringstream lc;
  write_log(lc, gen_dance(other, 2).log);
  CHECK(la.str() != lc.str());
  CHECK(dance_id(7) == "dance_0007");
}

TEST_CASE("noise-free regular logs ingest back to the ideal samples") {
  // 997.5 Hz puts exactly 21 readings in every bin, and template knots sit
  // on bin edges, so each bin median is the reading at the bin centre.
  auto c = small_config(1, 8);
  for (auto& t : c.templates) t.noise_sigma.fill(0.0);
  c.sampling = Sampling::Regular;
  c.sample_rate_hz = 997.5;
  c.sample_rate_jitter_hz = 0.0;
  c.extension_s = 0.0;
  c.intro_s = 4.0;
  for (std::uint64_t d = 0; d < 3; ++d) {
    const auto dance = gen_dance(c, d);
    const auto samples = ingest(dance.log, c.segmentation(8));
    REQUIRE(samples.size() == dance.ideal.figures.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      worst = std::max(worst, (samples[k].values - dance.ideal.figures[k].values)
                                  .cwiseAbs()
                                  .maxCoeff());
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("simulate_dataset labels every sample") {
  const auto c = small_config(4, 5);
  const auto data = simulate_dataset(c, 2);
  REQUIRE(data.dances.size() == 4);
  CHECK_NOTHROW(data.validate());
  for (std::size_t d = 0; d < 4; ++d) {
    CHECK(data.dances[d].id == dance_id(d));
    CHECK(data.dances[d].labels() == gen_dance(c, d).ideal.labels());
  }
}

TEST_CASE("config errors name the line and field") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_synth_config(in, "t.conf");
  };
  auto message = [&](const std::string& text) -> std::string {
    try {
      parse(text);
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  const std::string base(default_synth_config_text());
  CHECK(message(base + "tempo_bpm_typo = 3\n").find("unknown field") != std::string::npos);
  CHECK(message("\n\ndances = many\n" + config_without("dances")).find("t.conf:3: field 'dances'") !=
        std::string::npos);
  CHECK(message(base + "dances = 3\n").find("duplicate field") != std::string::npos);
  CHECK(message(config_without("template.RC.yaw")).find("missing template for figure RC") !=
        std::string::npos);
  CHECK(message(config_without("tempo_bpm") + "tempo_bpm = -1\n").find("tempo_bpm") !=
        std::string::npos);
  CHECK(message("no equals sign\n").find("t.conf:1") != std::string::npos);
  CHECK(message(config_without("template.W.noise") + "template.W.noise = 1 2 3\n")
            .find("template.W.noise") != std::string::npos);
}

}  // TEST_SUITE
