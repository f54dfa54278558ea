#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "waltz/figure.hpp"
#include "waltz/ingest.hpp"
#include "waltz/transitions.hpp"

namespace waltz {

/// Piecewise-linear function on normalized figure time [0, 1].
struct Profile {
  std::vector<double> knots;   // strictly increasing, first 0, last 1
  std::vector<double> values;

  double at(double u) const;
};

/// Noise-free shape of one figure plus per-axis reading noise. Acceleration
/// profiles are absolute; the yaw profile is the heading change relative to
/// the start of the figure.
struct FigureTemplate {
  std::array<Profile, kNumAxes> axes;
  std::array<double, kNumAxes> noise_sigma{};
};

enum class Sampling {
  /// Exponential inter-arrival times at a per-axis rate drawn from
  /// rate +- jitter.
  Irregular,
  /// Readings at (i + 1/2) / rate exactly; noise-free round-trip checks.
  Regular,
};

struct SynthConfig {
  std::array<FigureTemplate, kNumFigures> templates;
  TransitionMatrix transitions = unbiased_matrix();
  int dances = 200;
  int length_min = 40;
  int length_max = 60;
  double tempo_bpm = 28.5;
  double intro_s = 4.0;
  double outro_s = 1.0;
  double extension_s = 0.35;
  double sample_rate_hz = 50.0;
  double sample_rate_jitter_hz = 10.0;
  Sampling sampling = Sampling::Irregular;
  std::uint64_t seed = 1;

  double measure_s() const { return 60.0 / tempo_bpm; }
  SegmentationSpec segmentation(int n_figures) const;
  /// Throws ConfigError.
  void validate() const;
};

/// Parses the `key = value` config format. Every figure needs a template;
/// errors name the line and field.
SynthConfig parse_synth_config(std::istream& in,
                               std::string_view source = "<config>");
SynthConfig load_synth_config(const std::filesystem::path& path);
/// The versioned default fixture (config/default_synth.conf).
SynthConfig default_synth_config();
std::string_view default_synth_config_text();

/// Random generator for dance `index`, derived from (seed, index).
std::mt19937_64 dance_rng(std::uint64_t seed, std::uint64_t index);

/// Markov chain of figures: uniform start, successors from the transition
/// rows, length uniform in [length_min, length_max].
std::vector<FigureLabel> gen_sequence(const SynthConfig& config,
                                      std::mt19937_64& rng);

struct SyntheticDance {
  /// Labels plus the noise-free 4x100 samples the segmentation should
  /// recover (yaw unwrapped).
  DanceSequence ideal;
  RawLog log;
  double initial_heading_deg = 0.0;
};

SyntheticDance gen_dance(const SynthConfig& config, std::uint64_t index);
SyntheticDance gen_dance(const SynthConfig& config, std::uint64_t index,
                         const std::vector<FigureLabel>& labels);

std::string dance_id(std::uint64_t index);

/// Noise-free signal of a dance at time t (seconds from song start).
/// Yaw is the continuous heading.
double ideal_signal(const SynthConfig& config,
                    const std::vector<FigureLabel>& labels,
                    double initial_heading_deg, Axis axis, double t);

/// Generates config.dances dances and ingests every log into noisy samples
/// (labels attached). Matches what simulate followed by ingest produces.
Dataset simulate_dataset(const SynthConfig& config, int jobs = 1);

}  // namespace waltz
