#include "waltz/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "waltz/parallel.hpp"
#include "waltz/text.hpp"

namespace waltz {
namespace {

double wrap_degrees(double x) { return x - 360.0 * std::floor((x + 180.0) / 360.0); }

/// Noise-free signal of one labelled dance.
class DanceSignal {
 public:
  DanceSignal(const SynthConfig& config, const std::vector<FigureLabel>& labels,
              double initial_heading)
      : config_(config), labels_(labels), m_(config.measure_s()) {
    headings_.reserve(labels.size() + 1);
    headings_.push_back(initial_heading);
    for (const auto& l : labels) {
      const auto& yaw = yaw_profile(l);
      headings_.push_back(headings_.back() + yaw.at(1.0) - yaw.at(0.0));
    }
  }

  double operator()(Axis axis, double t) const {
    const double since = t - config_.intro_s;
    const auto n = static_cast<long>(labels_.size());
    const bool is_yaw = axis == Axis::Yaw;
    if (since < 0.0) return is_yaw ? headings_.front() : 0.0;
    const long k = static_cast<long>(std::floor(since / m_));
    if (k >= n) return is_yaw ? headings_.back() : 0.0;
    const double u = (since - static_cast<double>(k) * m_) / m_;
    const auto& tmpl = config_.templates[labels_[k].index()];
    const auto& profile = tmpl.axes[static_cast<int>(axis)];
    if (!is_yaw) return profile.at(u);
    return headings_[k] + profile.at(u) - profile.at(0.0);
  }

 private:
  const Profile& yaw_profile(FigureLabel l) const {
    return config_.templates[l.index()].axes[static_cast<int>(Axis::Yaw)];
  }

  const SynthConfig& config_;
  const std::vector<FigureLabel>& labels_;
  double m_;
  std::vector<double> headings_;
};

// --- config parsing -------------------------------------------------------

struct ConfigLine {
  std::size_t line = 0;
  std::string value;
};

[[noreturn]] void config_fail(std::string_view source, std::size_t line,
                              std::string_view key, const std::string& what) {
  throw ConfigError(std::string(source) + ":" + std::to_string(line) +
                    ": field '" + std::string(key) + "': " + what);
}

double parse_real(std::string_view source, std::string_view key,
                  const ConfigLine& entry) {
  double v = 0.0;
  if (!text::parse_number(text::trim(entry.value), v) || !std::isfinite(v)) {
    config_fail(source, entry.line, key, "expected a number, got '" + entry.value + "'");
  }
  return v;
}

std::vector<double> parse_reals(std::string_view source, std::string_view key,
                                const ConfigLine& entry) {
  std::vector<double> out;
  std::istringstream in(entry.value);
  std::string token;
  while (in >> token) {
    double v = 0.0;
    if (!text::parse_number(token, v) || !std::isfinite(v)) {
      config_fail(source, entry.line, key, "bad number '" + token + "'");
    }
    out.push_back(v);
  }
  return out;
}

Profile parse_profile(std::string_view source, std::string_view key,
                      const ConfigLine& entry) {
  Profile p;
  std::istringstream in(entry.value);
  std::string token;
  while (in >> token) {
    const auto colon = token.find(':');
    double u = 0.0;
    double v = 0.0;
    if (colon == std::string::npos ||
        !text::parse_number(std::string_view(token).substr(0, colon), u) ||
        !text::parse_number(std::string_view(token).substr(colon + 1), v)) {
      config_fail(source, entry.line, key,
                  "expected time:value control points, got '" + token + "'");
    }
    p.knots.push_back(u);
    p.values.push_back(v);
  }
  if (p.knots.size() < 2) {
    config_fail(source, entry.line, key, "need at least 2 control points");
  }
  if (p.knots.front() != 0.0 || p.knots.back() != 1.0) {
    config_fail(source, entry.line, key, "control points must span [0, 1]");
  }
  for (std::size_t i = 1; i < p.knots.size(); ++i) {
    if (!(p.knots[i] > p.knots[i - 1])) {
      config_fail(source, entry.line, key,
                  "control point times must strictly increase");
    }
  }
  return p;
}

}  // namespace

double Profile::at(double u) const {
  if (u <= knots.front()) return values.front();
  if (u >= knots.back()) return values.back();
  const auto it = std::upper_bound(knots.begin(), knots.end(), u);
  const std::size_t i = static_cast<std::size_t>(it - knots.begin());
  const double f = (u - knots[i - 1]) / (knots[i] - knots[i - 1]);
  return values[i - 1] + f * (values[i] - values[i - 1]);
}

SegmentationSpec SynthConfig::segmentation(int n_figures) const {
  SegmentationSpec s;
  s.tempo_bpm = tempo_bpm;
  s.intro_s = intro_s;
  s.n_figures = n_figures;
  s.extension_s = extension_s;
  return s;
}

void SynthConfig::validate() const {
  if (dances < 1) throw ConfigError("dances must be positive");
  if (length_min < 1 || length_max < length_min || length_max > 10000) {
    throw ConfigError("length_range must satisfy 1 <= min <= max <= 10000");
  }
  if (!(tempo_bpm > 0.0)) throw ConfigError("tempo_bpm must be positive");
  if (!(extension_s >= 0.0)) throw ConfigError("extension_s must be >= 0");
  if (!(intro_s > extension_s) || !(outro_s > extension_s)) {
    throw ConfigError("intro_s and outro_s must exceed extension_s");
  }
  if (!(sample_rate_hz > 0.0) || !(sample_rate_jitter_hz >= 0.0) ||
      !(sample_rate_jitter_hz < sample_rate_hz)) {
    throw ConfigError("need 0 <= sample_rate_jitter_hz < sample_rate_hz");
  }
  for (int l = 0; l < kNumFigures; ++l) {
    for (int a = 0; a < kNumAxes; ++a) {
      if (templates[l].axes[a].knots.size() < 2) {
        throw ConfigError("missing template for figure " +
                          std::string(FigureLabel(l).short_name()) + " axis " +
                          std::string(axis_name(static_cast<Axis>(a))));
      }
      if (!(templates[l].noise_sigma[a] >= 0.0)) {
        throw ConfigError("negative noise for figure " +
                          std::string(FigureLabel(l).short_name()));
      }
    }
  }
}

SynthConfig parse_synth_config(std::istream& in, std::string_view source) {
  std::map<std::string, ConfigLine, std::less<>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view row = line;
    if (const auto hash = row.find('#'); hash != std::string_view::npos) {
      row = row.substr(0, hash);
    }
    row = text::trim(row);
    if (row.empty()) continue;
    const auto eq = row.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(std::string(source) + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const std::string key(text::trim(row.substr(0, eq)));
    const std::string value(text::trim(row.substr(eq + 1)));
    if (key.empty()) {
      throw ConfigError(std::string(source) + ":" + std::to_string(line_no) +
                        ": empty key");
    }
    if (!entries.emplace(key, ConfigLine{line_no, value}).second) {
      config_fail(source, line_no, key, "duplicate field");
    }
  }

  SynthConfig config;
  std::array<std::array<bool, kNumAxes + 1>, kNumFigures> seen{};
  for (const auto& [key, entry] : entries) {
    if (key == "dances" || key == "seed") {
      long long v = 0;
      if (!text::parse_number(entry.value, v) || v < 0) {
        config_fail(source, entry.line, key, "expected a non-negative integer");
      }
      if (key == "dances") {
        config.dances = static_cast<int>(v);
      } else {
        config.seed = static_cast<std::uint64_t>(v);
      }
    } else if (key == "length_range") {
      const auto v = parse_reals(source, key, entry);
      if (v.size() != 2 || v[0] != std::floor(v[0]) || v[1] != std::floor(v[1])) {
        config_fail(source, entry.line, key, "expected two integers 'min max'");
      }
      config.length_min = static_cast<int>(v[0]);
      config.length_max = static_cast<int>(v[1]);
    } else if (key == "tempo_bpm") {
      config.tempo_bpm = parse_real(source, key, entry);
    } else if (key == "intro_s") {
      config.intro_s = parse_real(source, key, entry);
    } else if (key == "outro_s") {
      config.outro_s = parse_real(source, key, entry);
    } else if (key == "extension_s") {
      config.extension_s = parse_real(source, key, entry);
    } else if (key == "sample_rate_hz") {
      config.sample_rate_hz = parse_real(source, key, entry);
    } else if (key == "sample_rate_jitter_hz") {
      config.sample_rate_jitter_hz = parse_real(source, key, entry);
    } else if (key == "sampling") {
      if (entry.value == "irregular") {
        config.sampling = Sampling::Irregular;
      } else if (entry.value == "regular") {
        config.sampling = Sampling::Regular;
      } else {
        config_fail(source, entry.line, key, "expected 'irregular' or 'regular'");
      }
    } else if (key == "transitions") {
      if (entry.value != "unbiased") {
        config_fail(source, entry.line, key, "only 'unbiased' is supported");
      }
    } else if (key.rfind("template.", 0) == 0) {
      const auto parts = text::split(key, '.');
      if (parts.size() != 3) {
        config_fail(source, entry.line, key,
                    "expected template.<figure>.<axis|noise>");
      }
      FigureLabel label;
      try {
        label = FigureLabel::from_short_name(parts[1]);
      } catch (const UnknownLabel&) {
        config_fail(source, entry.line, key,
                    "unknown figure '" + std::string(parts[1]) + "'");
      }
      auto& tmpl = config.templates[label.index()];
      if (parts[2] == "noise") {
        const auto v = parse_reals(source, key, entry);
        if (v.size() != kNumAxes ||
            std::any_of(v.begin(), v.end(), [](double x) { return x < 0.0; })) {
          config_fail(source, entry.line, key,
                      "expected 4 non-negative noise sigmas");
        }
        std::copy(v.begin(), v.end(), tmpl.noise_sigma.begin());
        seen[label.index()][kNumAxes] = true;
      } else {
        Axis axis;
        try {
          axis = axis_from_name(parts[2]);
        } catch (const SchemaError&) {
          config_fail(source, entry.line, key,
                      "unknown axis '" + std::string(parts[2]) + "'");
        }
        tmpl.axes[static_cast<int>(axis)] = parse_profile(source, key, entry);
        seen[label.index()][static_cast<int>(axis)] = true;
      }
    } else {
      config_fail(source, entry.line, key, "unknown field");
    }
  }

  for (int l = 0; l < kNumFigures; ++l) {
    for (int a = 0; a < kNumAxes; ++a) {
      if (!seen[l][a]) {
        throw ConfigError(std::string(source) + ": missing template for figure " +
                          std::string(FigureLabel(l).short_name()) + " (field template." +
                          std::string(FigureLabel(l).short_name()) + "." +
                          std::string(axis_name(static_cast<Axis>(a))) + ")");
      }
    }
  }
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(source) + ": " + e.what());
  }
  return config;
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open config file " + path.string());
  return parse_synth_config(in, path.string());
}

SynthConfig default_synth_config() {
  std::istringstream in{std::string(default_synth_config_text())};
  return parse_synth_config(in, "default_synth.conf");
}

std::mt19937_64 dance_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

std::vector<FigureLabel> gen_sequence(const SynthConfig& config,
                                      std::mt19937_64& rng) {
  std::uniform_int_distribution<int> length(config.length_min, config.length_max);
  std::uniform_int_distribution<int> first(0, kNumFigures - 1);
  const int n = length(rng);
  std::vector<FigureLabel> labels;
  labels.reserve(static_cast<std::size_t>(n));
  labels.emplace_back(first(rng));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& probs = config.transitions.probs();
  while (static_cast<int>(labels.size()) < n) {
    const int i = labels.back().index();
    const double u = unit(rng);
    double cumulative = 0.0;
    int next = -1;
    for (int j = 0; j < kNumFigures; ++j) {
      if (probs(i, j) <= 0.0) continue;
      next = j;
      cumulative += probs(i, j);
      if (u < cumulative) break;
    }
    labels.emplace_back(next);
  }
  return labels;
}

std::string dance_id(std::uint64_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return "dance_" + digits;
}

double ideal_signal(const SynthConfig& config,
                    const std::vector<FigureLabel>& labels,
                    double initial_heading_deg, Axis axis, double t) {
  return DanceSignal(config, labels, initial_heading_deg)(axis, t);
}

SyntheticDance gen_dance(const SynthConfig& config, std::uint64_t index) {
  auto rng = dance_rng(config.seed, index);
  const auto labels = gen_sequence(config, rng);
  return gen_dance(config, index, labels);
}

SyntheticDance gen_dance(const SynthConfig& config, std::uint64_t index,
                         const std::vector<FigureLabel>& labels) {
  // Separate stream so the emission draws do not depend on how many draws
  // the label chain consumed.
  auto rng = dance_rng(config.seed ^ 0x5bd1e995ULL, index);
  std::uniform_real_distribution<double> heading_dist(-180.0, 180.0);
  SyntheticDance out;
  out.initial_heading_deg = heading_dist(rng);
  const DanceSignal signal(config, labels, out.initial_heading_deg);

  const int n = static_cast<int>(labels.size());
  const double m = config.measure_s();
  const double duration = config.intro_s + n * m + config.outro_s;

  for (int a = 0; a < kNumAxes; ++a) {
    const Axis axis = static_cast<Axis>(a);
    auto& stream = out.log[axis];
    std::normal_distribution<double> unit_noise(0.0, 1.0);
    auto emit = [&](double t) {
      const auto t_ns = static_cast<std::int64_t>(std::llround(t * 1e9));
      if (!stream.empty() && t_ns <= stream.t_ns.back()) return;
      // Noise is drawn per reading from the figure playing at time t.
      const double since = t - config.intro_s;
      const long k = static_cast<long>(std::floor(since / m));
      double sigma = 0.0;
      if (since >= 0.0 && k < n) {
        sigma = config.templates[labels[static_cast<std::size_t>(k)].index()]
                    .noise_sigma[a];
      }
      double v = signal(axis, t) + sigma * unit_noise(rng);
      if (axis == Axis::Yaw) v = wrap_degrees(v);
      stream.push(t_ns, v);
    };
    if (config.sampling == Sampling::Regular) {
      for (long i = 0;; ++i) {
        const double t = (static_cast<double>(i) + 0.5) / config.sample_rate_hz;
        if (t >= duration) break;
        emit(t);
      }
    } else {
      std::uniform_real_distribution<double> jitter(-config.sample_rate_jitter_hz,
                                                    config.sample_rate_jitter_hz);
      std::exponential_distribution<double> gap(config.sample_rate_hz + jitter(rng));
      for (double t = gap(rng); t < duration; t += gap(rng)) emit(t);
    }
  }

  out.ideal.id = dance_id(index);
  out.ideal.tempo_bpm = config.tempo_bpm;
  out.ideal.intro_s = config.intro_s;
  for (int k = 0; k < n; ++k) {
    const double start = config.intro_s + k * m - config.extension_s;
    const double width = (m + 2.0 * config.extension_s) / kNumBins;
    SampleMatrix values;
    for (int a = 0; a < kNumAxes; ++a) {
      for (int b = 0; b < kNumBins; ++b) {
        values(a, b) = signal(static_cast<Axis>(a), start + (b + 0.5) * width);
      }
    }
    out.ideal.figures.emplace_back(values, labels[static_cast<std::size_t>(k)]);
  }
  return out;
}

Dataset simulate_dataset(const SynthConfig& config, int jobs) {
  config.validate();
  Dataset data;
  data.dances.resize(static_cast<std::size_t>(config.dances));
  parallel_for(data.dances.size(), jobs, [&](std::size_t i) {
    auto dance = gen_dance(config, i);
    const auto labels = dance.ideal.labels();
    auto samples = ingest(std::move(dance.log),
                          config.segmentation(static_cast<int>(labels.size())));
    for (std::size_t k = 0; k < samples.size(); ++k) samples[k].label = labels[k];
    DanceSequence seq;
    seq.id = dance.ideal.id;
    seq.tempo_bpm = config.tempo_bpm;
    seq.intro_s = config.intro_s;
    seq.figures = std::move(samples);
    data.dances[i] = std::move(seq);
  });
  return data;
}

}  // namespace waltz
