#include "waltz/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <tuple>

#include "waltz/numeric.hpp"
#include "waltz/parallel.hpp"
#include "waltz/text.hpp"

namespace waltz {

std::array<std::size_t, kNumAxes> RawLog::counts() const {
  std::array<std::size_t, kNumAxes> out{};
  for (int a = 0; a < kNumAxes; ++a) out[a] = streams[a].size();
  return out;
}

void RawLog::validate() const {
  for (int a = 0; a < kNumAxes; ++a) {
    const auto& s = streams[a];
    if (s.empty()) {
      throw MissingAxis("no readings for axis " +
                        std::string(axis_name(static_cast<Axis>(a))));
    }
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (s.t_ns[i] <= s.t_ns[i - 1]) {
        throw NonMonotonicTime("axis " +
                               std::string(axis_name(static_cast<Axis>(a))) +
                               ": timestamp " + std::to_string(s.t_ns[i]) +
                               " does not follow " +
                               std::to_string(s.t_ns[i - 1]));
      }
    }
  }
}

RawLog parse_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open log file " + path.string());
  return parse_log(in, path.string());
}

RawLog parse_log(std::istream& in, std::string_view source) {
  const std::string where(source);
  std::string line;
  if (!std::getline(in, line)) {
    throw MalformedRow(where + ": empty file, expected header t_ns,axis,value");
  }
  if (text::trim_cr(line) != "t_ns,axis,value") {
    throw MalformedRow(where + ":1: expected header t_ns,axis,value");
  }
  RawLog log;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = text::trim_cr(line);
    if (row.empty()) continue;
    const auto fields = text::split(row, ',');
    const std::string at = where + ":" + std::to_string(line_no);
    if (fields.size() != 3) {
      throw MalformedRow(at + ": expected 3 columns, got " +
                         std::to_string(fields.size()));
    }
    std::int64_t t = 0;
    double v = 0.0;
    if (!text::parse_number(fields[0], t)) {
      throw MalformedRow(at + ": bad timestamp '" + std::string(fields[0]) +
                         "'");
    }
    if (!text::parse_number(fields[2], v) || !std::isfinite(v)) {
      throw MalformedRow(at + ": bad value '" + std::string(fields[2]) + "'");
    }
    Axis axis;
    try {
      axis = axis_from_name(fields[1]);
    } catch (const SchemaError&) {
      throw MalformedRow(at + ": unknown axis '" + std::string(fields[1]) +
                         "'");
    }
    auto& stream = log[axis];
    if (!stream.empty() && t <= stream.t_ns.back()) {
      throw NonMonotonicTime(at + ": timestamp " + std::to_string(t) +
                             " does not increase for axis " +
                             std::string(fields[1]));
    }
    stream.push(t, v);
  }
  for (int a = 0; a < kNumAxes; ++a) {
    if (log.streams[a].empty()) {
      throw MissingAxis(where + ": no readings for axis " +
                        std::string(axis_name(static_cast<Axis>(a))));
    }
  }
  return log;
}

void write_log(std::ostream& out, const RawLog& log) {
  std::vector<std::tuple<std::int64_t, int, std::size_t>> order;
  for (int a = 0; a < kNumAxes; ++a) {
    for (std::size_t i = 0; i < log.streams[a].size(); ++i) {
      order.emplace_back(log.streams[a].t_ns[i], a, i);
    }
  }
  std::sort(order.begin(), order.end());
  out << "t_ns,axis,value\n";
  for (const auto& [t, a, i] : order) {
    out << t << ',' << axis_name(static_cast<Axis>(a)) << ','
        << text::format_double(log.streams[a].value[i]) << '\n';
  }
}

void SegmentationSpec::validate() const {
  const double m = measure_s();
  if (!(tempo_bpm > 0.0) || !std::isfinite(m) || !(m > 0.0)) {
    throw ConfigError("tempo must be positive and finite");
  }
  if (!(intro_s >= 0.0) || !std::isfinite(intro_s)) {
    throw ConfigError("intro must be a finite non-negative number of seconds");
  }
  if (!(extension_s >= 0.0) || !std::isfinite(extension_s)) {
    throw ConfigError("extension must be a finite non-negative number");
  }
  if (n_figures <= 0) throw ConfigError("figure count must be positive");
}

std::vector<Window> segment(const RawLog& log, const SegmentationSpec& spec) {
  spec.validate();
  log.validate();
  auto seconds = [&](std::int64_t t) {
    return static_cast<double>(t - spec.origin_ns) * 1e-9;
  };

  double log_start = std::numeric_limits<double>::infinity();
  double log_end = -std::numeric_limits<double>::infinity();
  double shortest_end = std::numeric_limits<double>::infinity();
  for (const auto& s : log.streams) {
    log_start = std::min(log_start, seconds(s.t_ns.front()));
    log_end = std::max(log_end, seconds(s.t_ns.back()));
    shortest_end = std::min(shortest_end, seconds(s.t_ns.back()));
  }

  const double m = spec.measure_s();
  const double nominal_end = spec.intro_s + spec.n_figures * m;
  if (shortest_end < nominal_end) {
    throw InsufficientData(
        "log ends at " + std::to_string(shortest_end) + " s but " +
        std::to_string(spec.n_figures) + " figures need data until " +
        std::to_string(nominal_end) + " s");
  }

  std::vector<Window> windows(spec.n_figures);
  for (int k = 0; k < spec.n_figures; ++k) {
    Window& w = windows[k];
    w.start_s = std::max(log_start, spec.intro_s + k * m - spec.extension_s);
    w.end_s = std::min(log_end, spec.intro_s + (k + 1) * m + spec.extension_s);
    for (int a = 0; a < kNumAxes; ++a) {
      const auto& s = log.streams[a];
      auto& out = w.axes[a];
      auto first = std::partition_point(
          s.t_ns.begin(), s.t_ns.end(),
          [&](std::int64_t t) { return seconds(t) < w.start_s; });
      for (auto it = first; it != s.t_ns.end(); ++it) {
        const double t = seconds(*it);
        if (t > w.end_s) break;
        out.t_s.push_back(t);
        out.value.push_back(s.value[it - s.t_ns.begin()]);
      }
    }
  }
  return windows;
}

FigureSample downsample(const Window& window) {
  const double duration = window.end_s - window.start_s;
  SampleMatrix values;
  std::array<std::vector<double>, kNumBins> bins;
  for (int a = 0; a < kNumAxes; ++a) {
    const auto& axis = window.axes[a];
    if (axis.t_s.empty()) {
      throw EmptyWindow("window [" + std::to_string(window.start_s) + ", " +
                        std::to_string(window.end_s) +
                        "] has no readings for axis " +
                        std::string(axis_name(static_cast<Axis>(a))));
    }
    for (auto& b : bins) b.clear();
    for (std::size_t i = 0; i < axis.t_s.size(); ++i) {
      int b = 0;
      if (duration > 0.0) {
        b = static_cast<int>(
            std::floor((axis.t_s[i] - window.start_s) / duration * kNumBins));
      }
      bins[std::clamp(b, 0, kNumBins - 1)].push_back(axis.value[i]);
    }
    int previous = -1;
    for (int b = 0; b < kNumBins; ++b) {
      if (bins[b].empty()) continue;
      values(a, b) = median_inplace(std::span<double>(bins[b]));
      for (int fill = previous + 1; fill < b; ++fill) {
        // Leading gaps take the first value, later gaps the previous one.
        values(a, fill) = previous < 0 ? values(a, b) : values(a, previous);
      }
      previous = b;
    }
    for (int fill = previous + 1; fill < kNumBins; ++fill) {
      values(a, fill) = values(a, previous);
    }
  }
  return FigureSample(values);
}

std::vector<double> unwrap_yaw(std::span<const double> degrees) {
  std::vector<double> out(degrees.begin(), degrees.end());
  for (std::size_t i = 1; i < out.size(); ++i) {
    double delta = degrees[i] - degrees[i - 1];
    delta -= 360.0 * std::round(delta / 360.0);
    out[i] = out[i - 1] + delta;
  }
  return out;
}

std::vector<FigureSample> ingest(RawLog log, const SegmentationSpec& spec,
                                 const IngestOptions& options) {
  if (options.unwrap_yaw) {
    auto& yaw = log[Axis::Yaw];
    yaw.value = unwrap_yaw(yaw.value);
  }
  const auto windows = segment(log, spec);
  std::vector<FigureSample> samples(windows.size());
  parallel_for(windows.size(), options.jobs,
               [&](std::size_t k) { samples[k] = downsample(windows[k]); });
  return samples;
}

}  // namespace waltz
