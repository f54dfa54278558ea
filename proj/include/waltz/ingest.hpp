#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "waltz/figure.hpp"

namespace waltz {

/// Readings of one sensor axis; timestamps strictly increasing.
struct AxisStream {
  std::vector<std::int64_t> t_ns;
  std::vector<double> value;

  std::size_t size() const { return t_ns.size(); }
  bool empty() const { return t_ns.empty(); }
  void push(std::int64_t t, double v) {
    t_ns.push_back(t);
    value.push_back(v);
  }
};

/// Irregularly sampled sensor log, one stream per axis.
struct RawLog {
  std::array<AxisStream, kNumAxes> streams;

  AxisStream& operator[](Axis a) { return streams[static_cast<int>(a)]; }
  const AxisStream& operator[](Axis a) const {
    return streams[static_cast<int>(a)];
  }
  std::array<std::size_t, kNumAxes> counts() const;

  /// Throws MissingAxis or NonMonotonicTime.
  void validate() const;
};

/// Parses the `t_ns,axis,value` CSV log. Rows for different axes may be
/// interleaved in any order; within an axis time must strictly increase.
RawLog parse_log(const std::filesystem::path& path);
RawLog parse_log(std::istream& in, std::string_view source = "<stream>");

/// Writes the log in the same format, rows ordered by time then axis.
void write_log(std::ostream& out, const RawLog& log);

struct SegmentationSpec {
  double tempo_bpm = 28.5;
  double intro_s = 0.0;
  int n_figures = 1;
  double extension_s = 0.35;
  /// Timestamp of the song start; window times are measured from here.
  std::int64_t origin_ns = 0;

  double measure_s() const { return 60.0 / tempo_bpm; }
  /// Throws ConfigError for a non-positive tempo, negative intro or
  /// extension, or a non-positive figure count.
  void validate() const;
};

/// Readings of one axis inside a window, time in seconds from the origin.
struct AxisWindow {
  std::vector<double> t_s;
  std::vector<double> value;
};

struct Window {
  double start_s = 0.0;
  double end_s = 0.0;
  std::array<AxisWindow, kNumAxes> axes;
};

/// Cuts the log into spec.n_figures overlapping windows. Window k covers
/// [intro + k*m - e, intro + (k+1)*m + e], clipped to the span of the log.
/// Throws InsufficientData when any axis ends before the last nominal end.
std::vector<Window> segment(const RawLog& log, const SegmentationSpec& spec);

/// Median-downsamples each axis of the window into 100 equal time bins.
/// Empty bins copy the previous filled bin (leading ones the first filled).
/// Throws EmptyWindow when an axis has no readings.
FigureSample downsample(const Window& window);

/// Removes 360 degree jumps so that consecutive deltas are within
/// [-180, 180].
std::vector<double> unwrap_yaw(std::span<const double> degrees);

struct IngestOptions {
  bool unwrap_yaw = true;
  int jobs = 1;
};

/// unwrap (optional) -> segment -> downsample for every window.
std::vector<FigureSample> ingest(RawLog log, const SegmentationSpec& spec,
                                 const IngestOptions& options = {});

}  // namespace waltz
