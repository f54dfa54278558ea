#pragma once

// Reading and writing every file the pipeline exchanges. CSV files carry a
// header line; numbers use the shortest text that parses back to the same
// double, so exports round-trip bit-exactly.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "waltz/classifier.hpp"
#include "waltz/eval.hpp"
#include "waltz/figure_hmm.hpp"
#include "waltz/transitions.hpp"

namespace waltz::io {

using nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path);
/// Creates parent directories as needed.
std::ofstream open_output(const std::filesystem::path& path);

// samples.csv: dance_id,position,label,lin_acc_x_0..lin_acc_x_99,...,yaw_99
void write_samples(std::ostream& out, const Dataset& data);
Dataset read_samples(std::istream& in, std::string_view source = "<samples>");
Dataset read_samples(const std::filesystem::path& path);

// labels.csv: dance_id,position,label
using LabelTable = std::map<std::string, std::vector<FigureLabel>, std::less<>>;
void write_labels(std::ostream& out, const Dataset& data);
LabelTable read_labels(std::istream& in, std::string_view source = "<labels>");
LabelTable read_labels(const std::filesystem::path& path);

// dances.csv: dance_id,tempo_bpm,intro_s,n_figures,log_file
struct DanceEntry {
  std::string id;
  double tempo_bpm = 0.0;
  double intro_s = 0.0;
  int n_figures = 0;
  std::string log_file;
};
void write_dances(std::ostream& out, const std::vector<DanceEntry>& dances);
std::vector<DanceEntry> read_dances(const std::filesystem::path& path);

// posteriors.csv: dance_id,position,BL,BW,...,Weave
// Rows must be non-negative and sum to 1 within kPosteriorSumTolerance; they
// are renormalized on import.
inline constexpr double kPosteriorSumTolerance = 1e-6;
void write_posteriors(std::ostream& out, const PosteriorTable& table);
PosteriorTable read_posteriors(std::istream& in,
                               std::string_view source = "<posteriors>");
PosteriorTable read_posteriors(const std::filesystem::path& path);

// corrections.csv: dance_id,position,raw,corrected,changed
void write_corrections(
    std::ostream& out,
    const std::vector<std::pair<std::string, CorrectionResult>>& results);

// confusion CSV: truth\predicted header row, one row per true label.
void write_confusion(std::ostream& out, const Matrix16& normalized);

json to_json(const TransitionMatrix& m);
TransitionMatrix transition_matrix_from_json(const json& j);

json to_json(const FigureHmm& hmm);
FigureHmm figure_hmm_from_json(const json& j);

json to_json(const FigureClassifier& model);
FigureClassifier classifier_from_json(const json& j);

json to_json(const EvalReport& report);
/// Human-readable per-fold table.
std::string report_table(const EvalReport& report);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

}  // namespace waltz::io
