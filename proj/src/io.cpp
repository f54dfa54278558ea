#include "waltz/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "waltz/text.hpp"

namespace waltz::io {
namespace {

[[noreturn]] void schema_fail(std::string_view source, std::size_t line,
                              const std::string& what) {
  throw SchemaError(std::string(source) + ":" + std::to_string(line) + ": " +
                    what);
}

std::string samples_header() {
  std::string h = "dance_id,position,label";
  for (int a = 0; a < kNumAxes; ++a) {
    for (int b = 0; b < kNumBins; ++b) {
      h += ',';
      h += axis_name(static_cast<Axis>(a));
      h += '_' + std::to_string(b);
    }
  }
  return h;
}

std::string posteriors_header() {
  std::string h = "dance_id,position";
  for (const auto& l : FigureLabel::all()) {
    h += ',';
    h += l.short_name();
  }
  return h;
}

std::size_t parse_position(std::string_view source, std::size_t line,
                           std::string_view field, std::size_t expected) {
  std::size_t pos = 0;
  if (!text::parse_number(field, pos)) {
    schema_fail(source, line, "column position: bad value '" + std::string(field) + "'");
  }
  if (pos != expected) {
    schema_fail(source, line, "column position: expected " +
                                  std::to_string(expected) + ", got " +
                                  std::to_string(pos));
  }
  return pos;
}

/// Reads rows grouped by dance id; positions must count up from 0.
template <typename OnRow>
void read_grouped(std::istream& in, std::string_view source,
                  const std::string& header, std::size_t columns,
                  OnRow&& on_row) {
  std::string line;
  if (!std::getline(in, line) || text::trim_cr(line) != header) {
    schema_fail(source, 1, "unexpected header");
  }
  std::map<std::string, std::size_t, std::less<>> next_position;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = text::trim_cr(line);
    if (row.empty()) continue;
    const auto fields = text::split(row, ',');
    if (fields.size() != columns) {
      schema_fail(source, line_no, "expected " + std::to_string(columns) +
                                       " columns, got " +
                                       std::to_string(fields.size()));
    }
    if (fields[0].empty()) schema_fail(source, line_no, "column dance_id: empty");
    auto [it, inserted] = next_position.try_emplace(std::string(fields[0]), 0);
    parse_position(source, line_no, fields[1], it->second);
    it->second += 1;
    on_row(line_no, fields, inserted);
  }
}

json matrix_json(const auto& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix_from_json(
    const json& j, Eigen::Index rows, Eigen::Index cols, std::string_view what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw SchemaError(std::string(what) + ": expected " + std::to_string(rows) + " rows");
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw SchemaError(std::string(what) + ": row " + std::to_string(r) +
                        " should have " + std::to_string(cols) + " entries");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = row[static_cast<std::size_t>(c)].get<Scalar>();
    }
  }
  return m;
}

json vector_json(const auto& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> vector_from_json(const json& j,
                                                          Eigen::Index size,
                                                          std::string_view what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) {
    throw SchemaError(std::string(what) + ": expected " + std::to_string(size) +
                      " entries");
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = j[static_cast<std::size_t>(i)].get<Scalar>();
  return v;
}

json label_list() {
  json labels = json::array();
  for (const auto& l : FigureLabel::all()) labels.push_back(l.short_name());
  return labels;
}

void check_label_list(const json& j) {
  if (j.at("labels") != label_list()) {
    throw SchemaError("label list does not match the 16 figures in canonical order");
  }
}

json confusion_json(const ConfusionMatrix& cm) {
  return json{{"labels", label_list()},
              {"counts", matrix_json(cm.counts)},
              {"normalized", matrix_json(cm.normalized)}};
}

}  // namespace

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void write_samples(std::ostream& out, const Dataset& data) {
  out << samples_header() << '\n';
  for (const auto& d : data.dances) {
    for (std::size_t p = 0; p < d.figures.size(); ++p) {
      const auto& f = d.figures[p];
      out << d.id << ',' << p << ',' << (f.label ? f.label->short_name() : "");
      for (int a = 0; a < kNumAxes; ++a) {
        for (int b = 0; b < kNumBins; ++b) {
          out << ',' << text::format_double(f.values(a, b));
        }
      }
      out << '\n';
    }
  }
}

Dataset read_samples(std::istream& in, std::string_view source) {
  Dataset data;
  std::map<std::string, std::size_t, std::less<>> index;
  read_grouped(in, source, samples_header(), 3 + kNumAxes * kNumBins,
               [&](std::size_t line, const std::vector<std::string_view>& f,
                   bool first) {
                 if (first) {
                   index.emplace(std::string(f[0]), data.dances.size());
                   data.dances.push_back(DanceSequence{std::string(f[0]), {}, 0.0, 0.0});
                 }
                 FigureSample sample;
                 if (!f[2].empty()) {
                   try {
                     sample.label = FigureLabel::from_short_name(f[2]);
                   } catch (const UnknownLabel&) {
                     schema_fail(source, line, "column label: unknown figure '" +
                                                   std::string(f[2]) + "'");
                   }
                 }
                 for (int a = 0; a < kNumAxes; ++a) {
                   for (int b = 0; b < kNumBins; ++b) {
                     const std::size_t col = 3 + static_cast<std::size_t>(a * kNumBins + b);
                     double v = 0.0;
                     if (!text::parse_number(f[col], v) || !std::isfinite(v)) {
                       schema_fail(source, line, "column " + std::to_string(col + 1) +
                                                     ": bad value '" +
                                                     std::string(f[col]) + "'");
                     }
                     sample.values(a, b) = v;
                   }
                 }
                 data.dances[index.find(f[0])->second].figures.push_back(std::move(sample));
               });
  return data;
}

Dataset read_samples(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_samples(in, path.string());
}

void write_labels(std::ostream& out, const Dataset& data) {
  out << "dance_id,position,label\n";
  for (const auto& d : data.dances) {
    const auto labels = d.labels();
    for (std::size_t p = 0; p < labels.size(); ++p) {
      out << d.id << ',' << p << ',' << labels[p].short_name() << '\n';
    }
  }
}

LabelTable read_labels(std::istream& in, std::string_view source) {
  LabelTable table;
  read_grouped(in, source, "dance_id,position,label", 3,
               [&](std::size_t line, const std::vector<std::string_view>& f, bool) {
                 try {
                   table[std::string(f[0])].push_back(FigureLabel::from_short_name(f[2]));
                 } catch (const UnknownLabel&) {
                   schema_fail(source, line, "column label: unknown figure '" +
                                                 std::string(f[2]) + "'");
                 }
               });
  return table;
}

LabelTable read_labels(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_labels(in, path.string());
}

void write_dances(std::ostream& out, const std::vector<DanceEntry>& dances) {
  out << "dance_id,tempo_bpm,intro_s,n_figures,log_file\n";
  for (const auto& d : dances) {
    out << d.id << ',' << text::format_double(d.tempo_bpm) << ','
        << text::format_double(d.intro_s) << ',' << d.n_figures << ','
        << d.log_file << '\n';
  }
}

std::vector<DanceEntry> read_dances(const std::filesystem::path& path) {
  auto in = open_input(path);
  const std::string source = path.string();
  std::string line;
  if (!std::getline(in, line) ||
      text::trim_cr(line) != "dance_id,tempo_bpm,intro_s,n_figures,log_file") {
    schema_fail(source, 1, "unexpected header");
  }
  std::vector<DanceEntry> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = text::trim_cr(line);
    if (row.empty()) continue;
    const auto f = text::split(row, ',');
    DanceEntry e;
    if (f.size() != 5 || !text::parse_number(f[1], e.tempo_bpm) ||
        !text::parse_number(f[2], e.intro_s) ||
        !text::parse_number(f[3], e.n_figures)) {
      schema_fail(source, line_no, "malformed dance row");
    }
    e.id = std::string(f[0]);
    e.log_file = std::string(f[4]);
    out.push_back(std::move(e));
  }
  return out;
}

void write_posteriors(std::ostream& out, const PosteriorTable& table) {
  out << posteriors_header() << '\n';
  for (const auto& [id, rows] : table) {
    for (std::size_t p = 0; p < rows.size(); ++p) {
      out << id << ',' << p;
      for (int i = 0; i < kNumFigures; ++i) {
        out << ',' << text::format_double(rows[p][i]);
      }
      out << '\n';
    }
  }
}

PosteriorTable read_posteriors(std::istream& in, std::string_view source) {
  PosteriorTable table;
  read_grouped(
      in, source, posteriors_header(), 2 + kNumFigures,
      [&](std::size_t line, const std::vector<std::string_view>& f, bool) {
        Vector16 p;
        for (int i = 0; i < kNumFigures; ++i) {
          const auto& field = f[2 + static_cast<std::size_t>(i)];
          if (!text::parse_number(field, p[i]) || !std::isfinite(p[i]) || p[i] < 0.0) {
            schema_fail(source, line,
                        "column " + std::string(FigureLabel(i).short_name()) +
                            ": expected a non-negative probability, got '" +
                            std::string(field) + "'");
          }
        }
        const double sum = p.sum();
        if (std::abs(sum - 1.0) > kPosteriorSumTolerance) {
          std::ostringstream msg;
          msg << "row sums to " << std::setprecision(10) << sum << ", expected 1";
          schema_fail(source, line, msg.str());
        }
        table[std::string(f[0])].push_back(ProbVector::normalized(p));
      });
  return table;
}

PosteriorTable read_posteriors(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_posteriors(in, path.string());
}

void write_corrections(
    std::ostream& out,
    const std::vector<std::pair<std::string, CorrectionResult>>& results) {
  out << "dance_id,position,raw,corrected,changed\n";
  for (const auto& [id, r] : results) {
    for (std::size_t p = 0; p < r.size(); ++p) {
      out << id << ',' << p << ',' << r.raw_labels[p].short_name() << ','
          << r.corrected_labels[p].short_name() << ',' << (r.changed[p] ? 1 : 0)
          << '\n';
    }
  }
}

void write_confusion(std::ostream& out, const Matrix16& normalized) {
  out << "truth\\predicted";
  for (const auto& l : FigureLabel::all()) out << ',' << l.short_name();
  out << '\n';
  for (const auto& r : FigureLabel::all()) {
    out << r.short_name();
    for (int c = 0; c < kNumFigures; ++c) {
      out << ',' << text::format_double(normalized(r.index(), c));
    }
    out << '\n';
  }
}

json to_json(const TransitionMatrix& m) {
  json support = json::array();
  for (int r = 0; r < kNumFigures; ++r) {
    json row = json::array();
    for (int c = 0; c < kNumFigures; ++c) row.push_back(static_cast<bool>(m.support()(r, c)));
    support.push_back(std::move(row));
  }
  return json{{"labels", label_list()},
              {"probs", matrix_json(m.probs())},
              {"support", std::move(support)}};
}

TransitionMatrix transition_matrix_from_json(const json& j) {
  try {
    check_label_list(j);
    const Matrix16 probs =
        matrix_from_json<double>(j.at("probs"), kNumFigures, kNumFigures, "probs");
    const Mask16 support =
        matrix_from_json<bool>(j.at("support"), kNumFigures, kNumFigures, "support");
    return TransitionMatrix(probs, support);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("transition matrix JSON: ") + e.what());
  }
}

json to_json(const FigureHmm& hmm) {
  json state_labels = json::array();
  for (const auto& l : hmm.state_labels) state_labels.push_back(l.short_name());
  return json{{"labels", label_list()},
              {"initial", vector_json(hmm.model.initial)},
              {"transition", matrix_json(hmm.model.transition)},
              {"means", matrix_json(hmm.model.means)},
              {"variances", matrix_json(hmm.model.variances)},
              {"state_labels", std::move(state_labels)},
              {"log_likelihood_trace", hmm.log_likelihood_trace}};
}

FigureHmm figure_hmm_from_json(const json& j) {
  try {
    check_label_list(j);
    FigureHmm hmm;
    const Eigen::Index k = static_cast<Eigen::Index>(j.at("initial").size());
    hmm.model.initial = vector_from_json<double>(j.at("initial"), k, "initial");
    hmm.model.transition =
        matrix_from_json<double>(j.at("transition"), k, k, "transition");
    hmm.model.means = matrix_from_json<double>(j.at("means"), k, kNumAxes, "means");
    hmm.model.variances =
        matrix_from_json<double>(j.at("variances"), k, kNumAxes, "variances");
    if ((hmm.model.variances.array() <= 0.0).any()) {
      throw SchemaError("variances must be positive");
    }
    for (const auto& s : j.at("state_labels")) {
      hmm.state_labels.push_back(FigureLabel::from_short_name(s.get<std::string>()));
    }
    if (static_cast<Eigen::Index>(hmm.state_labels.size()) != k) {
      throw SchemaError("state_labels must have one entry per state");
    }
    hmm.log_likelihood_trace =
        j.value("log_likelihood_trace", std::vector<double>{});
    return hmm;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("HMM model JSON: ") + e.what());
  }
}

json to_json(const FigureClassifier& model) {
  const auto& spec = model.network.spec();
  json layers = json::array();
  const auto& p = model.network.parameters();
  for (std::size_t l = 0; l < p.layers(); ++l) {
    layers.push_back(json{{"weights", matrix_json(p.weights[l])},
                          {"bias", vector_json(p.biases[l])}});
  }
  return json{{"labels", label_list()},
              {"spec",
               {{"depth", spec.depth},
                {"width", spec.width},
                {"input_dim", spec.input_dim},
                {"output_dim", spec.output_dim},
                {"seed", spec.seed}}},
              {"scalar", "float32"},
              {"standardizer",
               {{"mean", vector_json(model.standardizer.mean)},
                {"scale", vector_json(model.standardizer.scale)}}},
              {"layers", std::move(layers)},
              {"epoch_loss", model.epoch_loss}};
}

FigureClassifier classifier_from_json(const json& j) {
  try {
    check_label_list(j);
    const auto& s = j.at("spec");
    MlpSpec spec;
    spec.depth = s.at("depth").get<int>();
    spec.width = s.at("width").get<int>();
    spec.input_dim = s.at("input_dim").get<int>();
    spec.output_dim = s.at("output_dim").get<int>();
    spec.seed = s.at("seed").get<std::uint64_t>();
    if (spec.input_dim != kNumAxes * kNumBins || spec.output_dim != kNumFigures) {
      throw SchemaError("classifier must map 400 inputs to 16 outputs");
    }
    spec.validate();
    const auto sizes = Mlp<ClassifierScalar>(MlpSpec{spec.depth, spec.width,
                                                     spec.input_dim,
                                                     spec.output_dim, 0})
                           .layer_sizes();
    MlpParameters<ClassifierScalar> params;
    const auto& layers = j.at("layers");
    if (layers.size() + 1 != sizes.size()) {
      throw SchemaError("layer count does not match depth");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      params.weights.push_back(matrix_from_json<ClassifierScalar>(
          layers[l].at("weights"), sizes[l + 1], sizes[l], "weights"));
      params.biases.push_back(vector_from_json<ClassifierScalar>(
          layers[l].at("bias"), sizes[l + 1], "bias"));
    }
    Standardizer standardizer;
    const auto& st = j.at("standardizer");
    standardizer.mean = vector_from_json<double>(st.at("mean"), spec.input_dim, "mean");
    standardizer.scale = vector_from_json<double>(st.at("scale"), spec.input_dim, "scale");
    return FigureClassifier{std::move(standardizer),
                            Mlp<ClassifierScalar>(spec, std::move(params)),
                            j.value("epoch_loss", std::vector<double>{})};
  } catch (const json::exception& e) {
    throw SchemaError(std::string("classifier JSON: ") + e.what());
  }
}

json to_json(const EvalReport& report) {
  json folds = json::array();
  for (const auto& f : report.folds) {
    folds.push_back(json{
        {"fold", f.fold},
        {"test_dances", f.test_dances},
        {"figures", f.figures},
        {"raw_accuracy", f.raw_accuracy},
        {"corrected_accuracy",
         f.corrected_accuracy ? json(*f.corrected_accuracy) : json(nullptr)},
        {"improvement_points", f.improvement_points()}});
  }
  const auto stats = improvement_stats(report);
  json histogram = json::object();
  for (const auto& [bin, count] : stats.histogram) histogram[std::to_string(bin)] = count;
  return json{
      {"classifier", report.classifier},
      {"seed", report.seed},
      {"folds", std::move(folds)},
      {"mean_raw_accuracy", report.mean_raw_accuracy},
      {"mean_corrected_accuracy", report.mean_corrected_accuracy
                                      ? json(*report.mean_corrected_accuracy)
                                      : json(nullptr)},
      {"improvement",
       report.has_correction()
           ? json{{"mean_points", stats.mean},
                  {"min_points", stats.min},
                  {"max_points", stats.max},
                  {"histogram", std::move(histogram)}}
           : json(nullptr)},
      {"confusion_raw", confusion_json(report.confusion_raw)},
      {"confusion_corrected", report.confusion_corrected
                                  ? confusion_json(*report.confusion_corrected)
                                  : json(nullptr)}};
}

std::string report_table(const EvalReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "classifier: " << report.classifier << "  seed: " << report.seed << '\n';
  out << "fold  dances  figures  raw %   corrected %  delta pts\n";
  for (const auto& f : report.folds) {
    out << std::setw(4) << f.fold << "  " << std::setw(6) << f.test_dances.size()
        << "  " << std::setw(7) << f.figures << "  " << std::setw(6)
        << 100.0 * f.raw_accuracy << "  ";
    if (f.corrected_accuracy) {
      out << std::setw(11) << 100.0 * *f.corrected_accuracy << "  " << std::setw(9)
          << f.improvement_points();
    } else {
      out << std::setw(11) << "n/a" << "  " << std::setw(9) << "n/a";
    }
    out << '\n';
  }
  out << "mean  " << std::setw(6) << "" << "  " << std::setw(7) << "" << "  "
      << std::setw(6) << 100.0 * report.mean_raw_accuracy << "  ";
  if (report.mean_corrected_accuracy) {
    out << std::setw(11) << 100.0 * *report.mean_corrected_accuracy << "  "
        << std::setw(9)
        << 100.0 * (*report.mean_corrected_accuracy - report.mean_raw_accuracy);
  } else {
    out << std::setw(11) << "n/a";
  }
  out << '\n';
  return out.str();
}

json read_json(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

}  // namespace waltz::io
