// waltz: command-line front end for the figure recognition pipeline.
//
// Exit codes: 0 success, 2 usage error, 3 bad input, 4 runtime failure.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "waltz/classifier.hpp"
#include "waltz/correction.hpp"
#include "waltz/eval.hpp"
#include "waltz/figure_hmm.hpp"
#include "waltz/ingest.hpp"
#include "waltz/io.hpp"
#include "waltz/parallel.hpp"
#include "waltz/synthgen.hpp"
#include "waltz/text.hpp"
#include "waltz/transitions.hpp"

namespace fs = std::filesystem;
using namespace waltz;
using io::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr const char* kConfigDirEnv = "WALTZ_CONFIG_DIR";

enum ExitCode { kOk = 0, kUsage = 2, kInput = 3, kRuntime = 4 };

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = "out";
  int jobs = 1;
};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Records how an output directory was produced. Everything except the
/// timestamp is a function of the flags and inputs.
class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& argv, const Common& c)
      : command_(std::move(command)), argv_(argv), common_(c) {}

  void input(const fs::path& p) { inputs_.push_back(p.generic_string()); }
  void output(const fs::path& p) { outputs_.push_back(p.generic_string()); }
  void set(const std::string& key, json value) { extra_[key] = std::move(value); }

  void write(const fs::path& dir) const {
    json j{{"command", command_},
           {"argv", argv_},
           {"config", common_.config.empty() ? json(nullptr) : json(common_.config)},
           {"seed", common_.seed ? json(*common_.seed) : json(nullptr)},
           {"jobs", common_.jobs},
           {"inputs", inputs_},
           {"outputs", outputs_},
           {"tool_version", kToolVersion},
           {"timestamp", utc_timestamp()}};
    for (const auto& [k, v] : extra_.items()) j[k] = v;
    io::write_json(dir / (command_ + ".manifest.json"), j);
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  Common common_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  json extra_ = json::object();
};

template <typename Fn>
void write_file(Manifest& manifest, const fs::path& path, Fn&& fn) {
  auto out = io::open_output(path);
  fn(out);
  out.close();
  if (!out) throw Error("failed writing " + path.string());
  manifest.output(path);
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Seed for all randomness");
  sub->add_option("--config", c.config, "Config file");
  sub->add_option("--out", c.out, "Output directory")->capture_default_str();
  sub->add_option("--jobs", c.jobs, "Worker thread cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

/// Flags read from a `key = value` file given by --config; command-line
/// values win. Keys are long flag names without the dashes.
void apply_flag_file(CLI::App& sub, const std::string& path) {
  if (path.empty()) return;
  auto in = io::open_input(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string_view body = text::trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(text::trim(body.substr(0, eq)));
    const std::string value(text::trim(body.substr(eq + 1)));
    CLI::Option* opt = nullptr;
    try {
      opt = sub.get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (opt->count() > 0 || key == "config") continue;
    try {
      if (opt->get_expected_min() == 0) {
        if (value == "true" || value == "1") opt->add_result("true");
      } else {
        opt->add_result(value);
      }
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": field " + key + ": " +
                        e.what());
    }
  }
}

TransitionMatrix load_matrix(const std::string& spec, Manifest& manifest) {
  if (spec.empty() || spec == "unbiased") return unbiased_matrix();
  manifest.input(spec);
  return io::transition_matrix_from_json(io::read_json(spec));
}

Dataset load_samples(const std::string& path, Manifest& manifest) {
  manifest.input(path);
  Dataset data = io::read_samples(fs::path(path));
  data.validate();
  return data;
}

std::vector<FigureSample> all_figures(const Dataset& data) {
  std::vector<FigureSample> out;
  for (const auto& d : data.dances) out.insert(out.end(), d.figures.begin(), d.figures.end());
  return out;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::optional<int> dances;
  bool ideal = true;
};

SynthConfig resolve_synth_config(const Common& c) {
  if (!c.config.empty()) return load_synth_config(c.config);
  if (const char* dir = std::getenv(kConfigDirEnv)) {
    const fs::path candidate = fs::path(dir) / "default_synth.conf";
    if (fs::exists(candidate)) return load_synth_config(candidate);
  }
  return default_synth_config();
}

void cmd_simulate(const Common& c, const SimulateArgs& a, Manifest& manifest) {
  SynthConfig config = resolve_synth_config(c);
  if (c.seed) config.seed = *c.seed;
  if (a.dances) config.dances = *a.dances;
  config.validate();
  manifest.set("effective_seed", config.seed);

  const fs::path out = c.out;
  std::vector<SyntheticDance> dances(static_cast<std::size_t>(config.dances));
  parallel_for(dances.size(), c.jobs,
               [&](std::size_t i) { dances[i] = gen_dance(config, i); });

  std::vector<io::DanceEntry> entries;
  Dataset ideal;
  for (auto& d : dances) {
    const fs::path rel = fs::path("logs") / (d.ideal.id + ".csv");
    write_file(manifest, out / rel, [&](std::ostream& s) { write_log(s, d.log); });
    entries.push_back(io::DanceEntry{d.ideal.id, config.tempo_bpm, config.intro_s,
                                     static_cast<int>(d.ideal.figures.size()),
                                     rel.generic_string()});
    ideal.dances.push_back(std::move(d.ideal));
  }
  write_file(manifest, out / "dances.csv",
             [&](std::ostream& s) { io::write_dances(s, entries); });
  write_file(manifest, out / "labels.csv",
             [&](std::ostream& s) { io::write_labels(s, ideal); });
  if (a.ideal) {
    write_file(manifest, out / "ideal_samples.csv",
               [&](std::ostream& s) { io::write_samples(s, ideal); });
  }
  write_file(manifest, out / "transition_matrix.json", [&](std::ostream& s) {
    s << io::to_json(config.transitions).dump(2) << '\n';
  });
  std::cout << "simulated " << config.dances << " dances into " << out.string() << '\n';
}

// ------------------------------------------------------------------ ingest

struct IngestArgs {
  std::vector<std::string> logs;
  std::string dances;
  std::string labels;
  double tempo = 28.5;
  double intro = 0.0;
  int figures = 0;
  double extension = 0.35;
  std::int64_t origin_ns = 0;
  bool no_unwrap = false;
};

void cmd_ingest(const Common& c, const IngestArgs& a, Manifest& manifest) {
  struct Job {
    std::string id;
    fs::path log;
    SegmentationSpec spec;
  };
  std::vector<Job> jobs;
  SegmentationSpec base;
  base.tempo_bpm = a.tempo;
  base.intro_s = a.intro;
  base.n_figures = a.figures;
  base.extension_s = a.extension;
  base.origin_ns = a.origin_ns;

  if (!a.dances.empty()) {
    manifest.input(a.dances);
    const fs::path root = fs::path(a.dances).parent_path();
    for (const auto& e : io::read_dances(a.dances)) {
      SegmentationSpec spec = base;
      spec.tempo_bpm = e.tempo_bpm;
      spec.intro_s = e.intro_s;
      spec.n_figures = e.n_figures;
      jobs.push_back(Job{e.id, root / e.log_file, spec});
    }
  }
  for (const auto& log : a.logs) {
    if (a.figures <= 0) throw ConfigError("--figures is required when ingesting log files");
    jobs.push_back(Job{fs::path(log).stem().string(), log, base});
  }
  if (jobs.empty()) throw ConfigError("nothing to ingest: pass log files or --dances");

  std::optional<io::LabelTable> labels;
  if (!a.labels.empty()) {
    manifest.input(a.labels);
    labels = io::read_labels(fs::path(a.labels));
  }

  Dataset data;
  data.dances.resize(jobs.size());
  const IngestOptions options{!a.no_unwrap, 1};
  parallel_for(jobs.size(), c.jobs, [&](std::size_t i) {
    const auto& job = jobs[i];
    try {
      job.spec.validate();
      auto& d = data.dances[i];
      d.id = job.id;
      d.tempo_bpm = job.spec.tempo_bpm;
      d.intro_s = job.spec.intro_s;
      d.figures = ingest(parse_log(job.log), job.spec, options);
    } catch (const InputError& e) {
      throw InputError(job.log.string() + ": " + e.what());
    }
  });
  for (const auto& j : jobs) manifest.input(j.log);
  if (labels) {
    for (auto& d : data.dances) {
      const auto it = labels->find(d.id);
      if (it == labels->end()) continue;
      if (it->second.size() != d.figures.size()) {
        throw LengthMismatch("dance '" + d.id + "': " + std::to_string(it->second.size()) +
                             " labels for " + std::to_string(d.figures.size()) +
                             " figures");
      }
      for (std::size_t k = 0; k < d.figures.size(); ++k) d.figures[k].label = it->second[k];
    }
  }
  data.validate();
  write_file(manifest, fs::path(c.out) / "samples.csv",
             [&](std::ostream& s) { io::write_samples(s, data); });
  std::cout << "ingested " << data.dances.size() << " dances, " << data.figure_count()
            << " figures\n";
}

// --------------------------------------------------------------- train-hmm

struct HmmArgs {
  std::string samples;
  std::string transitions = "trained";
  int max_iters = 100;
  double tol = 1e-4;
  bool freeze_transitions = false;
};

TransitionSource parse_source(const std::string& s) {
  if (s == "trained") return TransitionSource::Trained;
  if (s == "unbiased") return TransitionSource::Unbiased;
  throw ConfigError("--transitions must be 'trained' or 'unbiased', got '" + s + "'");
}

void cmd_train_hmm(const Common& c, const HmmArgs& a, Manifest& manifest) {
  const Dataset data = load_samples(a.samples, manifest);
  const TransitionMatrix transitions = parse_source(a.transitions) == TransitionSource::Trained
                                           ? trained_matrix(data.dances)
                                           : unbiased_matrix();
  const FigureHmm hmm = train_figure_hmm(
      data.dances, transitions, EmOptions{a.max_iters, a.tol, a.freeze_transitions});
  write_file(manifest, fs::path(c.out) / "hmm.json",
             [&](std::ostream& s) { s << io::to_json(hmm).dump(2) << '\n'; });
  std::cout << "EM iterations: " << hmm.log_likelihood_trace.size() - 1
            << ", final log-likelihood " << hmm.log_likelihood_trace.back() << '\n';
}

// ---------------------------------------------------------------- train-nn

struct NetArgs {
  int depth = 2;
  int width = 64;
  int epochs = 150;
  int batch = 32;
  double lr = 1e-3;
};

void add_net_flags(CLI::App* sub, NetArgs& n) {
  sub->add_option("--depth", n.depth, "Hidden layers")->capture_default_str();
  sub->add_option("--width", n.width, "Units per hidden layer")->capture_default_str();
  sub->add_option("--epochs", n.epochs, "Training epochs")->capture_default_str();
  sub->add_option("--batch", n.batch, "Minibatch size")->capture_default_str();
  sub->add_option("--lr", n.lr, "Adam step size")->capture_default_str();
}

ClassifierConfig network_config(const NetArgs& n, std::uint64_t seed) {
  ClassifierConfig config;
  config.spec.depth = n.depth;
  config.spec.width = n.width;
  config.spec.seed = seed;
  config.train.epochs = n.epochs;
  config.train.batch_size = n.batch;
  config.train.adam.alpha = n.lr;
  return config;
}

struct TrainNnArgs {
  std::string samples;
  std::string predict;
  NetArgs net;
};

PosteriorTable posterior_table(const FigureClassifier& model, const Dataset& data) {
  PosteriorTable table;
  for (const auto& d : data.dances) table[d.id] = predict_proba(model, d.figures);
  return table;
}

void cmd_train_nn(const Common& c, const TrainNnArgs& a, Manifest& manifest) {
  const Dataset data = load_samples(a.samples, manifest);
  const auto samples = all_figures(data);
  const auto model = train_classifier(samples, network_config(a.net, c.seed.value_or(1)));
  const fs::path out = c.out;
  write_file(manifest, out / "classifier.json",
             [&](std::ostream& s) { s << io::to_json(model).dump(2) << '\n'; });
  if (!a.predict.empty()) {
    const Dataset target = load_samples(a.predict, manifest);
    write_file(manifest, out / "posteriors.csv", [&](std::ostream& s) {
      io::write_posteriors(s, posterior_table(model, target));
    });
  }
  std::cout << "trained on " << samples.size() << " figures, final loss "
            << model.epoch_loss.back() << '\n';
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
  std::string samples;
  std::string classifier = "feedforward";
  std::string posteriors;
  std::string transitions = "trained";
  int folds = kDefaultFolds;
  bool chained = false;
  int max_iters = 100;
  double tol = 1e-4;
  NetArgs net;
};

void cmd_eval(const Common& c, const EvalArgs& a, Manifest& manifest) {
  const Dataset data = load_samples(a.samples, manifest);
  PipelineConfig config;
  config.classifier = classifier_from_name(a.classifier);
  config.seed = c.seed.value_or(1);
  config.network = network_config(a.net, config.seed);
  config.em = EmOptions{a.max_iters, a.tol, false};
  config.transitions = parse_source(a.transitions);
  config.correction = a.chained ? CorrectionMode::Chained : CorrectionMode::Unchained;
  config.n_folds = a.folds;
  config.jobs = c.jobs;
  PosteriorTable external;
  if (config.classifier == ClassifierKind::External) {
    if (a.posteriors.empty()) throw ConfigError("--classifier external needs --posteriors");
    manifest.input(a.posteriors);
    external = io::read_posteriors(fs::path(a.posteriors));
    config.external = &external;
  }
  const EvalReport report = run_cv(data, config);

  const fs::path out = c.out;
  write_file(manifest, out / "report.json",
             [&](std::ostream& s) { s << io::to_json(report).dump(2) << '\n'; });
  const std::string table = io::report_table(report);
  write_file(manifest, out / "report.txt", [&](std::ostream& s) { s << table; });
  write_file(manifest, out / "confusion_raw.csv", [&](std::ostream& s) {
    io::write_confusion(s, report.confusion_raw.normalized);
  });
  if (report.confusion_corrected) {
    write_file(manifest, out / "confusion_corrected.csv", [&](std::ostream& s) {
      io::write_confusion(s, report.confusion_corrected->normalized);
    });
  }
  std::vector<std::pair<std::string, CorrectionResult>> corrections;
  PosteriorTable held_out;
  for (const auto& p : report.predictions) {
    corrections.emplace_back(p.dance_id, p.correction);
    if (!p.posteriors.empty()) held_out[p.dance_id] = p.posteriors;
  }
  std::sort(corrections.begin(), corrections.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  write_file(manifest, out / "corrections.csv",
             [&](std::ostream& s) { io::write_corrections(s, corrections); });
  if (!held_out.empty()) {
    write_file(manifest, out / "posteriors.csv",
               [&](std::ostream& s) { io::write_posteriors(s, held_out); });
  }
  std::cout << table;
}

// ----------------------------------------------------------------- correct

struct CorrectArgs {
  std::string posteriors;
  std::string matrix = "unbiased";
  bool chained = false;
  bool stream = false;
};

void cmd_correct(const Common& c, const CorrectArgs& a, Manifest& manifest) {
  manifest.input(a.posteriors);
  const PosteriorTable table = io::read_posteriors(fs::path(a.posteriors));
  const TransitionMatrix transitions = load_matrix(a.matrix, manifest);
  std::vector<std::pair<std::string, CorrectionResult>> results;
  std::size_t changed = 0;
  for (const auto& [id, rows] : table) {
    CorrectionResult r;
    if (a.stream) {
      // Lagged online replay; prints each label as soon as it is final.
      StreamingCorrector corrector(transitions);
      for (const auto& p : rows) {
        const auto update = corrector.push(p);
        if (update.final_previous) {
          std::cout << id << ' ' << corrector.result().corrected_labels.size() - 1 << ' '
                    << update.final_previous->short_name() << '\n';
        }
      }
      if (const auto last = corrector.close()) {
        std::cout << id << ' ' << rows.size() - 1 << ' ' << last->short_name() << '\n';
      }
      r = corrector.result();
    } else {
      r = correct_sequence(rows, transitions,
                           a.chained ? CorrectionMode::Chained : CorrectionMode::Unchained);
    }
    for (bool b : r.changed) changed += b;
    results.emplace_back(id, std::move(r));
  }
  write_file(manifest, fs::path(c.out) / "corrections.csv",
             [&](std::ostream& s) { io::write_corrections(s, results); });
  std::cerr << "corrected " << results.size() << " dances, " << changed
            << " labels changed\n";
}

// ------------------------------------------------------------------ report

struct ReportArgs {
  std::string report;
  std::string matrix;
  std::string labels;
};

void print_report(const json& j) {
  std::cout << std::fixed << std::setprecision(2);
  std::cout << "classifier: " << j.at("classifier").get<std::string>() << "  seed "
            << j.at("seed").get<std::uint64_t>() << '\n';
  std::cout << "fold  raw %   corrected %  delta pts\n";
  for (const auto& f : j.at("folds")) {
    std::cout << std::setw(4) << f.at("fold").get<int>() << "  " << std::setw(6)
              << 100.0 * f.at("raw_accuracy").get<double>() << "  ";
    if (f.at("corrected_accuracy").is_null()) {
      std::cout << std::setw(11) << "n/a\n";
    } else {
      std::cout << std::setw(11) << 100.0 * f.at("corrected_accuracy").get<double>() << "  "
                << std::setw(9) << f.at("improvement_points").get<double>() << '\n';
    }
  }
  std::cout << "mean raw accuracy: " << 100.0 * j.at("mean_raw_accuracy").get<double>()
            << "%\n";
  if (!j.at("mean_corrected_accuracy").is_null()) {
    std::cout << "mean corrected accuracy: "
              << 100.0 * j.at("mean_corrected_accuracy").get<double>() << "%\n";
  }
  const auto& imp = j.at("improvement");
  if (!imp.is_null()) {
    std::cout << "improvement points: mean " << imp.at("mean_points").get<double>()
              << ", min " << imp.at("min_points").get<double>() << ", max "
              << imp.at("max_points").get<double>() << '\n';
    std::cout << "improvement histogram (1-point bins):\n";
    for (const auto& [bin, count] : imp.at("histogram").items()) {
      std::cout << "  [" << std::setw(3) << bin << ", " << std::setw(3) << std::stoi(bin) + 1
                << ")  " << std::string(static_cast<std::size_t>(count.get<int>()), '#')
                << ' ' << count.get<int>() << '\n';
    }
  }
  std::cout.unsetf(std::ios::floatfield);
}

void cmd_report(const Common& c, const ReportArgs& a, Manifest& manifest) {
  if (a.report.empty() && a.matrix.empty()) {
    throw ConfigError("report needs --report and/or --matrix");
  }
  if (!a.report.empty()) {
    manifest.input(a.report);
    try {
      print_report(io::read_json(a.report));
    } catch (const json::exception& e) {
      throw SchemaError(a.report + ": " + e.what());
    }
  }
  if (!a.matrix.empty()) {
    TransitionMatrix m = unbiased_matrix();
    if (a.matrix == "trained") {
      if (a.labels.empty()) throw ConfigError("--matrix trained needs --labels");
      manifest.input(a.labels);
      Dataset data;
      for (const auto& [id, labels] : io::read_labels(fs::path(a.labels))) {
        DanceSequence d;
        d.id = id;
        for (const auto& l : labels) d.figures.emplace_back(SampleMatrix::Zero(), l);
        data.dances.push_back(std::move(d));
      }
      m = trained_matrix(data.dances);
    } else if (a.matrix != "unbiased") {
      throw ConfigError("--matrix must be 'unbiased' or 'trained'");
    }
    const fs::path out = c.out;
    write_file(manifest, out / "transition_matrix.json",
               [&](std::ostream& s) { s << io::to_json(m).dump(2) << '\n'; });
    write_file(manifest, out / "transition_matrix.csv", [&](std::ostream& s) {
      io::write_confusion(s, m.probs());
    });
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Waltz figure recognition: simulate, ingest, train, evaluate, correct"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  const std::vector<std::string> args(argv, argv + argc);

  Common common;
  SimulateArgs sim;
  IngestArgs ing;
  HmmArgs hmm;
  TrainNnArgs tnn;
  EvalArgs ev;
  CorrectArgs cor;
  ReportArgs rep;

  auto* s_sim = app.add_subcommand("simulate", "Generate a synthetic corpus");
  add_common(s_sim, common);
  s_sim->add_option("--dances", sim.dances, "Override the dance count");
  s_sim->add_flag("!--no-ideal", sim.ideal, "Skip ideal_samples.csv");

  auto* s_ing = app.add_subcommand("ingest", "Segment and downsample sensor logs");
  add_common(s_ing, common);
  s_ing->add_option("logs", ing.logs, "Log CSV files (dance id = file stem)")
      ->check(CLI::ExistingFile);
  s_ing->add_option("--dances", ing.dances, "dances.csv listing logs and tempo/intro/figures");
  s_ing->add_option("--labels", ing.labels, "labels.csv to attach");
  s_ing->add_option("--tempo", ing.tempo, "Tempo in measures per minute")->capture_default_str();
  s_ing->add_option("--intro", ing.intro, "Intro length in seconds")->capture_default_str();
  s_ing->add_option("--figures", ing.figures, "Number of figures");
  s_ing->add_option("--extension", ing.extension, "Window extension in seconds")
      ->capture_default_str();
  s_ing->add_option("--origin-ns", ing.origin_ns, "Timestamp of the song start")
      ->capture_default_str();
  s_ing->add_flag("--no-unwrap", ing.no_unwrap, "Take medians of the raw wrapped yaw");

  auto* s_hmm = app.add_subcommand("train-hmm", "Fit the Gaussian HMM");
  add_common(s_hmm, common);
  s_hmm->add_option("--samples", hmm.samples, "Labelled samples.csv")->required();
  s_hmm->add_option("--transitions", hmm.transitions, "trained or unbiased")
      ->capture_default_str();
  s_hmm->add_option("--max-iters", hmm.max_iters, "EM iteration cap")->capture_default_str();
  s_hmm->add_option("--tol", hmm.tol, "EM log-likelihood tolerance")->capture_default_str();
  s_hmm->add_flag("--freeze-transitions", hmm.freeze_transitions,
                  "Keep the transition matrix fixed during EM");

  auto* s_tnn = app.add_subcommand("train-nn", "Train the feed-forward classifier");
  add_common(s_tnn, common);
  s_tnn->add_option("--samples", tnn.samples, "Labelled samples.csv")->required();
  s_tnn->add_option("--predict", tnn.predict, "samples.csv to write posteriors for");
  add_net_flags(s_tnn, tnn.net);

  auto* s_eval = app.add_subcommand("eval", "Cross-validate a pipeline");
  add_common(s_eval, common);
  s_eval->add_option("--samples", ev.samples, "Labelled samples.csv")->required();
  s_eval->add_option("--classifier", ev.classifier,
                     "feedforward, ghmm, oracle, uniform or external")
      ->capture_default_str();
  s_eval->add_option("--posteriors", ev.posteriors, "Posterior CSV for --classifier external");
  s_eval->add_option("--transitions", ev.transitions, "trained or unbiased")
      ->capture_default_str();
  s_eval->add_option("--folds", ev.folds, "Number of folds")->capture_default_str();
  s_eval->add_flag("--chained", ev.chained, "Use corrected successors (experimental)");
  s_eval->add_option("--max-iters", ev.max_iters, "EM iteration cap")->capture_default_str();
  s_eval->add_option("--tol", ev.tol, "EM log-likelihood tolerance")->capture_default_str();
  add_net_flags(s_eval, ev.net);

  auto* s_cor = app.add_subcommand("correct", "Apply the Markov correction to posteriors");
  add_common(s_cor, common);
  s_cor->add_option("--posteriors", cor.posteriors, "Posterior CSV")->required();
  s_cor->add_option("--matrix", cor.matrix, "'unbiased' or a transition matrix JSON")
      ->capture_default_str();
  s_cor->add_flag("--chained", cor.chained, "Use corrected successors (experimental)");
  s_cor->add_flag("--stream", cor.stream, "Replay as a one-step-lagged stream");

  auto* s_rep = app.add_subcommand("report", "Summarize a report or export a matrix");
  add_common(s_rep, common);
  s_rep->add_option("--report", rep.report, "report.json from eval");
  s_rep->add_option("--matrix", rep.matrix, "Export 'unbiased' or 'trained' matrix");
  s_rep->add_option("--labels", rep.labels, "labels.csv for --matrix trained");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  Manifest manifest(sub->get_name(), args, common);
  try {
    if (sub != s_sim) apply_flag_file(*sub, common.config);
    if (sub == s_sim) cmd_simulate(common, sim, manifest);
    else if (sub == s_ing) cmd_ingest(common, ing, manifest);
    else if (sub == s_hmm) cmd_train_hmm(common, hmm, manifest);
    else if (sub == s_tnn) cmd_train_nn(common, tnn, manifest);
    else if (sub == s_eval) cmd_eval(common, ev, manifest);
    else if (sub == s_cor) cmd_correct(common, cor, manifest);
    else if (sub == s_rep) cmd_report(common, rep, manifest);
    manifest.write(common.out);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kOk;
}
