#include "waltz/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "waltz/figure_hmm.hpp"
#include "waltz/parallel.hpp"

namespace waltz {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct FoldOutput {
  FoldResult result;
  ConfusionMatrix raw;
  ConfusionMatrix corrected;
  std::vector<DancePrediction> predictions;
};

std::vector<std::vector<ProbVector>> fold_posteriors(
    const PipelineConfig& config, int fold,
    std::span<const DanceSequence> training,
    std::span<const DanceSequence> testing) {
  std::vector<std::vector<ProbVector>> out;
  out.reserve(testing.size());
  switch (config.classifier) {
    case ClassifierKind::FeedForward: {
      std::vector<FigureSample> samples;
      for (const auto& d : training) {
        samples.insert(samples.end(), d.figures.begin(), d.figures.end());
      }
      ClassifierConfig network = config.network;
      network.spec.seed = splitmix64(config.seed ^ splitmix64(fold));
      const auto model = train_classifier(samples, network);
      for (const auto& d : testing) out.push_back(predict_proba(model, d.figures));
      break;
    }
    case ClassifierKind::Oracle:
      for (const auto& d : testing) {
        std::vector<ProbVector> p;
        for (const auto& l : d.labels()) p.push_back(ProbVector::one_hot(l));
        out.push_back(std::move(p));
      }
      break;
    case ClassifierKind::Uniform:
      for (const auto& d : testing) out.emplace_back(d.figures.size());
      break;
    case ClassifierKind::External:
      if (config.external == nullptr) {
        throw ConfigError("external classifier selected without posteriors");
      }
      for (const auto& d : testing) {
        const auto it = config.external->find(d.id);
        if (it == config.external->end()) {
          throw SchemaError("no posteriors for dance '" + d.id + "'");
        }
        if (it->second.size() != d.figures.size()) {
          throw SchemaError("dance '" + d.id + "' has " +
                            std::to_string(d.figures.size()) + " figures but " +
                            std::to_string(it->second.size()) + " posterior rows");
        }
        out.push_back(it->second);
      }
      break;
    case ClassifierKind::GaussianHmm:
      break;
  }
  return out;
}

FoldOutput run_fold(const Dataset& dataset, const FoldSpec& folds, int fold,
                    const PipelineConfig& config) {
  std::vector<DanceSequence> training;
  std::vector<DanceSequence> testing;
  for (const auto& d : dataset.dances) {
    (folds.assignments.at(d.id) == fold ? testing : training).push_back(d);
  }
  if (config.observer) config.observer(FoldContext{fold, training, testing});

  FoldOutput out;
  out.result.fold = fold;
  const TransitionMatrix transitions =
      config.transitions == TransitionSource::Trained ? trained_matrix(training)
                                                      : unbiased_matrix();

  std::vector<FigureLabel> truth_all;
  std::vector<FigureLabel> raw_all;
  std::vector<FigureLabel> corrected_all;
  if (config.classifier == ClassifierKind::GaussianHmm) {
    const auto hmm = train_figure_hmm(training, transitions, config.em);
    for (const auto& d : testing) {
      DancePrediction pred;
      pred.dance_id = d.id;
      pred.fold = fold;
      pred.truth = d.labels();
      pred.correction.raw_labels = decode_labels(hmm, d);
      pred.correction.corrected_labels = pred.correction.raw_labels;
      pred.correction.changed.assign(pred.truth.size(), false);
      truth_all.insert(truth_all.end(), pred.truth.begin(), pred.truth.end());
      raw_all.insert(raw_all.end(), pred.correction.raw_labels.begin(),
                     pred.correction.raw_labels.end());
      out.result.test_dances.push_back(d.id);
      out.predictions.push_back(std::move(pred));
    }
  } else {
    auto posteriors = fold_posteriors(config, fold, training, testing);
    for (std::size_t i = 0; i < testing.size(); ++i) {
      const auto& d = testing[i];
      DancePrediction pred;
      pred.dance_id = d.id;
      pred.fold = fold;
      pred.truth = d.labels();
      pred.posteriors = std::move(posteriors[i]);
      pred.correction =
          correct_sequence(pred.posteriors, transitions, config.correction);
      truth_all.insert(truth_all.end(), pred.truth.begin(), pred.truth.end());
      raw_all.insert(raw_all.end(), pred.correction.raw_labels.begin(),
                     pred.correction.raw_labels.end());
      corrected_all.insert(corrected_all.end(),
                           pred.correction.corrected_labels.begin(),
                           pred.correction.corrected_labels.end());
      out.result.test_dances.push_back(d.id);
      out.predictions.push_back(std::move(pred));
    }
    out.result.corrected_accuracy = accuracy(corrected_all, truth_all);
    out.corrected = confusion(corrected_all, truth_all);
  }
  out.result.figures = truth_all.size();
  out.result.raw_accuracy = accuracy(raw_all, truth_all);
  out.raw = confusion(raw_all, truth_all);
  return out;
}

}  // namespace

std::vector<std::string> FoldSpec::fold_members(int fold) const {
  std::vector<std::string> out;
  for (const auto& [id, f] : assignments) {
    if (f == fold) out.push_back(id);
  }
  return out;
}

FoldSpec make_folds(std::span<const std::string> dance_ids, std::uint64_t seed,
                    int n_folds) {
  if (n_folds < 1) throw ConfigError("fold count must be positive");
  if (static_cast<int>(dance_ids.size()) < n_folds) {
    throw TooFewDances(std::to_string(dance_ids.size()) +
                       " dances cannot fill " + std::to_string(n_folds) +
                       " folds");
  }
  std::vector<std::string> ids(dance_ids.begin(), dance_ids.end());
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw SchemaError("duplicate dance ids");
  }
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);

  FoldSpec spec;
  spec.n_folds = n_folds;
  spec.seed = seed;
  const std::size_t n = ids.size();
  const std::size_t base = n / static_cast<std::size_t>(n_folds);
  const std::size_t extra = n % static_cast<std::size_t>(n_folds);
  std::size_t next = 0;
  for (int f = 0; f < n_folds; ++f) {
    const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    for (std::size_t k = 0; k < size; ++k) spec.assignments[ids[next++]] = f;
  }
  return spec;
}

FoldSpec make_folds(const Dataset& dataset, std::uint64_t seed, int n_folds) {
  std::vector<std::string> ids;
  for (const auto& d : dataset.dances) ids.push_back(d.id);
  return make_folds(ids, seed, n_folds);
}

void ConfusionMatrix::renormalize() {
  normalized.setZero();
  for (int r = 0; r < kNumFigures; ++r) {
    const auto total = counts.row(r).sum();
    if (total > 0) {
      normalized.row(r) =
          counts.row(r).cast<double>() / static_cast<double>(total);
    }
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  counts += other.counts;
  renormalize();
  return *this;
}

ConfusionMatrix confusion(std::span<const FigureLabel> predicted,
                          std::span<const FigureLabel> truth) {
  if (predicted.size() != truth.size()) {
    throw LengthMismatch("prediction and truth lengths differ: " +
                         std::to_string(predicted.size()) + " vs " +
                         std::to_string(truth.size()));
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], predicted[i]);
  cm.renormalize();
  return cm;
}

double accuracy(std::span<const FigureLabel> predicted,
                std::span<const FigureLabel> truth) {
  if (predicted.size() != truth.size()) {
    throw LengthMismatch("prediction and truth lengths differ");
  }
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::string_view classifier_name(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::FeedForward: return "feedforward";
    case ClassifierKind::GaussianHmm: return "ghmm";
    case ClassifierKind::Oracle: return "oracle";
    case ClassifierKind::Uniform: return "uniform";
    case ClassifierKind::External: return "external";
  }
  return "unknown";
}

ClassifierKind classifier_from_name(std::string_view name) {
  for (auto kind : {ClassifierKind::FeedForward, ClassifierKind::GaussianHmm,
                    ClassifierKind::Oracle, ClassifierKind::Uniform,
                    ClassifierKind::External}) {
    if (classifier_name(kind) == name) return kind;
  }
  throw ConfigError("unknown classifier '" + std::string(name) +
                    "' (expected feedforward, ghmm, oracle, uniform, external)");
}

std::vector<double> EvalReport::improvements() const {
  std::vector<double> out;
  for (const auto& f : folds) out.push_back(f.improvement_points());
  return out;
}

EvalReport run_cv(const Dataset& dataset, const PipelineConfig& config) {
  dataset.validate();
  for (const auto& d : dataset.dances) {
    if (!d.fully_labeled()) {
      throw InvalidSample("dance '" + d.id + "' is not fully labelled");
    }
  }
  const FoldSpec folds = make_folds(dataset, config.seed, config.n_folds);
  std::vector<FoldOutput> outputs(static_cast<std::size_t>(config.n_folds));
  parallel_for(outputs.size(), config.jobs, [&](std::size_t f) {
    try {
      outputs[f] = run_fold(dataset, folds, static_cast<int>(f), config);
    } catch (const InputError& e) {
      throw InputError("fold " + std::to_string(f) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("fold " + std::to_string(f) + ": " + e.what());
    }
  });

  EvalReport report;
  report.classifier = std::string(classifier_name(config.classifier));
  report.seed = config.seed;
  const bool corrected = config.classifier != ClassifierKind::GaussianHmm;
  if (corrected) report.confusion_corrected.emplace();
  double raw_sum = 0.0;
  double corrected_sum = 0.0;
  for (auto& out : outputs) {
    raw_sum += out.result.raw_accuracy;
    report.confusion_raw += out.raw;
    if (corrected) {
      corrected_sum += *out.result.corrected_accuracy;
      *report.confusion_corrected += out.corrected;
    }
    report.folds.push_back(std::move(out.result));
    for (auto& p : out.predictions) report.predictions.push_back(std::move(p));
  }
  const double n = static_cast<double>(report.folds.size());
  report.mean_raw_accuracy = raw_sum / n;
  if (corrected) report.mean_corrected_accuracy = corrected_sum / n;
  return report;
}

ImprovementStats improvement_stats(std::span<const double> improvements) {
  ImprovementStats stats;
  if (improvements.empty()) return stats;
  stats.mean = std::accumulate(improvements.begin(), improvements.end(), 0.0) /
               static_cast<double>(improvements.size());
  const auto [lo, hi] = std::minmax_element(improvements.begin(), improvements.end());
  stats.min = *lo;
  stats.max = *hi;
  for (double v : improvements) {
    // Nudge so values like 3.9999999999 from accuracy differences land in bin 4.
    stats.histogram[static_cast<int>(std::floor(v + 1e-9))] += 1;
  }
  return stats;
}

ImprovementStats improvement_stats(const EvalReport& report) {
  return improvement_stats(report.improvements());
}

}  // namespace waltz
