#include "waltz/figure.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace waltz {
namespace {

struct Names {
  std::string_view short_name;
  std::string_view full_name;
};

constexpr std::array<Names, kNumFigures> kNames{{
    {"BL", "Back Lock (BL)"},
    {"BW", "Back Whisk (BW)"},
    {"CTR", "Chasse to Right (CTR)"},
    {"DR", "Double Reverse (DR)"},
    {"LCC", "Left-foot Closed Change (LCC)"},
    {"N1", "Natural Turn 1-3 (N1)"},
    {"N2", "Natural Turn 4-6 (N2)"},
    {"NST", "Natural Spin Turn (NST)"},
    {"OC", "Outside Change (OC)"},
    {"PC", "Chasse from Promenade (PC)"},
    {"R1", "Reverse Turn 1-3 (R1)"},
    {"R2", "Reverse Turn 4-6 (R2)"},
    {"RC", "Reverse Corte (RC)"},
    {"RCC", "Right-foot Closed Change (RCC)"},
    {"W", "Whisk (W)"},
    {"Weave", "Basic Weave (Weave)"},
}};

constexpr std::array<std::string_view, kNumAxes> kAxisNames{
    "lin_acc_x", "lin_acc_y", "lin_acc_z", "yaw"};

}  // namespace

FigureLabel::FigureLabel(int index) : index_(index) {
  if (index < 0 || index >= kNumFigures) {
    throw UnknownLabel("figure index out of range: " + std::to_string(index));
  }
}

std::string_view FigureLabel::short_name() const {
  return kNames[index_].short_name;
}

std::string_view FigureLabel::full_name() const {
  return kNames[index_].full_name;
}

FigureLabel FigureLabel::from_short_name(std::string_view name) {
  for (int i = 0; i < kNumFigures; ++i) {
    if (kNames[i].short_name == name) return FigureLabel(i);
  }
  throw UnknownLabel("unknown figure short name: '" + std::string(name) + "'");
}

std::array<FigureLabel, kNumFigures> FigureLabel::all() {
  std::array<FigureLabel, kNumFigures> out;
  for (int i = 0; i < kNumFigures; ++i) out[i] = FigureLabel(i);
  return out;
}

FigureLabel label_from_short_name(std::string_view name) {
  return FigureLabel::from_short_name(name);
}

std::string_view axis_name(Axis axis) {
  return kAxisNames[static_cast<int>(axis)];
}

Axis axis_from_name(std::string_view name) {
  for (int a = 0; a < kNumAxes; ++a) {
    if (kAxisNames[a] == name) return static_cast<Axis>(a);
  }
  throw SchemaError("unknown axis: '" + std::string(name) + "'");
}

ProbVector::ProbVector() : p_(Vector16::Constant(1.0 / kNumFigures)) {}

ProbVector::ProbVector(const Vector16& p) : p_(p) {
  if (!p_.allFinite() || (p_.array() < 0.0).any()) {
    throw InvalidDistribution("probabilities must be finite and non-negative");
  }
  const double sum = p_.sum();
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw InvalidDistribution("probabilities sum to " + std::to_string(sum));
  }
}

ProbVector ProbVector::normalized(const Vector16& weights) {
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw InvalidDistribution("weights must be finite and non-negative");
  }
  const double sum = weights.sum();
  if (!(sum > 0.0)) throw InvalidDistribution("weights sum to zero");
  return ProbVector(weights / sum);
}

ProbVector ProbVector::one_hot(FigureLabel label) {
  Vector16 p = Vector16::Zero();
  p[label.index()] = 1.0;
  return ProbVector(p);
}

FigureLabel argmax_label(const ProbVector& p) {
  int best = 0;
  for (int i = 1; i < kNumFigures; ++i) {
    if (p[i] > p[best]) best = i;
  }
  return FigureLabel(best);
}

FigureSample::FigureSample(const SampleMatrix& v, std::optional<FigureLabel> l)
    : values(v), label(l) {
  if (!values.allFinite()) {
    throw InvalidSample("figure sample contains non-finite values");
  }
}

std::vector<FigureLabel> DanceSequence::labels() const {
  std::vector<FigureLabel> out;
  out.reserve(figures.size());
  for (std::size_t i = 0; i < figures.size(); ++i) {
    if (!figures[i].label) {
      throw InvalidSample("dance '" + id + "' position " + std::to_string(i) +
                          " has no label");
    }
    out.push_back(*figures[i].label);
  }
  return out;
}

bool DanceSequence::fully_labeled() const {
  return std::all_of(figures.begin(), figures.end(),
                     [](const FigureSample& f) { return f.label.has_value(); });
}

void Dataset::validate() const {
  std::set<std::string, std::less<>> seen;
  for (const auto& d : dances) {
    if (d.figures.empty()) {
      throw SchemaError("dance '" + d.id + "' has no figures");
    }
    if (!seen.insert(d.id).second) {
      throw SchemaError("duplicate dance id '" + d.id + "'");
    }
  }
}

std::size_t Dataset::figure_count() const {
  std::size_t n = 0;
  for (const auto& d : dances) n += d.figures.size();
  return n;
}

const DanceSequence& Dataset::find(std::string_view id) const {
  for (const auto& d : dances) {
    if (d.id == id) return d;
  }
  throw SchemaError("no dance with id '" + std::string(id) + "'");
}

}  // namespace waltz
