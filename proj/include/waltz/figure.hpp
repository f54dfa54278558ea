#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "waltz/error.hpp"

namespace waltz {

inline constexpr int kNumFigures = 16;
inline constexpr int kNumAxes = 4;
inline constexpr int kNumBins = 100;

/// One of the 16 waltz figures. The index is the position of the short name
/// in alphabetical order, which is also the row/column order of every
/// transition matrix and confusion matrix in the library.
class FigureLabel {
 public:
  constexpr FigureLabel() = default;
  /// Throws UnknownLabel when index is outside [0, 15].
  explicit FigureLabel(int index);

  constexpr int index() const { return index_; }
  std::string_view short_name() const;
  std::string_view full_name() const;

  static FigureLabel from_short_name(std::string_view name);
  static std::array<FigureLabel, kNumFigures> all();

  friend constexpr bool operator==(FigureLabel, FigureLabel) = default;
  friend constexpr auto operator<=>(FigureLabel, FigureLabel) = default;

 private:
  int index_ = 0;
};

/// Shorthand for FigureLabel::from_short_name.
FigureLabel label_from_short_name(std::string_view name);

namespace figures {
// Named constants for tests and fixtures; values follow alphabetical order.
inline constexpr int BL = 0, BW = 1, CTR = 2, DR = 3, LCC = 4, N1 = 5, N2 = 6,
                     NST = 7, OC = 8, PC = 9, R1 = 10, R2 = 11, RC = 12,
                     RCC = 13, W = 14, Weave = 15;
}  // namespace figures

enum class Axis : int { LinAccX = 0, LinAccY = 1, LinAccZ = 2, Yaw = 3 };

std::string_view axis_name(Axis axis);
/// Throws SchemaError for anything but lin_acc_x, lin_acc_y, lin_acc_z, yaw.
Axis axis_from_name(std::string_view name);

using Vector16 = Eigen::Matrix<double, kNumFigures, 1>;
using Matrix16 = Eigen::Matrix<double, kNumFigures, kNumFigures>;
using Mask16 = Eigen::Matrix<bool, kNumFigures, kNumFigures>;

/// Posterior distribution over the 16 figures.
class ProbVector {
 public:
  static constexpr double kSumTolerance = 1e-9;

  /// Uniform distribution.
  ProbVector();
  /// Validates non-negativity and unit sum; throws InvalidDistribution.
  explicit ProbVector(const Vector16& p);

  /// Scales non-negative weights to unit sum. Throws InvalidDistribution
  /// when the weights are negative, non-finite or all zero.
  static ProbVector normalized(const Vector16& weights);
  static ProbVector one_hot(FigureLabel label);

  const Vector16& values() const { return p_; }
  double operator[](int i) const { return p_[i]; }
  double operator[](FigureLabel l) const { return p_[l.index()]; }

 private:
  Vector16 p_;
};

/// Label with the largest probability; ties go to the lowest index.
FigureLabel argmax_label(const ProbVector& p);

/// Row = axis (lin_acc_x, lin_acc_y, lin_acc_z, yaw), column = time bin.
/// Row-major so that the flattened view is axis-major.
using SampleMatrix =
    Eigen::Matrix<double, kNumAxes, kNumBins, Eigen::RowMajor>;

struct FigureSample {
  SampleMatrix values = SampleMatrix::Zero();
  std::optional<FigureLabel> label;

  FigureSample() = default;
  /// Throws InvalidSample for non-finite entries.
  explicit FigureSample(const SampleMatrix& v,
                        std::optional<FigureLabel> l = std::nullopt);

  /// Axis-major flattening: axis 0 bins 0..99, then axis 1, ...
  Eigen::Map<const Eigen::Matrix<double, kNumAxes * kNumBins, 1>> flat()
      const {
    return Eigen::Map<const Eigen::Matrix<double, kNumAxes * kNumBins, 1>>(
        values.data());
  }
};

struct DanceSequence {
  std::string id;
  std::vector<FigureSample> figures;
  double tempo_bpm = 28.5;
  double intro_s = 0.0;

  /// Throws InvalidSample when any figure lacks a label.
  std::vector<FigureLabel> labels() const;
  bool fully_labeled() const;
};

struct Dataset {
  std::vector<DanceSequence> dances;

  /// Throws SchemaError on empty dances or duplicate ids.
  void validate() const;
  std::size_t figure_count() const;
  const DanceSequence& find(std::string_view id) const;
};

}  // namespace waltz
