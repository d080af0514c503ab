#pragma once

#include "blendfit/core.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace blendfit::features {

/// Upper bound reported by f_regression_scores for a perfect fit.
inline constexpr double kFMax = 1e12;
inline constexpr double kDefaultPercentile = 0.02;

enum class SelectionMethod { Correlation, FRegression };

/// The 0/1 segmentation matrix in sparse form: which landmarks feed one
/// blendshape, with the score that selected each.
struct FeatureSelector {
  BlendshapeName blendshape = BlendshapeName::EyeBlinkLeft;
  std::vector<std::size_t> indices;  // distinct, ascending
  std::vector<double> scores;
  SelectionMethod method = SelectionMethod::Correlation;

  /// Throws InvalidArgument / IndexOutOfRange on broken invariants.
  void validate(std::size_t point_count) const;
  friend bool operator==(const FeatureSelector&, const FeatureSelector&) = default;
};

/// Precomputes centered landmark coordinates of a normalized frame set so
/// that many targets can be scored against the same frames cheaply.
class LandmarkScorer {
 public:
  /// Throws InsufficientSamples for fewer than 3 frames, PointCountMismatch
  /// for frames of differing size.
  explicit LandmarkScorer(std::span<const LandmarkFrame> frames);

  std::size_t point_count() const noexcept { return point_count_; }
  std::size_t sample_count() const noexcept { return static_cast<std::size_t>(centered_.rows()); }

  /// max over axes of |Pearson r|; zero-variance landmarks score 0.
  std::vector<double> correlation(std::span<const double> targets) const;
  /// max over axes of r^2 (n-2) / (1-r^2), capped at kFMax.
  std::vector<double> f_regression(std::span<const double> targets) const;

 private:
  // Per landmark-axis |r| with perfect fits snapped to exactly 1.
  Eigen::VectorXd abs_correlations(std::span<const double> targets) const;

  std::size_t point_count_ = 0;
  Eigen::MatrixXd centered_;      // samples x (3 * points)
  Eigen::VectorXd column_norms_;  // sqrt of centered sum of squares
};

std::vector<double> correlation_map(std::span<const LandmarkFrame> frames,
                                    std::span<const double> targets);
std::vector<double> f_regression_scores(std::span<const LandmarkFrame> frames,
                                        std::span<const double> targets);

/// Keeps k = ceil(percentile * N) highest-scoring landmarks; ties go to the
/// lower index. Throws InvalidArgument unless 0 < percentile < 1.
FeatureSelector select_top_percentile(std::span<const double> scores, double percentile,
                                      BlendshapeName blendshape,
                                      SelectionMethod method = SelectionMethod::Correlation);

/// Equivalent to multiplying the frame by the segmentation matrix.
std::vector<Vec3> apply_selection(const LandmarkFrame& frame, const FeatureSelector& sel);

/// Selected points flattened as [x0 y0 z0 x1 y1 z1 ...].
Eigen::VectorXd flatten_selection(const LandmarkFrame& frame, const FeatureSelector& sel);

}  // namespace blendfit::features
