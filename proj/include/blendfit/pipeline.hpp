#pragma once

#include "blendfit/core.hpp"
#include "blendfit/correction.hpp"
#include "blendfit/features.hpp"
#include "blendfit/geometry.hpp"
#include "blendfit/regress.hpp"
#include "blendfit/smooth.hpp"
#include "blendfit/transforms.hpp"

#include <Eigen/Core>

#include <array>
#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blendfit::pipeline {

inline constexpr int kFormatVersion = 1;
/// Gaps longer than this between consecutive frames clear smoother buffers.
inline constexpr TimestampMs kSmootherResetGapMs = 250;

/// Everything needed to turn a normalized frame into one blendshape weight.
struct ChannelModel {
  bool enabled = false;
  std::optional<features::FeatureSelector> selector;
  std::optional<transforms::TransformChain> chain;
  std::optional<regress::RegressorModel> regressor;
  regress::CorrectionParams correction = regress::neutral_correction();
  smooth::SmootherConfig smoother;
  /// Spearman rank agreement between correlation and F-regression scores.
  std::optional<double> selection_agreement;
  std::string note;
};

struct PipelineModel {
  int format_version = kFormatVersion;
  std::size_t point_count = kDefaultPointCount;
  geometry::AffineBasis basis;
  std::array<ChannelModel, kBlendshapeCount> channels;

  ChannelModel& operator[](BlendshapeName n) { return channels[index_of(n)]; }
  const ChannelModel& operator[](BlendshapeName n) const { return channels[index_of(n)]; }
  std::size_t enabled_count() const noexcept;
  /// Every enabled channel has all components with chained dimensions.
  void validate() const;
};

enum class Stage { AffineTransform, Segmentation, DataTransform, Regression, Smoothing };
inline constexpr std::size_t kStageCount = 5;
std::string_view stage_name(Stage s) noexcept;

/// Accumulated wall time per stage, plus the order in which stages ran.
struct StageTimings {
  std::array<std::chrono::nanoseconds, kStageCount> elapsed{};
  std::vector<Stage> order;
  std::size_t frames = 0;
};

/// Per-stream mutable state: correction and smoother state for each
/// enabled channel. Not shareable between streams.
class StreamSession {
 public:
  explicit StreamSession(const PipelineModel& model);

  void reset();
  std::optional<TimestampMs> last_timestamp() const noexcept { return last_; }
  bool has_channel(BlendshapeName n) const noexcept { return states_[index_of(n)].has_value(); }

 private:
  friend BlendshapeFrame predict_frame(const PipelineModel&, StreamSession&, const LandmarkFrame&,
                                       StageTimings*);
  struct ChannelState {
    regress::CorrectionState correction;
    smooth::SmootherState smoother;
  };
  std::array<std::optional<ChannelState>, kBlendshapeCount> states_;
  std::array<Eigen::VectorXd, kBlendshapeCount> selected_;
  std::array<Eigen::VectorXd, kBlendshapeCount> features_;
  std::array<double, kBlendshapeCount> stage_values_{};
  std::optional<TimestampMs> last_;
};

/// T_a -> S -> T_d -> R (with correction) -> F for every enabled channel;
/// disabled channels emit 0. On error (degenerate anchors, non-increasing
/// timestamp) the session is left untouched.
BlendshapeFrame predict_frame(const PipelineModel& model, StreamSession& session,
                              const LandmarkFrame& frame, StageTimings* timings = nullptr);

/// Unclamped, uncorrected, unsmoothed regressor output per channel.
std::array<std::optional<double>, kBlendshapeCount> predict_raw_frame(const PipelineModel& model,
                                                                      const LandmarkFrame& frame);

/// Copy of the model with per-run overrides applied.
PipelineModel with_overrides(PipelineModel model, const std::optional<smooth::SmootherConfig>& smoother,
                             bool neutral_correction);

// ---- training -------------------------------------------------------------

struct ChainStepSpec {
  enum class Kind { Displacement, Pcd, Standardize, Log1p, ExpScale, AspectRatio };
  Kind kind = Kind::Displacement;
  std::size_t components = 1;                                  // pcd
  double rate = 1.0;                                           // exp_scale
  std::vector<std::pair<std::size_t, std::size_t>> pairs;      // aspect_ratio, selection positions
};

std::vector<ChainStepSpec> default_chain();

struct ChannelTrainConfig {
  bool enabled = true;
  double percentile = features::kDefaultPercentile;
  regress::FamilySpec family;
  std::vector<ChainStepSpec> chain = default_chain();
  regress::CorrectionParams correction = regress::neutral_correction();
  smooth::SmootherConfig smoother;
};

struct TrainConfig {
  geometry::AffineBasis basis;
  std::size_t min_samples = 50;
  regress::FitOptions fit_options;
  std::array<ChannelTrainConfig, kBlendshapeCount> channels;

  /// All channels enabled with defaults except TongueOut.
  static TrainConfig defaults();
  ChannelTrainConfig& operator[](BlendshapeName n) { return channels[index_of(n)]; }
  const ChannelTrainConfig& operator[](BlendshapeName n) const { return channels[index_of(n)]; }
};

/// Fits selector, chain and regressor for every enabled channel. Channels
/// with too few samples or constant targets are disabled with a note.
/// Throws AlignmentFailure when the streams' timestamps differ.
PipelineModel train(const TrainConfig& config, std::span<const LandmarkFrame> landmarks,
                    std::span<const BlendshapeFrame> targets);

}  // namespace blendfit::pipeline
