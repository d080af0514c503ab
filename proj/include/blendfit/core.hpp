#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace blendfit {

using Vec3 = Eigen::Vector3d;
using TimestampMs = std::int64_t;

inline constexpr std::size_t kDefaultPointCount = 478;
inline constexpr std::size_t kBlendshapeCount = 52;

// Canonical channel order of the 52-shape ARKit set; the numeric value is the
// channel index used in every stream and model file.
enum class BlendshapeName : std::uint8_t {
  EyeBlinkLeft,
  EyeLookDownLeft,
  EyeLookInLeft,
  EyeLookOutLeft,
  EyeLookUpLeft,
  EyeSquintLeft,
  EyeWideLeft,
  EyeBlinkRight,
  EyeLookDownRight,
  EyeLookInRight,
  EyeLookOutRight,
  EyeLookUpRight,
  EyeSquintRight,
  EyeWideRight,
  JawForward,
  JawLeft,
  JawRight,
  JawOpen,
  MouthClose,
  MouthFunnel,
  MouthPucker,
  MouthLeft,
  MouthRight,
  MouthSmileLeft,
  MouthSmileRight,
  MouthFrownLeft,
  MouthFrownRight,
  MouthDimpleLeft,
  MouthDimpleRight,
  MouthStretchLeft,
  MouthStretchRight,
  MouthRollLower,
  MouthRollUpper,
  MouthShrugLower,
  MouthShrugUpper,
  MouthPressLeft,
  MouthPressRight,
  MouthLowerDownLeft,
  MouthLowerDownRight,
  MouthUpperUpLeft,
  MouthUpperUpRight,
  BrowDownLeft,
  BrowDownRight,
  BrowInnerUp,
  BrowOuterUpLeft,
  BrowOuterUpRight,
  CheekPuff,
  CheekSquintLeft,
  CheekSquintRight,
  NoseSneerLeft,
  NoseSneerRight,
  TongueOut,
};

constexpr std::size_t index_of(BlendshapeName name) noexcept {
  return static_cast<std::size_t>(name);
}

/// Throws Error(IndexOutOfRange) for index >= 52.
BlendshapeName blendshape_at(std::size_t index);
std::string_view name_of(BlendshapeName name) noexcept;
std::optional<BlendshapeName> parse_blendshape(std::string_view text) noexcept;
const std::array<std::string_view, kBlendshapeCount>& canonical_channel_names() noexcept;

using BlendshapeWeights = std::array<double, kBlendshapeCount>;

/// One timestamped set of 3D landmark positions. Coordinates are validated
/// finite on construction and the frame is immutable afterwards.
class LandmarkFrame {
 public:
  LandmarkFrame() = default;
  LandmarkFrame(TimestampMs timestamp_ms, std::vector<Vec3> points);

  TimestampMs timestamp_ms() const noexcept { return timestamp_ms_; }
  std::span<const Vec3> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  const Vec3& operator[](std::size_t i) const { return points_[i]; }

  friend bool operator==(const LandmarkFrame&, const LandmarkFrame&) = default;

 private:
  TimestampMs timestamp_ms_ = 0;
  std::vector<Vec3> points_;
};

/// 52 weights, each validated into [0, 1] on construction.
class BlendshapeFrame {
 public:
  BlendshapeFrame() { weights_.fill(0.0); }
  BlendshapeFrame(TimestampMs timestamp_ms, const BlendshapeWeights& weights);

  TimestampMs timestamp_ms() const noexcept { return timestamp_ms_; }
  const BlendshapeWeights& weights() const noexcept { return weights_; }
  double operator[](BlendshapeName name) const noexcept { return weights_[index_of(name)]; }

  friend bool operator==(const BlendshapeFrame&, const BlendshapeFrame&) = default;

 private:
  TimestampMs timestamp_ms_ = 0;
  BlendshapeWeights weights_;
};

inline constexpr std::string_view kDefaultConvention = "norm-xy-reldepth";

struct LandmarkStreamHeader {
  std::size_t points = kDefaultPointCount;
  std::string convention{kDefaultConvention};
  std::optional<double> fps_hint;

  friend bool operator==(const LandmarkStreamHeader&, const LandmarkStreamHeader&) = default;
};

struct LandmarkStream {
  LandmarkStreamHeader header;
  std::vector<LandmarkFrame> frames;

  /// Checks point counts against the header and timestamp monotonicity.
  void validate() const;
  friend bool operator==(const LandmarkStream&, const LandmarkStream&) = default;
};

struct BlendshapeStream {
  std::vector<BlendshapeFrame> frames;

  void validate() const;
  /// Values of one channel across all frames.
  std::vector<double> channel(BlendshapeName name) const;
  friend bool operator==(const BlendshapeStream&, const BlendshapeStream&) = default;
};

}  // namespace blendfit
