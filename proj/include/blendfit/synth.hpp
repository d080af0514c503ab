#pragma once

#include "blendfit/core.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace blendfit::synth {

/// Landmark jitter of a typical face-mesh detector, in normalized image units.
inline constexpr double kDetectorJitterSigma = 0.002;
inline constexpr std::size_t kDefaultMotionLandmarks = 8;

struct MotionElement {
  std::size_t landmark = 0;
  Vec3 direction = Vec3::UnitY();
  double gain = 0.0;
};

struct ChannelMotion {
  std::vector<MotionElement> elements;
  double exponent = 1.0;
};

/// position = neutral + sum_b w_b^exponent_b * gain * direction + noise.
struct SyntheticFaceSpec {
  std::vector<Vec3> neutral;
  std::array<ChannelMotion, kBlendshapeCount> motion;
  double noise_sigma = 0.0;
  bool noise_z = false;

  ChannelMotion& operator[](BlendshapeName n) { return motion[index_of(n)]; }
  const ChannelMotion& operator[](BlendshapeName n) const { return motion[index_of(n)]; }
  /// Throws InvalidArgument / IndexOutOfRange.
  void validate() const;
};

/// 478-point layout around the default anchors with 8 disjoint motion
/// landmarks per channel (none for TongueOut). Deterministic in `seed`.
SyntheticFaceSpec default_face_spec(std::uint64_t seed = 7);

/// Weights for frame `index` at time `t_seconds`.
using Driver = std::function<BlendshapeWeights(std::size_t index, double t_seconds)>;

Driver zero_driver();
/// Repeating sweep of one channel over {0, 1/(steps-1), ..., 1}.
Driver ramp_driver(BlendshapeName channel, std::size_t steps);
/// Sweeps each listed channel in turn, `steps` frames each, then repeats.
Driver sequential_ramp_driver(std::vector<BlendshapeName> channels, std::size_t steps);
/// amplitude * sin^2(pi t / period): starts at 0 and peaks at amplitude
/// once per period.
Driver sine_driver(BlendshapeName channel, double period_s, double amplitude);

struct Generated {
  LandmarkStream landmarks;
  BlendshapeStream targets;
};

/// Timestamps are round(i * 1000 / fps) ms. Same seed, same streams.
Generated generate(const SyntheticFaceSpec& spec, const Driver& driver, std::size_t frames, double fps,
                   std::uint64_t seed = 1);

}  // namespace blendfit::synth
