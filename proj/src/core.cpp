#include "blendfit/core.hpp"

#include "blendfit/error.hpp"

#include <cmath>

namespace blendfit {

namespace {

constexpr std::array<std::string_view, kBlendshapeCount> kNames = {
    "EyeBlinkLeft",       "EyeLookDownLeft",    "EyeLookInLeft",     "EyeLookOutLeft",
    "EyeLookUpLeft",      "EyeSquintLeft",      "EyeWideLeft",       "EyeBlinkRight",
    "EyeLookDownRight",   "EyeLookInRight",     "EyeLookOutRight",   "EyeLookUpRight",
    "EyeSquintRight",     "EyeWideRight",       "JawForward",        "JawLeft",
    "JawRight",           "JawOpen",            "MouthClose",        "MouthFunnel",
    "MouthPucker",        "MouthLeft",          "MouthRight",        "MouthSmileLeft",
    "MouthSmileRight",    "MouthFrownLeft",     "MouthFrownRight",   "MouthDimpleLeft",
    "MouthDimpleRight",   "MouthStretchLeft",   "MouthStretchRight", "MouthRollLower",
    "MouthRollUpper",     "MouthShrugLower",    "MouthShrugUpper",   "MouthPressLeft",
    "MouthPressRight",    "MouthLowerDownLeft", "MouthLowerDownRight", "MouthUpperUpLeft",
    "MouthUpperUpRight",  "BrowDownLeft",       "BrowDownRight",     "BrowInnerUp",
    "BrowOuterUpLeft",    "BrowOuterUpRight",   "CheekPuff",         "CheekSquintLeft",
    "CheekSquintRight",   "NoseSneerLeft",      "NoseSneerRight",    "TongueOut",
};

static_assert(kNames.back() == "TongueOut");

}  // namespace

BlendshapeName blendshape_at(std::size_t index) {
  if (index >= kBlendshapeCount) {
    throw Error(ErrorCode::IndexOutOfRange,
                "blendshape index " + std::to_string(index) + " >= 52");
  }
  return static_cast<BlendshapeName>(index);
}

std::string_view name_of(BlendshapeName name) noexcept { return kNames[index_of(name)]; }

std::optional<BlendshapeName> parse_blendshape(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == text) return static_cast<BlendshapeName>(i);
  }
  return std::nullopt;
}

const std::array<std::string_view, kBlendshapeCount>& canonical_channel_names() noexcept {
  return kNames;
}

LandmarkFrame::LandmarkFrame(TimestampMs timestamp_ms, std::vector<Vec3> points)
    : timestamp_ms_(timestamp_ms), points_(std::move(points)) {
  if (timestamp_ms_ < 0) {
    throw Error(ErrorCode::InvalidArgument, "negative timestamp");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!points_[i].allFinite()) {
      throw Error(ErrorCode::NonFiniteValue,
                  "landmark " + std::to_string(i) + " has a non-finite coordinate");
    }
  }
}

BlendshapeFrame::BlendshapeFrame(TimestampMs timestamp_ms, const BlendshapeWeights& weights)
    : timestamp_ms_(timestamp_ms), weights_(weights) {
  if (timestamp_ms_ < 0) {
    throw Error(ErrorCode::InvalidArgument, "negative timestamp");
  }
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double w = weights_[i];
    if (!std::isfinite(w)) {
      throw Error(ErrorCode::NonFiniteValue, std::string(kNames[i]) + " weight is not finite");
    }
    if (w < 0.0 || w > 1.0) {
      throw Error(ErrorCode::WeightOutOfRange,
                  std::string(kNames[i]) + " weight " + std::to_string(w) + " outside [0,1]");
    }
  }
}

void LandmarkStream::validate() const {
  std::optional<TimestampMs> last;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    if (f.size() != header.points) {
      throw Error(ErrorCode::PointCountMismatch,
                  "frame " + std::to_string(i) + " has " + std::to_string(f.size()) +
                      " points, header declares " + std::to_string(header.points));
    }
    if (last && f.timestamp_ms() <= *last) {
      throw Error(ErrorCode::NonMonotonicTimestamp,
                  "frame " + std::to_string(i) + " timestamp " +
                      std::to_string(f.timestamp_ms()) + " not after " + std::to_string(*last));
    }
    last = f.timestamp_ms();
  }
}

void BlendshapeStream::validate() const {
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].timestamp_ms() <= frames[i - 1].timestamp_ms()) {
      throw Error(ErrorCode::NonMonotonicTimestamp,
                  "frame " + std::to_string(i) + " timestamp not increasing");
    }
  }
}

std::vector<double> BlendshapeStream::channel(BlendshapeName name) const {
  std::vector<double> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(f[name]);
  return out;
}

}  // namespace blendfit
