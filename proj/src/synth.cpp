#include "blendfit/synth.hpp"

#include "blendfit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace blendfit::synth {

namespace {

constexpr std::size_t kNose = 1;
constexpr std::size_t kEyeLeft = 263;
constexpr std::size_t kEyeRight = 33;

}  // namespace

void SyntheticFaceSpec::validate() const {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
    throw Error(ErrorCode::InvalidArgument, "noise sigma must be finite and >= 0");
  }
  for (const auto& p : neutral) {
    if (!p.allFinite()) throw Error(ErrorCode::NonFiniteValue, "neutral layout has a non-finite point");
  }
  for (std::size_t c = 0; c < motion.size(); ++c) {
    const auto& m = motion[c];
    if (!(m.exponent > 0.0) || !std::isfinite(m.exponent)) {
      throw Error(ErrorCode::InvalidArgument, "motion exponent must be positive");
    }
    for (const auto& e : m.elements) {
      if (e.landmark >= neutral.size()) {
        throw Error(ErrorCode::IndexOutOfRange,
                    std::string(name_of(blendshape_at(c))) + " moves landmark " +
                        std::to_string(e.landmark) + " of " + std::to_string(neutral.size()));
      }
      if (!std::isfinite(e.gain) || !e.direction.allFinite()) {
        throw Error(ErrorCode::InvalidArgument, "motion gain and direction must be finite");
      }
    }
  }
}

SyntheticFaceSpec default_face_spec(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SyntheticFaceSpec spec;
  spec.neutral.resize(kDefaultPointCount);
  for (auto& p : spec.neutral) {
    // rejection-sample the unit disc, then stretch to a face-shaped ellipse
    double u = 0.0;
    double v = 0.0;
    do {
      u = unit(rng);
      v = unit(rng);
    } while (u * u + v * v > 1.0);
    p = Vec3(0.5 + 0.2 * u, 0.5 + 0.27 * v, 0.05 * unit(rng));
  }
  spec.neutral[kNose] = Vec3(0.5, 0.55, -0.05);
  spec.neutral[kEyeLeft] = Vec3(0.62, 0.42, 0.0);
  spec.neutral[kEyeRight] = Vec3(0.38, 0.42, 0.0);

  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < kDefaultPointCount; ++i) {
    if (i != kNose && i != kEyeLeft && i != kEyeRight) pool.push_back(i);
  }
  std::shuffle(pool.begin(), pool.end(), rng);

  std::uniform_real_distribution<double> gain(0.015, 0.03);
  std::size_t next = 0;
  for (std::size_t c = 0; c < kBlendshapeCount; ++c) {
    if (blendshape_at(c) == BlendshapeName::TongueOut) continue;
    auto& m = spec.motion[c];
    for (std::size_t k = 0; k < kDefaultMotionLandmarks; ++k) {
      Vec3 dir(gauss(rng), gauss(rng), 0.3 * gauss(rng));
      dir.normalize();
      m.elements.push_back({pool[next++], dir, gain(rng)});
    }
  }
  return spec;
}

Driver zero_driver() {
  return [](std::size_t, double) { return BlendshapeWeights{}; };
}

Driver ramp_driver(BlendshapeName channel, std::size_t steps) {
  if (steps < 2) throw Error(ErrorCode::InvalidArgument, "ramp needs at least 2 steps");
  return [channel, steps](std::size_t i, double) {
    BlendshapeWeights w{};
    w[index_of(channel)] = static_cast<double>(i % steps) / static_cast<double>(steps - 1);
    return w;
  };
}

Driver sequential_ramp_driver(std::vector<BlendshapeName> channels, std::size_t steps) {
  if (steps < 2) throw Error(ErrorCode::InvalidArgument, "ramp needs at least 2 steps");
  if (channels.empty()) throw Error(ErrorCode::InvalidArgument, "no channels to ramp");
  return [channels = std::move(channels), steps](std::size_t i, double) {
    BlendshapeWeights w{};
    const auto which = (i / steps) % channels.size();
    w[index_of(channels[which])] = static_cast<double>(i % steps) / static_cast<double>(steps - 1);
    return w;
  };
}

Driver sine_driver(BlendshapeName channel, double period_s, double amplitude) {
  if (!(amplitude > 0.0 && amplitude <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "sine amplitude must lie in (0, 1]");
  }
  if (!(period_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "sine period must be positive");
  return [channel, period_s, amplitude](std::size_t, double t) {
    BlendshapeWeights w{};
    const double s = std::sin(std::numbers::pi * t / period_s);
    w[index_of(channel)] = std::clamp(amplitude * s * s, 0.0, 1.0);
    return w;
  };
}

Generated generate(const SyntheticFaceSpec& spec, const Driver& driver, std::size_t frames, double fps,
                   std::uint64_t seed) {
  spec.validate();
  if (frames < 1) throw Error(ErrorCode::InvalidArgument, "frames must be >= 1");
  if (!(fps > 0.0)) throw Error(ErrorCode::InvalidArgument, "fps must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  Generated out;
  out.landmarks.header.points = spec.neutral.size();
  out.landmarks.header.fps_hint = fps;
  out.landmarks.frames.reserve(frames);
  out.targets.frames.reserve(frames);

  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < frames; ++i) {
    const double t_ms = static_cast<double>(i) * 1000.0 / fps;
    const auto ts = static_cast<TimestampMs>(std::llround(t_ms));
    const auto w = driver(i, t_ms / 1000.0);

    pts = spec.neutral;
    for (std::size_t c = 0; c < kBlendshapeCount; ++c) {
      if (w[c] == 0.0) continue;
      const auto& m = spec.motion[c];
      const double a = m.exponent == 1.0 ? w[c] : std::pow(w[c], m.exponent);
      for (const auto& e : m.elements) pts[e.landmark] += a * e.gain * e.direction;
    }
    if (spec.noise_sigma > 0.0) {
      for (auto& p : pts) {
        p.x() += spec.noise_sigma * noise(rng);
        p.y() += spec.noise_sigma * noise(rng);
        if (spec.noise_z) p.z() += spec.noise_sigma * noise(rng);
      }
    }
    out.landmarks.frames.emplace_back(ts, pts);
    out.targets.frames.emplace_back(ts, w);
  }
  return out;
}

}  // namespace blendfit::synth
