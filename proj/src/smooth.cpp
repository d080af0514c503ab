#include "blendfit/smooth.hpp"

#include "blendfit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace blendfit::smooth {

std::string_view kind_name(SmootherKind k) noexcept {
  switch (k) {
    case SmootherKind::None: return "none";
    case SmootherKind::GatedMa: return "gated_ma";
    case SmootherKind::Ma: return "ma";
    case SmootherKind::Ewma: return "ewma";
    case SmootherKind::Lowpass: return "lowpass";
    case SmootherKind::Kalman: return "kalman";
  }
  return "none";
}

std::optional<SmootherKind> parse_kind(std::string_view text) noexcept {
  for (auto k : {SmootherKind::None, SmootherKind::GatedMa, SmootherKind::Ma, SmootherKind::Ewma,
                 SmootherKind::Lowpass, SmootherKind::Kalman}) {
    if (kind_name(k) == text) return k;
  }
  return std::nullopt;
}

void SmootherConfig::validate() const {
  switch (kind) {
    case SmootherKind::GatedMa:
    case SmootherKind::Ma:
      if (window < 1) throw Error(ErrorCode::InvalidArgument, "smoother window must be >= 1");
      if (kind == SmootherKind::GatedMa && window < 2) {
        throw Error(ErrorCode::InvalidArgument, "gated smoother needs a window >= 2");
      }
      break;
    case SmootherKind::Ewma:
      if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "ewma alpha must lie in (0, 1]");
      }
      break;
    case SmootherKind::Lowpass:
      if (!(cutoff_hz > 0.0) || !(frame_interval_ms > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "lowpass needs positive cutoff and frame interval");
      }
      break;
    case SmootherKind::Kalman:
      if (!(process_noise > 0.0) || !(measurement_noise > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "kalman noise terms must be positive");
      }
      break;
    case SmootherKind::None:
      break;
  }
}

double SmootherConfig::lowpass_alpha() const noexcept {
  const double dt = frame_interval_ms / 1000.0;
  const double rc = 1.0 / (2.0 * std::numbers::pi * cutoff_hz);
  return dt / (rc + dt);
}

void RingBuffer::push(double v) noexcept {
  if (data_.empty()) return;
  data_[head_] = v;
  head_ = (head_ + 1) % data_.size();
  size_ = std::min(size_ + 1, data_.size());
}

SmootherState make_state(const SmootherConfig& config) {
  config.validate();
  SmootherState s;
  const bool windowed = config.kind == SmootherKind::GatedMa || config.kind == SmootherKind::Ma;
  s.buffer = RingBuffer(windowed ? config.window : 0);
  return s;
}

void reset(SmootherState& state) noexcept {
  state.buffer.clear();
  state.primed = false;
  state.accumulator = 0.0;
  state.variance = 0.0;
}

double gated_step(const SmootherConfig&, SmootherState& state, double f) {
  auto& buf = state.buffer;
  double out = f;
  if (buf.full()) {
    const std::size_t n = buf.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += buf[i];
    const double avg = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (buf[i] - avg) * (buf[i] - avg);
    const double spread = std::sqrt(ss / static_cast<double>(n - 1));
    if (avg - spread <= f && f <= avg + spread) {
      out = (f + static_cast<double>(n) * avg) / static_cast<double>(n + 1);
    }
  }
  buf.push(f);
  return out;
}

double ma_step(const SmootherConfig&, SmootherState& state, double f) {
  state.buffer.push(f);
  double sum = 0.0;
  for (std::size_t i = 0; i < state.buffer.size(); ++i) sum += state.buffer[i];
  return sum / static_cast<double>(state.buffer.size());
}

namespace {

double exponential_step(double alpha, SmootherState& state, double f) {
  if (!state.primed) {
    state.primed = true;
    state.accumulator = f;
  } else {
    state.accumulator = alpha * f + (1.0 - alpha) * state.accumulator;
  }
  return state.accumulator;
}

}  // namespace

double ewma_step(const SmootherConfig& config, SmootherState& state, double f) {
  return exponential_step(config.alpha, state, f);
}

double lowpass_step(const SmootherConfig& config, SmootherState& state, double f) {
  return exponential_step(config.lowpass_alpha(), state, f);
}

double kalman_step(const SmootherConfig& config, SmootherState& state, double f) {
  if (!state.primed) {
    state.primed = true;
    state.accumulator = f;
    state.variance = config.measurement_noise;
    return f;
  }
  const double predicted_var = state.variance + config.process_noise;
  const double gain = predicted_var / (predicted_var + config.measurement_noise);
  state.accumulator += gain * (f - state.accumulator);
  state.variance = (1.0 - gain) * predicted_var;
  return state.accumulator;
}

double step(const SmootherConfig& config, SmootherState& state, double f) {
  switch (config.kind) {
    case SmootherKind::None: return f;
    case SmootherKind::GatedMa: return gated_step(config, state, f);
    case SmootherKind::Ma: return ma_step(config, state, f);
    case SmootherKind::Ewma: return ewma_step(config, state, f);
    case SmootherKind::Lowpass: return lowpass_step(config, state, f);
    case SmootherKind::Kalman: return kalman_step(config, state, f);
  }
  return f;
}

}  // namespace blendfit::smooth
