#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

namespace blendfit::smooth {

enum class SmootherKind { None, GatedMa, Ma, Ewma, Lowpass, Kalman };

std::string_view kind_name(SmootherKind k) noexcept;
std::optional<SmootherKind> parse_kind(std::string_view text) noexcept;

struct SmootherConfig {
  SmootherKind kind = SmootherKind::GatedMa;
  std::size_t window = 5;           // gated_ma, ma
  double alpha = 0.5;               // ewma
  double cutoff_hz = 6.0;           // lowpass
  double frame_interval_ms = 1000.0 / 30.0;  // lowpass
  double process_noise = 1e-4;      // kalman q
  double measurement_noise = 1e-2;  // kalman r

  void validate() const;
  /// First-order RC smoothing factor dt / (RC + dt) for the lowpass kind.
  double lowpass_alpha() const noexcept;
  friend bool operator==(const SmootherConfig&, const SmootherConfig&) = default;
};

/// Fixed-capacity FIFO of the most recent values, oldest first.
class RingBuffer {
 public:
  explicit RingBuffer(std::size_t capacity = 0) : data_(capacity) {}

  std::size_t capacity() const noexcept { return data_.size(); }
  std::size_t size() const noexcept { return size_; }
  bool full() const noexcept { return size_ == data_.size(); }
  void push(double v) noexcept;
  void clear() noexcept { size_ = head_ = 0; }
  /// i = 0 is the oldest retained value.
  double operator[](std::size_t i) const noexcept {
    return data_[(head_ + data_.size() - size_ + i) % data_.size()];
  }

 private:
  std::vector<double> data_;
  std::size_t head_ = 0;  // next write slot
  std::size_t size_ = 0;
};

struct SmootherState {
  RingBuffer buffer;
  bool primed = false;
  double accumulator = 0.0;  // ewma / lowpass output, kalman mean
  double variance = 0.0;     // kalman
};

SmootherState make_state(const SmootherConfig& config);
void reset(SmootherState& state) noexcept;

/// Gated moving average: averages the new value into the previous N only
/// when it falls inside mean +/- sample standard deviation of those values;
/// otherwise it passes through. Passes through during warm-up (< N values).
double gated_step(const SmootherConfig& config, SmootherState& state, double f);
double ma_step(const SmootherConfig& config, SmootherState& state, double f);
double ewma_step(const SmootherConfig& config, SmootherState& state, double f);
double lowpass_step(const SmootherConfig& config, SmootherState& state, double f);
double kalman_step(const SmootherConfig& config, SmootherState& state, double f);

/// Dispatches on config.kind.
double step(const SmootherConfig& config, SmootherState& state, double f);

}  // namespace blendfit::smooth
