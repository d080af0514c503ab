#pragma once

#include "blendfit/core.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace blendfit::regress {

/// Piecewise-linear weight function g over [0, 1].
struct WeightTable {
  std::vector<double> knots;   // strictly increasing, first 0, last 1
  std::vector<double> values;

  static WeightTable zero();
  /// Samples f at `count` evenly spaced knots.
  template <class F>
  static WeightTable sampled(F f, std::size_t count = 33) {
    WeightTable t;
    for (std::size_t i = 0; i < count; ++i) {
      const double x = static_cast<double>(i) / static_cast<double>(count - 1);
      t.knots.push_back(x);
      t.values.push_back(f(x));
    }
    return t;
  }

  double operator()(double f) const noexcept;
  bool is_zero() const noexcept;
  void validate() const;
  friend bool operator==(const WeightTable&, const WeightTable&) = default;
};

/// Parameters of R(f) = (1 + g(f)/eta - gamma) (w.f + b + beta_t).
/// beta jumps to lambda_beta * (1 - raw) when the raw estimate rises above
/// the running reference by the decaying margin exp(k (t_o - t)), then
/// relaxes back toward beta_0 at the same rate k (per millisecond).
struct CorrectionParams {
  double eta = 1.0;
  double gamma = 0.0;
  double k = 0.005;
  double beta_0 = 0.0;
  double lambda_beta = 0.15;
  WeightTable g = WeightTable::zero();

  void validate() const;
  friend bool operator==(const CorrectionParams&, const CorrectionParams&) = default;
};

/// g = 0, gamma = 0, beta_0 = 0 and no beta response: the stage reduces to
/// clamp(raw).
CorrectionParams neutral_correction();

/// "neutral", "default", "upper_edge", "sigmoid_edge".
std::optional<CorrectionParams> correction_preset(std::string_view name);

struct CorrectionState {
  bool initialized = false;
  double beta = 0.0;          // value applied at the last step
  double beta_peak = 0.0;     // value set by the last trigger
  TimestampMs peak_t = 0;
  double f_ref = 0.0;         // running reference f_{t_o}
  TimestampMs t_ref = 0;      // t_o
};

struct Corrected {
  double value = 0.0;
  CorrectionState state;
};

/// Uninitialized state is seeded from the first sample.
Corrected apply_correction(const CorrectionParams& params, const CorrectionState& state, double raw,
                           TimestampMs t);

}  // namespace blendfit::regress
