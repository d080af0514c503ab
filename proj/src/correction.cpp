#include "blendfit/correction.hpp"

#include "blendfit/error.hpp"

#include <algorithm>
#include <cmath>

namespace blendfit::regress {

WeightTable WeightTable::zero() { return WeightTable{{0.0, 1.0}, {0.0, 0.0}}; }

double WeightTable::operator()(double f) const noexcept {
  const double x = std::clamp(f, 0.0, 1.0);
  const auto it = std::upper_bound(knots.begin(), knots.end(), x);
  if (it == knots.begin()) return values.front();
  if (it == knots.end()) return values.back();
  const auto hi = static_cast<std::size_t>(it - knots.begin());
  const auto lo = hi - 1;
  const double u = (x - knots[lo]) / (knots[hi] - knots[lo]);
  return values[lo] + u * (values[hi] - values[lo]);
}

bool WeightTable::is_zero() const noexcept {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

void WeightTable::validate() const {
  if (knots.size() < 2 || knots.size() != values.size()) {
    throw Error(ErrorCode::InvalidArgument, "weight table needs >= 2 knots with matching values");
  }
  if (knots.front() != 0.0 || knots.back() != 1.0) {
    throw Error(ErrorCode::InvalidArgument, "weight table knots must span [0, 1]");
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i] > knots[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "weight table knots must be strictly increasing");
    }
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "weight table value not finite");
  }
}

void CorrectionParams::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw Error(ErrorCode::InvalidArgument, "eta must be > 0");
  if (!std::isfinite(gamma) || !std::isfinite(beta_0) || !std::isfinite(lambda_beta)) {
    throw Error(ErrorCode::InvalidArgument, "correction scalars must be finite");
  }
  if (!(k >= 0.0) || !std::isfinite(k)) throw Error(ErrorCode::InvalidArgument, "k must be >= 0");
  g.validate();
}

CorrectionParams neutral_correction() {
  CorrectionParams p;
  p.lambda_beta = 0.0;
  return p;
}

std::optional<CorrectionParams> correction_preset(std::string_view name) {
  if (name == "neutral") return neutral_correction();
  if (name == "default") return CorrectionParams{};
  if (name == "upper_edge") {
    // quartic lift concentrated in the top of the range
    CorrectionParams p;
    p.g = WeightTable::sampled([](double f) { return 0.3 * f * f * f * f; });
    return p;
  }
  if (name == "sigmoid_edge") {
    CorrectionParams p;
    p.g = WeightTable::sampled([](double f) { return 0.2 / (1.0 + std::exp(-20.0 * (f - 0.85))); });
    p.gamma = 0.01;
    return p;
  }
  return std::nullopt;
}

Corrected apply_correction(const CorrectionParams& params, const CorrectionState& state, double raw,
                           TimestampMs t) {
  CorrectionState next = state;
  if (!next.initialized) {
    next.initialized = true;
    next.beta = params.beta_0;
    next.beta_peak = params.beta_0;
    next.peak_t = t;
    next.f_ref = raw;
    next.t_ref = t;
  } else {
    const double since_peak = static_cast<double>(t - next.peak_t);
    next.beta = params.beta_0 + (next.beta_peak - params.beta_0) * std::exp(-params.k * since_peak);
    const double threshold =
        next.f_ref + std::exp(params.k * static_cast<double>(next.t_ref - t));
    if (raw > threshold) {
      next.beta_peak = params.lambda_beta * (1.0 - std::clamp(raw, 0.0, 1.0));
      next.beta = next.beta_peak;
      next.peak_t = t;
      next.f_ref = raw;
      next.t_ref = t;
    } else if (raw < next.f_ref) {
      next.f_ref = raw;
      next.t_ref = t;
    }
  }
  const double gain = 1.0 + params.g(raw) / params.eta - params.gamma;
  const double value = std::clamp(gain * (raw + next.beta), 0.0, 1.0);
  return {value, next};
}

}  // namespace blendfit::regress
