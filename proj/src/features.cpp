#include "blendfit/features.hpp"

#include "blendfit/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace blendfit::features {

namespace {

// |r| this close to 1 is treated as an exact linear relation.
constexpr double kPerfectR2Slack = 1e-12;
// Centered column norms at or below this (normalized units) count as frozen.
constexpr double kFrozenNorm = 1e-12;

template <class Reduce>
std::vector<double> reduce_axes(const Eigen::VectorXd& per_axis, std::size_t points, Reduce f) {
  std::vector<double> out(points);
  for (std::size_t p = 0; p < points; ++p) {
    const auto base = static_cast<Eigen::Index>(3 * p);
    out[p] = std::max({f(per_axis[base]), f(per_axis[base + 1]), f(per_axis[base + 2])});
  }
  return out;
}

}  // namespace

void FeatureSelector::validate(std::size_t point_count) const {
  if (indices.empty()) throw Error(ErrorCode::InvalidArgument, "selector has no indices");
  if (scores.size() != indices.size()) {
    throw Error(ErrorCode::InvalidArgument, "selector scores/indices length differ");
  }
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= point_count) {
      throw Error(ErrorCode::IndexOutOfRange, "selector index " + std::to_string(indices[i]) +
                                                  " >= " + std::to_string(point_count));
    }
    if (i > 0 && indices[i] <= indices[i - 1]) {
      throw Error(ErrorCode::InvalidArgument, "selector indices must be strictly ascending");
    }
    if (!std::isfinite(scores[i])) throw Error(ErrorCode::InvalidArgument, "non-finite score");
  }
}

LandmarkScorer::LandmarkScorer(std::span<const LandmarkFrame> frames) {
  if (frames.size() < 3) {
    throw Error(ErrorCode::InsufficientSamples,
                "feature scoring needs >= 3 frames, got " + std::to_string(frames.size()));
  }
  point_count_ = frames.front().size();
  const auto rows = static_cast<Eigen::Index>(frames.size());
  const auto cols = static_cast<Eigen::Index>(3 * point_count_);
  centered_.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& f = frames[static_cast<std::size_t>(r)];
    if (f.size() != point_count_) {
      throw Error(ErrorCode::PointCountMismatch, "frames differ in point count");
    }
    for (std::size_t p = 0; p < point_count_; ++p) {
      centered_.block<1, 3>(r, static_cast<Eigen::Index>(3 * p)) = f[p].transpose();
    }
  }
  centered_.rowwise() -= centered_.colwise().mean();
  column_norms_ = centered_.colwise().norm().transpose();
}

Eigen::VectorXd LandmarkScorer::abs_correlations(std::span<const double> targets) const {
  if (targets.size() != sample_count()) {
    throw Error(ErrorCode::LengthMismatch, "targets must match frame count");
  }
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(targets.data(),
                                                        static_cast<Eigen::Index>(targets.size()));
  y.array() -= y.mean();
  const double y_norm = y.norm();
  if (y_norm == 0.0) throw Error(ErrorCode::ZeroVariance, "targets are constant");

  const Eigen::VectorXd sxy = centered_.transpose() * y;
  Eigen::VectorXd r(sxy.size());
  for (Eigen::Index i = 0; i < sxy.size(); ++i) {
    if (column_norms_[i] <= kFrozenNorm) {
      r[i] = 0.0;
      continue;
    }
    double v = std::min(1.0, std::abs(sxy[i]) / (column_norms_[i] * y_norm));
    if (1.0 - v * v <= kPerfectR2Slack) v = 1.0;
    r[i] = v;
  }
  return r;
}

std::vector<double> LandmarkScorer::correlation(std::span<const double> targets) const {
  return reduce_axes(abs_correlations(targets), point_count_, [](double r) { return r; });
}

std::vector<double> LandmarkScorer::f_regression(std::span<const double> targets) const {
  const double dof = static_cast<double>(sample_count()) - 2.0;
  return reduce_axes(abs_correlations(targets), point_count_, [dof](double r) {
    if (r >= 1.0) return kFMax;
    const double r2 = r * r;
    return std::min(kFMax, r2 * dof / (1.0 - r2));
  });
}

std::vector<double> correlation_map(std::span<const LandmarkFrame> frames,
                                    std::span<const double> targets) {
  if (frames.size() != targets.size()) {
    throw Error(ErrorCode::LengthMismatch, "frames and targets differ in length");
  }
  return LandmarkScorer(frames).correlation(targets);
}

std::vector<double> f_regression_scores(std::span<const LandmarkFrame> frames,
                                        std::span<const double> targets) {
  if (frames.size() != targets.size()) {
    throw Error(ErrorCode::LengthMismatch, "frames and targets differ in length");
  }
  return LandmarkScorer(frames).f_regression(targets);
}

FeatureSelector select_top_percentile(std::span<const double> scores, double percentile,
                                      BlendshapeName blendshape, SelectionMethod method) {
  if (!(percentile > 0.0 && percentile < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "percentile must lie in (0, 1)");
  }
  if (scores.empty()) throw Error(ErrorCode::InvalidArgument, "no scores to select from");
  const auto n = static_cast<double>(scores.size());
  // slack keeps exact products such as 0.05 * 100 from rounding up a slot
  auto k = static_cast<std::size_t>(std::ceil(percentile * n - 1e-9));
  k = std::clamp<std::size_t>(k, 1, scores.size());

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(k);
  std::sort(order.begin(), order.end());

  FeatureSelector sel;
  sel.blendshape = blendshape;
  sel.method = method;
  sel.indices = order;
  sel.scores.reserve(k);
  for (auto i : order) sel.scores.push_back(scores[i]);
  return sel;
}

std::vector<Vec3> apply_selection(const LandmarkFrame& frame, const FeatureSelector& sel) {
  std::vector<Vec3> out;
  out.reserve(sel.indices.size());
  for (auto i : sel.indices) {
    if (i >= frame.size()) {
      throw Error(ErrorCode::IndexOutOfRange, "selection index " + std::to_string(i) +
                                                  " beyond frame of " +
                                                  std::to_string(frame.size()));
    }
    out.push_back(frame[i]);
  }
  return out;
}

Eigen::VectorXd flatten_selection(const LandmarkFrame& frame, const FeatureSelector& sel) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(3 * sel.indices.size()));
  for (std::size_t k = 0; k < sel.indices.size(); ++k) {
    const auto i = sel.indices[k];
    if (i >= frame.size()) {
      throw Error(ErrorCode::IndexOutOfRange, "selection index " + std::to_string(i) +
                                                  " beyond frame of " +
                                                  std::to_string(frame.size()));
    }
    out.segment<3>(static_cast<Eigen::Index>(3 * k)) = frame[i];
  }
  return out;
}

}  // namespace blendfit::features
