#include "blendfit/pipeline.hpp"

#include "blendfit/error.hpp"
#include "blendfit/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <utility>

namespace blendfit::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

std::string channel_label(std::size_t c) { return std::string(name_of(blendshape_at(c))); }

void require(bool ok, std::size_t c, const std::string& what) {
  if (!ok) throw Error(ErrorCode::SchemaViolation, channel_label(c) + ": " + what);
}

}  // namespace

std::size_t PipelineModel::enabled_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(channels.begin(), channels.end(), [](const ChannelModel& c) { return c.enabled; }));
}

void PipelineModel::validate() const {
  if (format_version != kFormatVersion) {
    throw Error(ErrorCode::VersionMismatch,
                "model format version " + std::to_string(format_version) + ", expected " +
                    std::to_string(kFormatVersion));
  }
  basis.validate(point_count);
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const auto& ch = channels[c];
    if (!ch.enabled) continue;
    require(ch.selector && ch.chain && ch.regressor, c, "enabled channel is missing a component");
    require(ch.selector->blendshape == blendshape_at(c), c, "selector belongs to another channel");
    ch.selector->validate(point_count);
    require(ch.chain->input_dim() == 3 * ch.selector->indices.size(), c,
            "chain input does not match the selection size");
    for (const auto& s : ch.chain->steps()) transforms::validate(s);
    ch.regressor->validate();
    require(ch.regressor->input_dim == ch.chain->output_dim(), c,
            "regressor input does not match the chain output");
    ch.correction.validate();
    ch.smoother.validate();
  }
}

std::string_view stage_name(Stage s) noexcept {
  switch (s) {
    case Stage::AffineTransform: return "T_a";
    case Stage::Segmentation: return "S";
    case Stage::DataTransform: return "T_d";
    case Stage::Regression: return "R";
    case Stage::Smoothing: return "F";
  }
  return "?";
}

StreamSession::StreamSession(const PipelineModel& model) {
  for (std::size_t c = 0; c < kBlendshapeCount; ++c) {
    const auto& ch = model.channels[c];
    if (!ch.enabled) continue;
    states_[c] = ChannelState{regress::CorrectionState{}, smooth::make_state(ch.smoother)};
    selected_[c].resize(static_cast<Eigen::Index>(3 * ch.selector->indices.size()));
  }
}

void StreamSession::reset() {
  for (auto& s : states_) {
    if (!s) continue;
    s->correction = regress::CorrectionState{};
    smooth::reset(s->smoother);
  }
  last_.reset();
}

BlendshapeFrame predict_frame(const PipelineModel& model, StreamSession& session,
                              const LandmarkFrame& frame, StageTimings* timings) {
  const TimestampMs t = frame.timestamp_ms();
  if (session.last_ && t <= *session.last_) {
    throw Error(ErrorCode::NonMonotonicTimestamp,
                "frame timestamp " + std::to_string(t) + " does not follow " +
                    std::to_string(*session.last_));
  }
  if (frame.size() != model.point_count) {
    throw Error(ErrorCode::PointCountMismatch,
                "frame has " + std::to_string(frame.size()) + " points, model expects " +
                    std::to_string(model.point_count));
  }

  auto mark = timings ? Clock::now() : Clock::time_point{};
  auto lap = [&](Stage s) {
    if (!timings) return;
    const auto now = Clock::now();
    timings->elapsed[static_cast<std::size_t>(s)] +=
        std::chrono::duration_cast<std::chrono::nanoseconds>(now - mark);
    if (timings->order.size() < kStageCount) timings->order.push_back(s);
    mark = now;
  };

  // T_a. The only stage that can fail on valid input, so nothing in the
  // session is touched before it succeeds.
  const auto transform = geometry::solve_transform(frame, model.basis);
  lap(Stage::AffineTransform);

  if (session.last_ && t - *session.last_ > kSmootherResetGapMs) {
    for (auto& s : session.states_) {
      if (s) smooth::reset(s->smoother);
    }
  }
  session.last_ = t;

  // S
  for (std::size_t c = 0; c < kBlendshapeCount; ++c) {
    if (!session.states_[c]) continue;
    const auto& idx = model.channels[c].selector->indices;
    auto& out = session.selected_[c];
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.segment<3>(static_cast<Eigen::Index>(3 * i)) = transform.apply(frame[idx[i]]);
    }
  }
  lap(Stage::Segmentation);

  // T_d
  for (std::size_t c = 0; c < kBlendshapeCount; ++c) {
    if (!session.states_[c]) continue;
    session.features_[c] = transforms::apply_chain(*model.channels[c].chain, session.selected_[c]);
  }
  lap(Stage::DataTransform);

  // R with correction
  for (std::size_t c = 0; c < kBlendshapeCount; ++c) {
    auto& state = session.states_[c];
    if (!state) continue;
    const auto& ch = model.channels[c];
    const double raw = regress::predict_raw(*ch.regressor, session.features_[c]);
    auto corrected = regress::apply_correction(ch.correction, state->correction, raw, t);
    state->correction = corrected.state;
    session.stage_values_[c] = corrected.value;
  }
  lap(Stage::Regression);

  // F
  BlendshapeWeights weights{};
  for (std::size_t c = 0; c < kBlendshapeCount; ++c) {
    auto& state = session.states_[c];
    if (!state) continue;
    const double smoothed =
        smooth::step(model.channels[c].smoother, state->smoother, session.stage_values_[c]);
    weights[c] = std::clamp(smoothed, 0.0, 1.0);
  }
  lap(Stage::Smoothing);

  if (timings) ++timings->frames;
  return BlendshapeFrame(t, weights);
}

std::array<std::optional<double>, kBlendshapeCount> predict_raw_frame(const PipelineModel& model,
                                                                      const LandmarkFrame& frame) {
  const auto normalized = geometry::normalize(frame, model.basis);
  std::array<std::optional<double>, kBlendshapeCount> out;
  for (std::size_t c = 0; c < kBlendshapeCount; ++c) {
    const auto& ch = model.channels[c];
    if (!ch.enabled) continue;
    const auto features =
        transforms::apply_chain(*ch.chain, features::flatten_selection(normalized, *ch.selector));
    out[c] = regress::predict_raw(*ch.regressor, features);
  }
  return out;
}

PipelineModel with_overrides(PipelineModel model, const std::optional<smooth::SmootherConfig>& smoother,
                             bool neutral_correction) {
  for (auto& ch : model.channels) {
    if (smoother) ch.smoother = *smoother;
    if (neutral_correction) ch.correction = regress::neutral_correction();
  }
  return model;
}

// ---- training -------------------------------------------------------------

std::vector<ChainStepSpec> default_chain() {
  ChainStepSpec pcd;
  pcd.kind = ChainStepSpec::Kind::Pcd;
  ChainStepSpec standardize;
  standardize.kind = ChainStepSpec::Kind::Standardize;
  return {ChainStepSpec{}, pcd, standardize};
}

TrainConfig TrainConfig::defaults() {
  TrainConfig c;
  c[BlendshapeName::TongueOut].enabled = false;
  return c;
}

namespace {

Eigen::VectorXd flatten(std::span<const Vec3> pts) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(3 * pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) v.segment<3>(static_cast<Eigen::Index>(3 * i)) = pts[i];
  return v;
}

std::vector<Vec3> unflatten(const Eigen::VectorXd& v) {
  std::vector<Vec3> pts(static_cast<std::size_t>(v.size() / 3));
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = v.segment<3>(static_cast<Eigen::Index>(3 * i));
  return pts;
}

std::vector<Vec3> average_points(std::span<const LandmarkFrame> frames,
                                 const std::vector<std::size_t>& which) {
  std::vector<Vec3> acc(frames.front().size(), Vec3::Zero());
  for (std::size_t f : which) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += frames[f][i];
  }
  for (auto& p : acc) p /= static_cast<double>(which.size());
  return acc;
}

transforms::TransformStep build_step(const ChainStepSpec& spec, const Eigen::MatrixXd& x,
                                     const Eigen::VectorXd& neutral) {
  const auto dim = static_cast<std::size_t>(x.cols());
  switch (spec.kind) {
    case ChainStepSpec::Kind::Displacement: return transforms::Displacement{neutral};
    case ChainStepSpec::Kind::Pcd: return transforms::fit_pcd(x, spec.components);
    case ChainStepSpec::Kind::Standardize: return transforms::fit_standardize(x);
    case ChainStepSpec::Kind::Log1p: return transforms::Log1p{dim};
    case ChainStepSpec::Kind::ExpScale: return transforms::ExpScale{dim, spec.rate};
    case ChainStepSpec::Kind::AspectRatio: {
      if (dim % 3 != 0) {
        throw Error(ErrorCode::DimensionMismatch, "aspect_ratio needs point coordinates as input");
      }
      const auto pts = unflatten(neutral);
      return transforms::make_aspect_ratio(pts, spec.pairs);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown chain step");
}

ChannelModel train_channel(const ChannelTrainConfig& cfg, const TrainConfig& config,
                           BlendshapeName name, std::span<const LandmarkFrame> normalized,
                           const features::LandmarkScorer& scorer,
                           const std::vector<std::size_t>& neutral_frames,
                           std::span<const double> y) {
  ChannelModel out;
  out.correction = cfg.correction;
  out.smoother = cfg.smoother;
  if (y.size() < config.min_samples) {
    out.note = to_string(ErrorCode::InsufficientTraining);
    out.note += ": " + std::to_string(y.size()) + " samples, need " +
                std::to_string(config.min_samples);
    return out;
  }
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (*lo == *hi) {
    out.note = std::string(to_string(ErrorCode::InsufficientTraining)) + ": constant targets";
    return out;
  }

  const auto corr = scorer.correlation(y);
  const auto fscore = scorer.f_regression(y);
  try {
    out.selection_agreement = stats::spearman(corr, fscore);
  } catch (const Error&) {
    out.selection_agreement.reset();
  }
  auto selector = features::select_top_percentile(corr, cfg.percentile, name);

  // Reference pose: the all-zero frames when the data has them, else the
  // frames at this channel's minimum target.
  std::vector<std::size_t> ref = neutral_frames;
  if (ref.empty()) {
    for (std::size_t f = 0; f < y.size(); ++f) {
      if (y[f] == *lo) ref.push_back(f);
    }
  }
  const auto neutral_all = average_points(normalized, ref);
  std::vector<Vec3> neutral_sel;
  neutral_sel.reserve(selector.indices.size());
  for (std::size_t i : selector.indices) neutral_sel.push_back(neutral_all[i]);
  Eigen::VectorXd neutral = flatten(neutral_sel);

  const auto n = static_cast<Eigen::Index>(normalized.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(3 * selector.indices.size()));
  for (Eigen::Index r = 0; r < n; ++r) {
    x.row(r) = features::flatten_selection(normalized[static_cast<std::size_t>(r)], selector).transpose();
  }

  std::vector<transforms::TransformStep> steps;
  for (const auto& spec : cfg.chain) {
    auto step = build_step(spec, x, neutral);
    Eigen::MatrixXd next(n, static_cast<Eigen::Index>(transforms::output_dim(step)));
    for (Eigen::Index r = 0; r < n; ++r) {
      next.row(r) = transforms::apply_step(step, x.row(r).transpose()).transpose();
    }
    neutral = transforms::apply_step(step, neutral);
    x = std::move(next);
    steps.push_back(std::move(step));
  }
  out.chain = transforms::TransformChain(std::move(steps), 3 * selector.indices.size());
  out.regressor = regress::fit(cfg.family, x, y, config.fit_options);
  out.selector = std::move(selector);
  out.enabled = true;
  return out;
}

}  // namespace

PipelineModel train(const TrainConfig& config, std::span<const LandmarkFrame> landmarks,
                    std::span<const BlendshapeFrame> targets) {
  if (landmarks.size() != targets.size()) {
    throw Error(ErrorCode::AlignmentFailure,
                std::to_string(landmarks.size()) + " landmark frames vs " +
                    std::to_string(targets.size()) + " target frames");
  }
  for (std::size_t i = 0; i < landmarks.size(); ++i) {
    if (landmarks[i].timestamp_ms() != targets[i].timestamp_ms()) {
      throw Error(ErrorCode::AlignmentFailure,
                  "timestamps differ at frame " + std::to_string(i) + ": " +
                      std::to_string(landmarks[i].timestamp_ms()) + " vs " +
                      std::to_string(targets[i].timestamp_ms()));
    }
  }
  if (landmarks.empty()) throw Error(ErrorCode::InsufficientSamples, "no training frames");

  PipelineModel model;
  model.point_count = landmarks.front().size();
  model.basis = config.basis;
  model.basis.validate(model.point_count);

  std::vector<LandmarkFrame> normalized;
  normalized.reserve(landmarks.size());
  for (const auto& f : landmarks) {
    if (f.size() != model.point_count) {
      throw Error(ErrorCode::PointCountMismatch, "training frames differ in point count");
    }
    normalized.push_back(geometry::normalize(f, model.basis));
  }

  std::vector<std::size_t> neutral_frames;
  for (std::size_t f = 0; f < targets.size(); ++f) {
    const auto& w = targets[f].weights();
    if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; })) neutral_frames.push_back(f);
  }

  const bool any_enabled = std::any_of(config.channels.begin(), config.channels.end(),
                                       [](const ChannelTrainConfig& c) { return c.enabled; });
  std::optional<features::LandmarkScorer> scorer;
  if (any_enabled && normalized.size() >= 3) scorer.emplace(normalized);

  std::vector<double> y(targets.size());
  for (std::size_t c = 0; c < kBlendshapeCount; ++c) {
    const auto name = blendshape_at(c);
    for (std::size_t f = 0; f < targets.size(); ++f) y[f] = targets[f].weights()[c];
    const auto& cfg = config.channels[c];
    if (!cfg.enabled || !scorer) {
      auto& ch = model.channels[c];
      ch.correction = cfg.correction;
      ch.smoother = cfg.smoother;
      ch.note = cfg.enabled ? std::string(to_string(ErrorCode::InsufficientTraining)) + ": " +
                                  std::to_string(y.size()) + " samples"
                            : "disabled by config";
      continue;
    }
    try {
      model.channels[c] = train_channel(cfg, config, name, normalized, *scorer, neutral_frames, y);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(name_of(name)) + ": " + e.what());
    }
  }
  model.validate();
  return model;
}

}  // namespace blendfit::pipeline
