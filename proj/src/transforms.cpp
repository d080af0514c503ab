#include "blendfit/transforms.hpp"

#include "blendfit/error.hpp"
#include "blendfit/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace blendfit::transforms {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kFlatVariance = 1e-24;

Eigen::Index dominant_axis(const Eigen::VectorXd& v) {
  Eigen::Index idx = 0;
  v.cwiseAbs().maxCoeff(&idx);
  return idx;
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-12) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

}  // namespace

std::string_view kind_name(const TransformStep& step) noexcept {
  return std::visit(overloaded{
                        [](const PcdProject&) { return std::string_view("pcd_project"); },
                        [](const Displacement&) { return std::string_view("displacement"); },
                        [](const AspectRatio&) { return std::string_view("aspect_ratio"); },
                        [](const Log1p&) { return std::string_view("log1p"); },
                        [](const ExpScale&) { return std::string_view("exp_scale"); },
                        [](const Standardize&) { return std::string_view("standardize"); },
                    },
                    step);
}

std::size_t input_dim(const TransformStep& step) noexcept {
  return std::visit(overloaded{
                        [](const PcdProject& s) { return static_cast<std::size_t>(s.center.size()); },
                        [](const Displacement& s) { return static_cast<std::size_t>(s.neutral.size()); },
                        [](const AspectRatio& s) { return 3 * s.point_count; },
                        [](const Log1p& s) { return s.dim; },
                        [](const ExpScale& s) { return s.dim; },
                        [](const Standardize& s) { return static_cast<std::size_t>(s.mean.size()); },
                    },
                    step);
}

std::size_t output_dim(const TransformStep& step) noexcept {
  return std::visit(
      overloaded{
          [](const PcdProject& s) { return static_cast<std::size_t>(s.components.rows()); },
          [](const AspectRatio& s) { return s.pairs.size(); },
          [&](const auto&) { return input_dim(step); },
      },
      step);
}

void validate(const TransformStep& step) {
  std::visit(
      overloaded{
          [](const PcdProject& s) {
            if (s.components.rows() == 0 || s.components.cols() != s.center.size()) {
              throw Error(ErrorCode::InvalidArgument, "pcd_project shape mismatch");
            }
            const Eigen::MatrixXd gram = s.components * s.components.transpose();
            const auto k = gram.rows();
            if ((gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff() > 1e-9) {
              throw Error(ErrorCode::InvalidArgument, "pcd_project components not orthonormal");
            }
          },
          [](const Displacement& s) {
            if (s.neutral.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty displacement");
          },
          [](const AspectRatio& s) {
            if (s.pairs.empty() || s.pairs.size() != s.neutral_distances.size()) {
              throw Error(ErrorCode::InvalidArgument, "aspect_ratio pairs/distances mismatch");
            }
            for (std::size_t i = 0; i < s.pairs.size(); ++i) {
              const auto [a, b] = s.pairs[i];
              if (a >= s.point_count || b >= s.point_count) {
                throw Error(ErrorCode::IndexOutOfRange, "aspect_ratio pair beyond point count");
              }
              if (!(s.neutral_distances[i] > geometry::kEpsGeo)) {
                throw Error(ErrorCode::DegenerateAnchorPair, "aspect_ratio neutral distance too small");
              }
            }
          },
          [](const Log1p& s) {
            if (s.dim == 0) throw Error(ErrorCode::InvalidArgument, "log1p needs a dimension");
          },
          [](const ExpScale& s) {
            if (s.dim == 0 || !std::isfinite(s.rate)) {
              throw Error(ErrorCode::InvalidArgument, "exp_scale needs a dimension and finite rate");
            }
          },
          [](const Standardize& s) {
            if (s.mean.size() == 0 || s.mean.size() != s.scale.size()) {
              throw Error(ErrorCode::InvalidArgument, "standardize mean/scale mismatch");
            }
            if (!(s.scale.array() > 0.0).all()) {
              throw Error(ErrorCode::InvalidArgument, "standardize scale must be positive");
            }
          },
      },
      step);
}

Eigen::VectorXd apply_step(const TransformStep& step, const Eigen::VectorXd& in) {
  if (static_cast<std::size_t>(in.size()) != input_dim(step)) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(kind_name(step)) + " expects " + std::to_string(input_dim(step)) +
                    " inputs, got " + std::to_string(in.size()));
  }
  return std::visit(
      overloaded{
          [&](const PcdProject& s) -> Eigen::VectorXd { return s.components * (in - s.center); },
          [&](const Displacement& s) -> Eigen::VectorXd { return in - s.neutral; },
          [&](const AspectRatio& s) -> Eigen::VectorXd {
            Eigen::VectorXd out(static_cast<Eigen::Index>(s.pairs.size()));
            for (std::size_t i = 0; i < s.pairs.size(); ++i) {
              const auto a = static_cast<Eigen::Index>(3 * s.pairs[i].first);
              const auto b = static_cast<Eigen::Index>(3 * s.pairs[i].second);
              out[static_cast<Eigen::Index>(i)] =
                  (in.segment<3>(a) - in.segment<3>(b)).norm() / s.neutral_distances[i];
            }
            return out;
          },
          [&](const Log1p&) -> Eigen::VectorXd {
            if ((in.array() <= -1.0).any()) {
              throw Error(ErrorCode::DomainViolation, "log1p input <= -1");
            }
            return in.array().log1p().matrix();
          },
          [&](const ExpScale& s) -> Eigen::VectorXd { return (s.rate * in.array()).exp().matrix(); },
          [&](const Standardize& s) -> Eigen::VectorXd {
            return ((in - s.mean).array() / s.scale.array()).matrix();
          },
      },
      step);
}

TransformChain::TransformChain(std::vector<TransformStep> steps, std::size_t input_dim)
    : steps_(std::move(steps)), input_dim_(input_dim), output_dim_(input_dim) {
  if (input_dim_ == 0) throw Error(ErrorCode::InvalidArgument, "chain input dimension must be > 0");
  for (const auto& step : steps_) {
    validate(step);
    if (transforms::input_dim(step) != output_dim_) {
      throw Error(ErrorCode::DimensionMismatch,
                  std::string(kind_name(step)) + " expects " +
                      std::to_string(transforms::input_dim(step)) + " inputs but receives " +
                      std::to_string(output_dim_));
    }
    output_dim_ = transforms::output_dim(step);
  }
}

Eigen::VectorXd apply_chain(const TransformChain& chain, const Eigen::VectorXd& in) {
  if (static_cast<std::size_t>(in.size()) != chain.input_dim()) {
    throw Error(ErrorCode::DimensionMismatch, "chain expects " + std::to_string(chain.input_dim()) +
                                                  " inputs, got " + std::to_string(in.size()));
  }
  Eigen::VectorXd v = in;
  for (const auto& step : chain.steps()) v = apply_step(step, v);
  return v;
}

PcdProject fit_pcd(const Eigen::MatrixXd& samples, std::size_t components) {
  if (samples.rows() < 2 || samples.cols() < 1) {
    throw Error(ErrorCode::InsufficientSamples, "PCD needs >= 2 samples of >= 1 dimension");
  }
  if (components == 0) throw Error(ErrorCode::InvalidArgument, "PCD needs >= 1 component");
  const Eigen::VectorXd center = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rowwise() - center.transpose();
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(samples.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::DegenerateCovariance, "eigen decomposition failed");
  }
  const Eigen::VectorXd& values = solver.eigenvalues();
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  if (values.maxCoeff() <= kFlatVariance) {
    throw Error(ErrorCode::DegenerateCovariance, "samples have no variance");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return values[a] > values[b]; });
  // equal eigenvalues: the component dominated by the lower axis comes first
  const double tie_tol = 1e-12 * std::max(1.0, values.cwiseAbs().maxCoeff());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && std::abs(values[order[i]] - values[order[j]]) <= tie_tol) ++j;
    std::sort(order.begin() + static_cast<std::ptrdiff_t>(i),
              order.begin() + static_cast<std::ptrdiff_t>(j), [&](auto a, auto b) {
                return dominant_axis(vectors.col(a)) < dominant_axis(vectors.col(b));
              });
    i = j;
  }

  const auto k = static_cast<Eigen::Index>(std::min<std::size_t>(components, order.size()));
  PcdProject out;
  out.center = center;
  out.components.resize(k, samples.cols());
  out.eigenvalues.resize(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    Eigen::VectorXd v = vectors.col(order[static_cast<std::size_t>(r)]);
    v.normalize();
    fix_sign(v);
    out.components.row(r) = v.transpose();
    out.eigenvalues[r] = std::max(0.0, values[order[static_cast<std::size_t>(r)]]);
  }
  return out;
}

Standardize fit_standardize(const Eigen::MatrixXd& samples) {
  if (samples.rows() < 2) throw Error(ErrorCode::InsufficientSamples, "standardize needs 2 samples");
  Standardize s;
  s.mean = samples.colwise().mean().transpose();
  const Eigen::MatrixXd centered = samples.rowwise() - s.mean.transpose();
  s.scale = (centered.colwise().squaredNorm() / static_cast<double>(samples.rows() - 1))
                .cwiseSqrt()
                .transpose();
  for (Eigen::Index i = 0; i < s.scale.size(); ++i) {
    if (!(s.scale[i] * s.scale[i] > kFlatVariance)) s.scale[i] = 1.0;
  }
  return s;
}

Eigen::VectorXd step_displacement(std::span<const Vec3> points, std::span<const Vec3> neutral) {
  if (points.size() != neutral.size()) {
    throw Error(ErrorCode::LengthMismatch, "points and neutral differ in length");
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(3 * points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.segment<3>(static_cast<Eigen::Index>(3 * i)) = points[i] - neutral[i];
  }
  return out;
}

AspectRatio make_aspect_ratio(std::span<const Vec3> neutral,
                              std::vector<std::pair<std::size_t, std::size_t>> pairs) {
  AspectRatio ratio;
  ratio.point_count = neutral.size();
  ratio.pairs = std::move(pairs);
  for (const auto& [a, b] : ratio.pairs) {
    if (a >= neutral.size() || b >= neutral.size()) {
      throw Error(ErrorCode::IndexOutOfRange, "aspect ratio pair beyond point count");
    }
    const double d = (neutral[a] - neutral[b]).norm();
    if (d <= geometry::kEpsGeo) {
      throw Error(ErrorCode::DegenerateAnchorPair, "anchor pair (" + std::to_string(a) + ", " +
                                                       std::to_string(b) + ") coincides at neutral");
    }
    ratio.neutral_distances.push_back(d);
  }
  validate(ratio);
  return ratio;
}

Eigen::VectorXd step_aspect_ratio(std::span<const Vec3> points, const AspectRatio& ratio) {
  if (points.size() != ratio.point_count) {
    throw Error(ErrorCode::LengthMismatch, "aspect ratio point count differs from neutral");
  }
  Eigen::VectorXd flat(static_cast<Eigen::Index>(3 * points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    flat.segment<3>(static_cast<Eigen::Index>(3 * i)) = points[i];
  }
  return apply_step(ratio, flat);
}

std::vector<double> apply_residual_transform(const ResidualTransform& t,
                                             std::span<const double> residuals) {
  using Kind = ResidualTransform::Kind;
  if (t.kind == Kind::BoxCox && !std::isfinite(t.lambda)) {
    throw Error(ErrorCode::InvalidArgument, "Box-Cox lambda must be finite");
  }
  std::vector<double> out(residuals.begin(), residuals.end());
  if (t.kind == Kind::Identity) return out;
  for (double& r : out) {
    const double v = r + t.offset;
    if (!(v > 0.0)) {
      throw Error(ErrorCode::DomainViolation, "residual + offset must be positive for log/Box-Cox");
    }
    if (t.kind == Kind::Log || t.lambda == 0.0) {
      r = std::log(v);
    } else {
      r = std::expm1(t.lambda * std::log(v)) / t.lambda;
    }
  }
  return out;
}

}  // namespace blendfit::transforms
