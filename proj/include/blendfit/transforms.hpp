#pragma once

#include "blendfit/core.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace blendfit::transforms {

/// Projection onto the leading principal directions: out = C (in - center).
/// Rows of C are unit-norm, mutually orthogonal, ordered by descending
/// eigenvalue, and the first nonzero entry of each row is positive.
struct PcdProject {
  Eigen::VectorXd center;
  Eigen::MatrixXd components;   // k x d
  Eigen::VectorXd eigenvalues;  // k retained eigenvalues
};

/// out = in - neutral (flattened points).
struct Displacement {
  Eigen::VectorXd neutral;
};

/// out_i = |p_a - p_b| / neutral_distance_i for each anchor pair (a, b),
/// where pair entries index points within the flattened input.
struct AspectRatio {
  std::size_t point_count = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> neutral_distances;
};

struct Log1p {
  std::size_t dim = 0;
};

/// out = exp(rate * in), elementwise.
struct ExpScale {
  std::size_t dim = 0;
  double rate = 1.0;
};

/// out = (in - mean) / scale, elementwise.
struct Standardize {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
};

using TransformStep = std::variant<PcdProject, Displacement, AspectRatio, Log1p, ExpScale, Standardize>;

std::string_view kind_name(const TransformStep& step) noexcept;
std::size_t input_dim(const TransformStep& step) noexcept;
std::size_t output_dim(const TransformStep& step) noexcept;
/// Throws InvalidArgument on a broken step invariant.
void validate(const TransformStep& step);
Eigen::VectorXd apply_step(const TransformStep& step, const Eigen::VectorXd& in);

/// Ordered steps whose dimensions chain end to end. An empty chain is the
/// identity on vectors of `input_dim`.
class TransformChain {
 public:
  TransformChain() = default;
  TransformChain(std::vector<TransformStep> steps, std::size_t input_dim);

  const std::vector<TransformStep>& steps() const noexcept { return steps_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept { return output_dim_; }

 private:
  std::vector<TransformStep> steps_;
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
};

/// Throws DimensionMismatch when the input size differs from the chain input.
Eigen::VectorXd apply_chain(const TransformChain& chain, const Eigen::VectorXd& in);

/// Rows of `samples` are observations. Throws InsufficientSamples for
/// fewer than 2 rows and DegenerateCovariance when every direction is flat.
PcdProject fit_pcd(const Eigen::MatrixXd& samples, std::size_t components = 1);

/// Column means and sample standard deviations; flat columns get scale 1.
Standardize fit_standardize(const Eigen::MatrixXd& samples);

Eigen::VectorXd step_displacement(std::span<const Vec3> points, std::span<const Vec3> neutral);

AspectRatio make_aspect_ratio(std::span<const Vec3> neutral,
                              std::vector<std::pair<std::size_t, std::size_t>> pairs);
Eigen::VectorXd step_aspect_ratio(std::span<const Vec3> points, const AspectRatio& ratio);

/// Variance-stabilizing maps for training residuals. Both log and Box-Cox
/// act on (residual + offset), which must be positive.
struct ResidualTransform {
  enum class Kind { Identity, Log, BoxCox };
  Kind kind = Kind::Identity;
  double lambda = 1.0;
  double offset = 0.0;
};

std::vector<double> apply_residual_transform(const ResidualTransform& t,
                                             std::span<const double> residuals);

}  // namespace blendfit::transforms
