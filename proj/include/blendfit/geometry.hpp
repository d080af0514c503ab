#pragma once

#include "blendfit/core.hpp"

#include <Eigen/Core>

#include <cstddef>

namespace blendfit::geometry {

/// Minimum anchor separation in normalized units.
inline constexpr double kEpsGeo = 1e-6;

/// Anchor landmarks of the regression basis. Defaults are the nose tip and
/// the two outer eye corners of the 478-point face mesh layout.
struct AffineBasis {
  std::size_t anchor_nose = 1;
  std::size_t anchor_eye_left = 263;
  std::size_t anchor_eye_right = 33;
  double target_interocular = 1.0;

  /// Throws InvalidArgument unless the anchors are distinct, below
  /// point_count, and the target distance is positive.
  void validate(std::size_t point_count) const;
  friend bool operator==(const AffineBasis&, const AffineBasis&) = default;
};

/// Homogeneous 4x4 affine map, composed as scale * rotation * translation.
class AffineTransform {
 public:
  AffineTransform() : m_(Eigen::Matrix4d::Identity()) {}
  /// Throws InvalidArgument if the last row is not [0,0,0,1] or M is singular.
  explicit AffineTransform(const Eigen::Matrix4d& m);

  const Eigen::Matrix4d& matrix() const noexcept { return m_; }
  Vec3 apply(const Vec3& p) const noexcept {
    return m_.topLeftCorner<3, 3>() * p + m_.topRightCorner<3, 1>();
  }
  AffineTransform inverse() const;

 private:
  Eigen::Matrix4d m_;
};

/// Solves the map taking the nose anchor to the origin, the eye-right to
/// eye-left direction onto +x, the eye-midpoint to nose direction into the
/// +y half of the xy plane, and the interocular distance to the target.
///
/// Errors: DegenerateAnchors when two anchors are within kEpsGeo,
/// CollinearAnchors when the anchor triangle area is at most kEpsGeo^2,
/// IndexOutOfRange for anchors beyond the frame.
AffineTransform solve_transform(const LandmarkFrame& frame, const AffineBasis& basis);

LandmarkFrame apply_transform(const LandmarkFrame& frame, const AffineTransform& t);

/// solve + apply in one step.
LandmarkFrame normalize(const LandmarkFrame& frame, const AffineBasis& basis);

}  // namespace blendfit::geometry
