#include "blendfit/geometry.hpp"

#include "blendfit/error.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>

#include <cmath>
#include <string>

namespace blendfit::geometry {

void AffineBasis::validate(std::size_t point_count) const {
  if (anchor_nose == anchor_eye_left || anchor_nose == anchor_eye_right ||
      anchor_eye_left == anchor_eye_right) {
    throw Error(ErrorCode::InvalidArgument, "affine basis anchors must be distinct");
  }
  if (anchor_nose >= point_count || anchor_eye_left >= point_count ||
      anchor_eye_right >= point_count) {
    throw Error(ErrorCode::IndexOutOfRange,
                "affine basis anchor beyond point count " + std::to_string(point_count));
  }
  if (!(target_interocular > 0.0) || !std::isfinite(target_interocular)) {
    throw Error(ErrorCode::InvalidArgument, "target_interocular must be positive");
  }
}

AffineTransform::AffineTransform(const Eigen::Matrix4d& m) : m_(m) {
  if (m_.row(3) != Eigen::RowVector4d(0, 0, 0, 1)) {
    throw Error(ErrorCode::InvalidArgument, "affine matrix last row must be [0,0,0,1]");
  }
  if (!m_.allFinite() || m_.topLeftCorner<3, 3>().determinant() == 0.0) {
    throw Error(ErrorCode::InvalidArgument, "affine matrix is not invertible");
  }
}

AffineTransform AffineTransform::inverse() const {
  Eigen::Matrix4d inv = Eigen::Matrix4d::Identity();
  const Eigen::Matrix3d a_inv = m_.topLeftCorner<3, 3>().inverse();
  inv.topLeftCorner<3, 3>() = a_inv;
  inv.topRightCorner<3, 1>() = -a_inv * m_.topRightCorner<3, 1>();
  return AffineTransform(inv);
}

AffineTransform solve_transform(const LandmarkFrame& frame, const AffineBasis& basis) {
  basis.validate(frame.size());
  const Vec3& nose = frame[basis.anchor_nose];
  const Vec3& eye_l = frame[basis.anchor_eye_left];
  const Vec3& eye_r = frame[basis.anchor_eye_right];

  const Vec3 eye_vec = eye_l - eye_r;
  const double interocular = eye_vec.norm();
  if (interocular <= kEpsGeo || (nose - eye_l).norm() <= kEpsGeo ||
      (nose - eye_r).norm() <= kEpsGeo) {
    throw Error(ErrorCode::DegenerateAnchors, "anchor landmarks coincide");
  }
  const Vec3 to_nose = nose - 0.5 * (eye_l + eye_r);
  if (0.5 * eye_vec.cross(nose - eye_r).norm() <= kEpsGeo * kEpsGeo) {
    throw Error(ErrorCode::CollinearAnchors, "anchor landmarks are collinear");
  }

  // Gram-Schmidt: x along the eyes, y toward the nose within the anchor plane.
  const Vec3 x_axis = eye_vec / interocular;
  const Vec3 y_axis = (to_nose - to_nose.dot(x_axis) * x_axis).normalized();
  const Vec3 z_axis = x_axis.cross(y_axis);

  Eigen::Matrix4d translate = Eigen::Matrix4d::Identity();
  translate.topRightCorner<3, 1>() = -nose;

  Eigen::Matrix4d rotate = Eigen::Matrix4d::Identity();
  rotate.block<1, 3>(0, 0) = x_axis.transpose();
  rotate.block<1, 3>(1, 0) = y_axis.transpose();
  rotate.block<1, 3>(2, 0) = z_axis.transpose();

  Eigen::Matrix4d scale = Eigen::Matrix4d::Identity();
  scale.topLeftCorner<3, 3>() *= basis.target_interocular / interocular;

  return AffineTransform(scale * rotate * translate);
}

LandmarkFrame apply_transform(const LandmarkFrame& frame, const AffineTransform& t) {
  std::vector<Vec3> out;
  out.reserve(frame.size());
  for (const auto& p : frame.points()) out.push_back(t.apply(p));
  return LandmarkFrame(frame.timestamp_ms(), std::move(out));
}

LandmarkFrame normalize(const LandmarkFrame& frame, const AffineBasis& basis) {
  return apply_transform(frame, solve_transform(frame, basis));
}

}  // namespace blendfit::geometry
