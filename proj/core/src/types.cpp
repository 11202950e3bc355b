#include "lif/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Geometry>

namespace lif {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo: return "io";
    case ErrorKind::kBadMagic: return "bad-magic";
    case ErrorKind::kBadVersion: return "bad-version";
    case ErrorKind::kTruncated: return "truncated";
    case ErrorKind::kAttributeMismatch: return "attribute-mismatch";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kPrecondition: return "precondition";
    case ErrorKind::kInvalidValue: return "invalid-value";
    case ErrorKind::kEmptyIndex: return "empty-index";
    case ErrorKind::kOutOfRange: return "out-of-range";
    case ErrorKind::kDegenerateGeometry: return "degenerate-geometry";
    case ErrorKind::kRegistrationFailure: return "registration-failure";
    case ErrorKind::kNonConvergence: return "non-convergence";
  }
  return "unknown";
}

bool all_finite(std::span<const Vec3> v) {
  return std::all_of(v.begin(), v.end(),
                     [](const Vec3& p) { return p.allFinite(); });
}

void TimedPointCloud::validate() const {
  if (!all_finite(points)) {
    throw Error(ErrorKind::kInvalidValue, "cloud has non-finite coordinates");
  }
  const std::size_t n = points.size();
  if (gt_flow) {
    if (gt_flow->size() != n) {
      throw Error(ErrorKind::kAttributeMismatch,
                  "gt_flow length " + std::to_string(gt_flow->size()) +
                      " != point count " + std::to_string(n));
    }
    if (!all_finite(*gt_flow)) {
      throw Error(ErrorKind::kInvalidValue, "gt_flow has non-finite values");
    }
  }
  if (class_id && class_id->size() != n) {
    throw Error(ErrorKind::kAttributeMismatch,
                "class_id length " + std::to_string(class_id->size()) +
                    " != point count " + std::to_string(n));
  }
  if (is_foreground && is_foreground->size() != n) {
    throw Error(ErrorKind::kAttributeMismatch,
                "is_foreground length " + std::to_string(is_foreground->size()) +
                    " != point count " + std::to_string(n));
  }
}

void FlowField::validate() const {
  if (!all_finite(vectors)) {
    throw Error(ErrorKind::kInvalidValue, "flow has non-finite values");
  }
}

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!is_rotation(rotation_)) {
    throw Error(ErrorKind::kInvalidValue,
                "rotation is not orthonormal with determinant +1");
  }
  if (!translation_.allFinite()) {
    throw Error(ErrorKind::kInvalidValue, "translation is not finite");
  }
}

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis, double angle,
                                               const Vec3& translation) {
  const Mat3 r = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
  return RigidTransform(r, translation);
}

RigidTransform RigidTransform::operator*(const RigidTransform& other) const {
  RigidTransform out;
  out.rotation_ = rotation_ * other.rotation_;
  out.translation_ = rotation_ * other.translation_ + translation_;
  return out;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform out;
  out.rotation_ = rotation_.transpose();
  out.translation_ = -(out.rotation_ * translation_);
  return out;
}

double RigidTransform::rotation_angle() const {
  const double c = std::clamp((rotation_.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

}  // namespace lif
