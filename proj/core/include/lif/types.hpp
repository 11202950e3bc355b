#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "lif/error.hpp"

namespace lif {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// A LiDAR sweep. Positions are in meters; the optional per-point attributes
/// carry ground truth for synthetic and annotated data.
struct TimedPointCloud {
  std::uint32_t frame_index = 0;
  std::vector<Vec3> points;
  std::optional<std::vector<Vec3>> gt_flow;
  std::optional<std::vector<std::uint16_t>> class_id;
  // uint8_t rather than bool to avoid std::vector<bool>.
  std::optional<std::vector<std::uint8_t>> is_foreground;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }

  /// Throws Error(kInvalidValue) on non-finite coordinates and
  /// Error(kAttributeMismatch) when an attribute list has the wrong length.
  void validate() const;
};

/// Per-point displacement vectors, index-aligned with a source cloud.
struct FlowField {
  std::vector<Vec3> vectors;

  FlowField() = default;
  explicit FlowField(std::vector<Vec3> v) : vectors(std::move(v)) {}
  static FlowField zeros(std::size_t n) {
    return FlowField(std::vector<Vec3>(n, Vec3::Zero()));
  }

  std::size_t size() const noexcept { return vectors.size(); }
  void validate() const;
};

/// Proper rigid motion x -> R x + t.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

  /// Throws Error(kInvalidValue) unless the rotation is orthonormal with
  /// determinant +1 (both within 1e-9).
  RigidTransform(const Mat3& rotation, const Vec3& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Vec3& t) {
    return RigidTransform(Mat3::Identity(), t);
  }
  /// Rotation by `angle` radians about `axis` (normalized internally).
  static RigidTransform from_axis_angle(const Vec3& axis, double angle,
                                        const Vec3& translation = Vec3::Zero());

  const Mat3& rotation() const noexcept { return rotation_; }
  const Vec3& translation() const noexcept { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 operator*(const Vec3& p) const { return apply(p); }

  /// (a * b).apply(x) == a.apply(b.apply(x)).
  RigidTransform operator*(const RigidTransform& other) const;
  RigidTransform inverse() const;

  /// Angle of the rotation part in radians.
  double rotation_angle() const;

  Eigen::Matrix4d matrix() const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

bool is_rotation(const Mat3& r, double tol = 1e-9);
bool all_finite(std::span<const Vec3> v);

}  // namespace lif
