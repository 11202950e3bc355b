#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lif/types.hpp"

namespace lif {

struct IcpConfig {
  std::size_t max_iterations = 50;
  /// Stop once the mean correspondence distance changes by less than this (m).
  double convergence_tol = 1e-5;
  /// Pairs farther apart than this (m) are ignored.
  double max_correspondence_dist = 1.0;

  void validate() const;
};

struct IcpResult {
  RigidTransform transform;
  /// Mean inlier correspondence distance after the final iteration (m).
  double residual = 0.0;
  std::size_t iterations = 0;
  /// Mean inlier distance measured at the start of every iteration, plus
  /// the final value.
  std::vector<double> residual_history;
};

/// Least-squares rigid alignment of corresponding point lists (centroids plus
/// SVD with a reflection guard). Throws Error(kDegenerateGeometry) when the
/// source points are coincident or collinear, and Error(kPrecondition) on
/// empty or mismatched inputs.
RigidTransform kabsch(std::span<const Vec3> source, std::span<const Vec3> target);

/// Point-to-point ICP estimating the transform that maps `source` onto
/// `target`. Throws Error(kRegistrationFailure) when an iteration finds no
/// correspondence within max_correspondence_dist.
IcpResult icp(const TimedPointCloud& source, const TimedPointCloud& target,
              const IcpConfig& config = {});

/// Maps every point through t. gt_flow and the other attributes are copied
/// unchanged.
TimedPointCloud apply_transform(const TimedPointCloud& cloud, const RigidTransform& t);

}  // namespace lif
