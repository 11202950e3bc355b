#include "lif/egomotion.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "lif/parallel.hpp"
#include "lif/spatial_index.hpp"

namespace lif {

void IcpConfig::validate() const {
  if (max_iterations < 1 || !(convergence_tol > 0.0) || !(max_correspondence_dist > 0.0)) {
    throw Error(ErrorKind::kPrecondition, "icp config values must be positive");
  }
}

RigidTransform kabsch(std::span<const Vec3> source, std::span<const Vec3> target) {
  if (source.empty() || source.size() != target.size()) {
    throw Error(ErrorKind::kPrecondition,
                "kabsch needs non-empty equal-length point lists");
  }
  const double n = static_cast<double>(source.size());
  Vec3 cs = Vec3::Zero();
  Vec3 ct = Vec3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    cs += source[i];
    ct += target[i];
  }
  cs /= n;
  ct /= n;

  Mat3 cov = Mat3::Zero();
  Mat3 spread = Mat3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec3 s = source[i] - cs;
    cov += s * (target[i] - ct).transpose();
    spread += s * s.transpose();
  }

  // The rotation is pinned down only if the source spans at least a plane.
  const Eigen::JacobiSVD<Mat3> spread_svd(spread);
  const Vec3 sv = spread_svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0)) {
    throw Error(ErrorKind::kDegenerateGeometry,
                "kabsch: source points are coincident or collinear");
  }

  const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  if ((v * u.transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Mat3 r = v * d * u.transpose();
  return RigidTransform(r, ct - r * cs);
}

TimedPointCloud apply_transform(const TimedPointCloud& cloud, const RigidTransform& t) {
  TimedPointCloud out = cloud;
  for (auto& p : out.points) p = t.apply(p);
  return out;
}

IcpResult icp(const TimedPointCloud& source, const TimedPointCloud& target,
              const IcpConfig& config) {
  config.validate();
  if (source.empty() || target.empty()) {
    throw Error(ErrorKind::kPrecondition, "icp needs non-empty clouds");
  }
  const SpatialIndex index(target.points);
  const std::size_t n = source.size();

  IcpResult result;
  std::vector<Vec3> moved(n);
  std::vector<Neighbor> matches(n);
  double previous = std::numeric_limits<double>::infinity();

  for (std::size_t iter = 0;; ++iter) {
    for (std::size_t i = 0; i < n; ++i) moved[i] = result.transform.apply(source.points[i]);
    parallel_for(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) matches[i] = index.nearest(moved[i]);
    });

    std::vector<Vec3> src;
    std::vector<Vec3> dst;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (matches[i].distance <= config.max_correspondence_dist) {
        src.push_back(moved[i]);
        dst.push_back(target.points[matches[i].index]);
        sum += matches[i].distance;
      }
    }
    if (src.empty()) {
      throw Error(ErrorKind::kRegistrationFailure,
                  "icp: no correspondences within " +
                      std::to_string(config.max_correspondence_dist) + " m at iteration " +
                      std::to_string(iter));
    }
    const double mean = sum / static_cast<double>(src.size());
    result.residual_history.push_back(mean);
    result.residual = mean;

    if (std::abs(previous - mean) < config.convergence_tol || iter >= config.max_iterations) {
      break;
    }
    previous = mean;
    result.transform = kabsch(src, dst) * result.transform;
    result.iterations = iter + 1;
  }
  return result;
}

}  // namespace lif
