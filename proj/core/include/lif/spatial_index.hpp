#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lif/types.hpp"

namespace lif {

/// Squared Euclidean distance, summed x, y, z in that order. Every exact
/// comparison in the library goes through this function.
inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

struct Neighbor {
  std::size_t index;
  double distance;
};

/// Exact KD-tree over a copy of the given points.
///
/// All queries return exactly what a linear scan would: distances are
/// sqrt(squared_distance), ties are broken by the lowest point index and the
/// radius query is inclusive. The index is immutable once built, so any number
/// of threads may query it concurrently.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  explicit SpatialIndex(std::span<const Vec3> points);

  static SpatialIndex build(std::span<const Vec3> points) { return SpatialIndex(points); }

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const std::vector<Vec3>& points() const noexcept { return points_; }

  /// Throws Error(kEmptyIndex) on an empty index.
  Neighbor nearest(const Vec3& query) const;

  /// The k closest points ordered by (distance, index). Throws
  /// Error(kOutOfRange) unless 1 <= k <= size().
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;

  /// Indices with distance <= r, ascending by index. Throws
  /// Error(kPrecondition) for r < 0 or non-finite r.
  std::vector<std::size_t> radius(const Vec3& query, double r) const;

 private:
  struct Node {
    double split = 0.0;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;   // -1 marks a leaf
    std::int32_t right = -1;
    std::uint8_t axis = 0;
  };

  std::int32_t build_node(std::uint32_t begin, std::uint32_t end);

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace lif
