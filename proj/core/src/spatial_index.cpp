#include "lif/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <utility>

namespace lif {
namespace {

constexpr std::uint32_t kLeafSize = 12;

// (squared distance, index), compared lexicographically so ties resolve to
// the lowest index.
using Candidate = std::pair<double, std::size_t>;

}  // namespace

SpatialIndex::SpatialIndex(std::span<const Vec3> points)
    : points_(points.begin(), points.end()) {
  if (!all_finite(points_)) {
    throw Error(ErrorKind::kInvalidValue, "spatial index: non-finite point");
  }
  if (points_.size() > std::numeric_limits<std::uint32_t>::max() / 2) {
    throw Error(ErrorKind::kOutOfRange, "spatial index: too many points");
  }
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    build_node(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t SpatialIndex::build_node(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{0.0, begin, end, -1, -1, 0});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = points_[order_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  Eigen::Index axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] - lo[axis] <= 0.0) return id;  // all coincident; keep as leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  const auto less = [&](std::uint32_t a, std::uint32_t b) {
    const double ca = points_[a][axis];
    const double cb = points_[b][axis];
    return ca < cb || (ca == cb && a < b);
  };
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, less);

  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build_node(begin, mid);
  const std::int32_t right = build_node(mid, end);
  Node& node = nodes_[static_cast<std::size_t>(id)];
  node.split = split;
  node.axis = static_cast<std::uint8_t>(axis);
  node.left = left;
  node.right = right;
  return id;
}

Neighbor SpatialIndex::nearest(const Vec3& query) const {
  if (empty()) throw Error(ErrorKind::kEmptyIndex, "nearest() on an empty index");
  Candidate best{std::numeric_limits<double>::infinity(), 0};

  // Explicit stack of (node, lower bound on squared distance).
  std::vector<std::pair<std::int32_t, double>> stack;
  stack.reserve(64);
  stack.emplace_back(0, 0.0);
  while (!stack.empty()) {
    const auto [id, bound] = stack.back();
    stack.pop_back();
    if (bound > best.first) continue;
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const Candidate c{squared_distance(points_[order_[i]], query), order_[i]};
        if (c < best) best = c;
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    stack.emplace_back(far, diff * diff);
    stack.emplace_back(near, bound);
  }
  return {best.second, std::sqrt(best.first)};
}

std::vector<Neighbor> SpatialIndex::knn(const Vec3& query, std::size_t k) const {
  if (empty()) throw Error(ErrorKind::kEmptyIndex, "knn() on an empty index");
  if (k < 1 || k > size()) {
    throw Error(ErrorKind::kOutOfRange, "knn: k=" + std::to_string(k) +
                                            " outside [1, " + std::to_string(size()) + "]");
  }
  std::priority_queue<Candidate> heap;  // max-heap: worst candidate on top

  std::vector<std::pair<std::int32_t, double>> stack;
  stack.reserve(64);
  stack.emplace_back(0, 0.0);
  while (!stack.empty()) {
    const auto [id, bound] = stack.back();
    stack.pop_back();
    if (heap.size() == k && bound > heap.top().first) continue;
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const Candidate c{squared_distance(points_[order_[i]], query), order_[i]};
        if (heap.size() < k) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    stack.emplace_back(far, diff * diff);
    stack.emplace_back(near, bound);
  }

  std::vector<Neighbor> out(heap.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = {heap.top().second, std::sqrt(heap.top().first)};
    heap.pop();
  }
  return out;
}

std::vector<std::size_t> SpatialIndex::radius(const Vec3& query, double r) const {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw Error(ErrorKind::kPrecondition, "radius query needs finite r >= 0");
  }
  std::vector<std::size_t> out;
  if (empty()) return out;

  std::vector<std::int32_t> stack;
  stack.reserve(64);
  stack.push_back(0);
  while (!stack.empty()) {
    const std::int32_t id = stack.back();
    stack.pop_back();
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        if (std::sqrt(squared_distance(points_[order_[i]], query)) <= r) {
          out.push_back(order_[i]);
        }
      }
      continue;
    }
    const double diff = query[node.axis] - node.split;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    if (std::sqrt(diff * diff) <= r) stack.push_back(far);
    stack.push_back(near);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace lif
