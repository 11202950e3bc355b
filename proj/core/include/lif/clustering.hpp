#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lif/spatial_index.hpp"
#include "lif/types.hpp"

namespace lif {

/// Partition of a cloud into non-overlapping rigid-cluster hypotheses.
/// Labels are compact: exactly {0, ..., num_clusters - 1} are used.
struct HardClustering {
  std::vector<std::uint32_t> labels;
  std::size_t num_clusters = 0;

  std::size_t size() const noexcept { return labels.size(); }
  /// Member indices of every cluster, each list ascending.
  std::vector<std::vector<std::size_t>> members() const;
  void validate() const;
};

/// A point's k-nearest-neighbour neighbourhood. members[0] is the anchor,
/// followed by its k neighbours ordered by (distance, index).
struct SoftCluster {
  std::size_t anchor = 0;
  std::vector<std::size_t> members;
};

struct ClusterConfig {
  double radius = 0.3;               // m; 0 yields singletons
  std::size_t horizon = 5;           // frames
  std::size_t k = 16;                // soft-cluster neighbours
  double merge_vote_fraction = 0.6;  // in (0.5, 1]
  double merge_dist_cap = 0.5;       // m
  std::size_t merge_period = 100;    // optimizer iterations

  void validate() const;
};

/// Relabels to {0..C-1}, preserving equivalence classes, with clusters
/// numbered by their lowest member index.
template <typename Label>
HardClustering relabel_compact(std::span<const Label> labels);
extern template HardClustering relabel_compact<std::uint32_t>(std::span<const std::uint32_t>);
extern template HardClustering relabel_compact<std::size_t>(std::span<const std::size_t>);
extern template HardClustering relabel_compact<int>(std::span<const int>);

/// Connected components of the graph joining points at distance <= radius.
HardClustering euclidean_clusters(std::span<const Vec3> points, double radius);

/// Clusters the concatenation of all frames in `window` (ego-compensated,
/// last frame = source cloud) and returns the labels of the last frame's
/// points, re-compacted.
HardClustering spatiotemporal_hard_clusters(std::span<const TimedPointCloud> window,
                                            const ClusterConfig& config);

/// One soft cluster per point. Throws Error(kPrecondition) when the cloud has
/// fewer than k + 1 points.
std::vector<SoftCluster> soft_clusters(const TimedPointCloud& cloud, std::size_t k);
std::vector<SoftCluster> soft_clusters(const SpatialIndex& index, std::size_t k);

/// Flow-guided merge. Every source point whose warped position lands within
/// merge_dist_cap of a target point votes for that target point's cluster; a
/// hard cluster is assigned the target cluster receiving at least
/// merge_vote_fraction of its votes, and hard clusters assigned to the same
/// target cluster are fused. The result is never finer than `hard`.
HardClustering merge_clusters(const HardClustering& hard, std::span<const Vec3> source,
                              const FlowField& flow, const HardClustering& target_clusters,
                              const SpatialIndex& target_index, const ClusterConfig& config);

/// Minimal union-find with path halving and union by lower root index, so the
/// representative of each set is its lowest element.
class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n);
  std::size_t find(std::size_t x);
  void unite(std::size_t a, std::size_t b);

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace lif
