#include "lif/clustering.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <unordered_map>

#include "lif/parallel.hpp"

namespace lif {

DisjointSets::DisjointSets(std::size_t n) : parent_(n) {
  for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
}

std::size_t DisjointSets::find(std::size_t x) {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

void DisjointSets::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return;
  if (a < b) {
    parent_[b] = a;
  } else {
    parent_[a] = b;
  }
}

std::vector<std::vector<std::size_t>> HardClustering::members() const {
  std::vector<std::vector<std::size_t>> out(num_clusters);
  for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(i);
  return out;
}

void HardClustering::validate() const {
  std::vector<char> used(num_clusters, 0);
  for (auto l : labels) {
    if (l >= num_clusters) {
      throw Error(ErrorKind::kInvalidValue, "hard clustering label out of range");
    }
    used[l] = 1;
  }
  if (std::find(used.begin(), used.end(), 0) != used.end()) {
    throw Error(ErrorKind::kInvalidValue, "hard clustering labels are not compact");
  }
}

void ClusterConfig::validate() const {
  if (!(radius >= 0.0) || horizon < 1 || k < 1) {
    throw Error(ErrorKind::kPrecondition, "cluster config needs radius >= 0, horizon >= 1, k >= 1");
  }
  if (!(merge_vote_fraction > 0.5 && merge_vote_fraction <= 1.0)) {
    throw Error(ErrorKind::kPrecondition, "merge_vote_fraction must lie in (0.5, 1]");
  }
  if (!(merge_dist_cap >= 0.0) || merge_period < 1) {
    throw Error(ErrorKind::kPrecondition, "merge_dist_cap must be >= 0 and merge_period >= 1");
  }
}

template <typename Label>
HardClustering relabel_compact(std::span<const Label> labels) {
  HardClustering out;
  out.labels.resize(labels.size());
  std::map<Label, std::uint32_t> remap;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto [it, inserted] =
        remap.try_emplace(labels[i], static_cast<std::uint32_t>(remap.size()));
    out.labels[i] = it->second;
  }
  out.num_clusters = remap.size();
  return out;
}

template HardClustering relabel_compact<std::uint32_t>(std::span<const std::uint32_t>);
template HardClustering relabel_compact<std::size_t>(std::span<const std::size_t>);
template HardClustering relabel_compact<int>(std::span<const int>);

HardClustering euclidean_clusters(std::span<const Vec3> points, double radius) {
  if (!(radius >= 0.0)) {
    throw Error(ErrorKind::kPrecondition, "euclidean_clusters needs radius >= 0");
  }
  const std::size_t n = points.size();
  if (n == 0) return {};
  const SpatialIndex index(points);

  std::vector<std::vector<std::size_t>> neighbours(n);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) neighbours[i] = index.radius(points[i], radius);
  });

  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto j : neighbours[i]) sets.unite(i, j);
  }
  std::vector<std::size_t> roots(n);
  for (std::size_t i = 0; i < n; ++i) roots[i] = sets.find(i);
  return relabel_compact<std::size_t>(roots);
}

HardClustering spatiotemporal_hard_clusters(std::span<const TimedPointCloud> window,
                                            const ClusterConfig& config) {
  config.validate();
  if (window.empty()) {
    throw Error(ErrorKind::kPrecondition, "spatiotemporal clustering needs a non-empty window");
  }
  const std::size_t first = window.size() > config.horizon ? window.size() - config.horizon : 0;
  std::vector<Vec3> all;
  for (std::size_t f = first; f < window.size(); ++f) {
    all.insert(all.end(), window[f].points.begin(), window[f].points.end());
  }
  const HardClustering joint = euclidean_clusters(all, config.radius);
  const std::size_t offset = all.size() - window.back().size();
  return relabel_compact<std::uint32_t>(
      std::span<const std::uint32_t>(joint.labels).subspan(offset));
}

std::vector<SoftCluster> soft_clusters(const SpatialIndex& index, std::size_t k) {
  if (k < 1 || index.size() < k + 1) {
    throw Error(ErrorKind::kPrecondition,
                "soft clusters need at least k+1 = " + std::to_string(k + 1) +
                    " points, got " + std::to_string(index.size()));
  }
  const auto& points = index.points();
  std::vector<SoftCluster> out(points.size());
  parallel_for(points.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t m = b; m < e; ++m) {
      // Ask for k+1 and drop the anchor; with duplicated points the anchor
      // may not come first, so filter by index rather than position.
      const auto nn = index.knn(points[m], k + 1);
      SoftCluster& sc = out[m];
      sc.anchor = m;
      sc.members.reserve(k + 1);
      sc.members.push_back(m);
      for (const auto& nb : nn) {
        if (nb.index != m && sc.members.size() < k + 1) sc.members.push_back(nb.index);
      }
    }
  });
  return out;
}

std::vector<SoftCluster> soft_clusters(const TimedPointCloud& cloud, std::size_t k) {
  if (k < 1 || cloud.size() < k + 1) {
    throw Error(ErrorKind::kPrecondition,
                "soft clusters need at least k+1 = " + std::to_string(k + 1) +
                    " points, got " + std::to_string(cloud.size()));
  }
  return soft_clusters(SpatialIndex(cloud.points), k);
}

HardClustering merge_clusters(const HardClustering& hard, std::span<const Vec3> source,
                              const FlowField& flow, const HardClustering& target_clusters,
                              const SpatialIndex& target_index, const ClusterConfig& config) {
  if (hard.size() != source.size() || flow.size() != source.size()) {
    throw Error(ErrorKind::kPrecondition, "merge_clusters: labels/flow not aligned with source");
  }
  if (target_clusters.size() != target_index.size()) {
    throw Error(ErrorKind::kPrecondition, "merge_clusters: target labels not aligned with target");
  }
  if (target_index.empty()) return hard;

  const std::size_t n = source.size();
  std::vector<Neighbor> hits(n);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) hits[i] = target_index.nearest(source[i] + flow.vectors[i]);
  });

  // votes[cluster][target cluster] = count
  std::vector<std::map<std::uint32_t, std::size_t>> votes(hard.num_clusters);
  std::vector<std::size_t> cast(hard.num_clusters, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (hits[i].distance <= config.merge_dist_cap) {
      const auto c = hard.labels[i];
      ++votes[c][target_clusters.labels[hits[i].index]];
      ++cast[c];
    }
  }

  DisjointSets sets(hard.num_clusters);
  std::unordered_map<std::uint32_t, std::size_t> first_claim;  // target cluster -> hard cluster
  for (std::size_t c = 0; c < hard.num_clusters; ++c) {
    if (cast[c] == 0) continue;
    for (const auto& [target, count] : votes[c]) {
      if (static_cast<double>(count) >= config.merge_vote_fraction * static_cast<double>(cast[c])) {
        const auto [it, inserted] = first_claim.try_emplace(target, c);
        if (!inserted) sets.unite(it->second, c);
        break;  // a fraction above one half admits at most one winner
      }
    }
  }

  std::vector<std::size_t> roots(n);
  for (std::size_t i = 0; i < n; ++i) roots[i] = sets.find(hard.labels[i]);
  return relabel_compact<std::size_t>(roots);
}

}  // namespace lif
