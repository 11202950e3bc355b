#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lif/clustering.hpp"
#include "lif/spatial_index.hpp"
#include "lif/types.hpp"

namespace lif {

enum class DistanceNorm { kSquared, kPlain };

/// How an edge's length is compared before and after the flow.
enum class RewardForm {
  kEuclidean,  // (|p_i - p_j| - |w_i - w_j|)^2, invariant to rigid motion
  kPerAxis,    // sum over axes of (|p_i^u - p_j^u| - |w_i^u - w_j^u|)^2, invariant to translation only
};

struct LossConfig {
  double alpha = 1.0;  // distance term weight
  double beta = 1.0;   // hard rigidity weight
  double gamma = 1.0;  // soft rigidity weight
  double theta = 0.03;  // m^2, reward scale
  double reward_floor = 1e-6;
  std::size_t edge_budget = 2048;  // sampled edges per hard cluster when exceeded
  std::uint64_t rng_seed = 0;
  DistanceNorm distance_norm = DistanceNorm::kSquared;
  RewardForm reward_form = RewardForm::kEuclidean;

  void validate() const;
};

/// Value and gradient of one loss term; grad is aligned with the flow.
struct TermValue {
  double value = 0.0;
  std::vector<Vec3> grad;
};

struct LossReport {
  double total = 0.0;
  double dist_term = 0.0;
  double hard_term = 0.0;
  double soft_term = 0.0;
  std::vector<Vec3> gradient;
};

/// Which terms total_loss evaluates. Disabled terms are skipped and
/// contribute zero.
struct TermMask {
  bool dist = true;
  bool hard = true;
  bool soft = true;
};

/// Rigidity reward of an edge: one minus the squared change of the edge
/// length (or of its per-axis extents) divided by theta, clipped to [0, 1].
/// w = p + f.
double reward(const Vec3& p_i, const Vec3& p_j, const Vec3& f_i, const Vec3& f_j, double theta,
              RewardForm form = RewardForm::kEuclidean);

/// Unclipped reward and its derivative with respect to f_i (the derivative
/// with respect to f_j is the negation).
struct RewardDerivative {
  double raw = 1.0;
  Vec3 d_fi = Vec3::Zero();
};
RewardDerivative reward_derivative(const Vec3& p_i, const Vec3& p_j, const Vec3& f_i,
                                   const Vec3& f_j, double theta,
                                   RewardForm form = RewardForm::kEuclidean);

/// Bidirectional nearest-neighbour (Chamfer) distance between the warped
/// source P + F and Q: mean forward term plus mean backward term. Nearest
/// neighbours are treated as constants for the gradient. `warped_index`, if
/// given, is used for the backward matches instead of an index rebuilt over
/// P + F.
TermValue distance_loss(const TimedPointCloud& source, const FlowField& flow,
                        const TimedPointCloud& target, const SpatialIndex& target_index,
                        DistanceNorm norm = DistanceNorm::kSquared,
                        const SpatialIndex* warped_index = nullptr);

/// Sum over hard clusters of the mean -log(max(r, floor)) over the cluster's
/// complete edge set, or over edge_budget uniformly sampled edges when the
/// complete set is larger. `evaluation` selects the sample stream, so a fixed
/// (rng_seed, evaluation) pair reproduces the same edges.
TermValue hard_rigidity_loss(const TimedPointCloud& source, const FlowField& flow,
                             const HardClustering& hard, const LossConfig& config,
                             std::uint64_t evaluation = 0);

/// Mean over anchors of -log(max(lambda_m, floor)) where lambda_m is the
/// principal eigenvalue of the anchor's reward matrix. The gradient uses
/// d lambda = v^T dA v with the eigenvector held fixed.
TermValue soft_rigidity_loss(const TimedPointCloud& source, const FlowField& flow,
                             std::span<const SoftCluster> soft, const LossConfig& config);

/// alpha * dist + beta * hard + gamma * soft, with the matching gradient.
LossReport total_loss(const TimedPointCloud& source, const FlowField& flow,
                      const TimedPointCloud& target, const HardClustering& hard,
                      std::span<const SoftCluster> soft, const SpatialIndex& target_index,
                      const LossConfig& config, TermMask mask = {},
                      std::uint64_t evaluation = 0, const SpatialIndex* warped_index = nullptr);

}  // namespace lif
