#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lif/clustering.hpp"
#include "lif/egomotion.hpp"
#include "lif/losses.hpp"
#include "lif/types.hpp"

namespace lif {

/// Adam moments and hyper-parameters for a per-point 3D parameter vector.
struct AdamState {
  std::vector<Vec3> first_moment;
  std::vector<Vec3> second_moment;
  std::uint64_t step_count = 0;
  double lr = 0.004;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void reset(std::size_t n);
};

/// One bias-corrected Adam update of `params` in place. Moments are sized
/// lazily on the first call; later shape changes throw Error(kPrecondition).
void adam_step(AdamState& state, std::span<Vec3> params, std::span<const Vec3> grads);

struct RunConfig {
  std::size_t max_iterations = 1500;
  /// Stop when the relative change between consecutive moving averages of
  /// the total loss (window `convergence_window`, compared one window apart)
  /// falls below this. Zero disables the test.
  double convergence_tol = 1e-6;
  std::size_t convergence_window = 25;
  LossConfig loss;
  ClusterConfig cluster;
  IcpConfig icp;
  double lr = 0.004;
  bool enable_hard = true;
  bool enable_soft = true;
  bool enable_merge = true;
  /// Restart from zero flow (and fresh Adam moments) after a merge changes
  /// the clustering.
  bool reinit_after_merge = false;
  /// Rebuild the warped-source index for the backward distance term every
  /// this many iterations.
  std::size_t index_rebuild_period = 1;
  /// run_sequence: estimate ego-motion with ICP for every pair.
  bool ego_compensate = true;

  void validate() const;
};

struct LossSummary {
  double total = 0.0;
  double dist = 0.0;
  double hard = 0.0;
  double soft = 0.0;
  std::size_t num_clusters = 0;
};

struct MergeEvent {
  std::size_t iteration = 0;
  std::size_t clusters_before = 0;
  std::size_t clusters_after = 0;
};

struct RunResult {
  FlowField flow;
  HardClustering clusters;
  std::vector<LossSummary> loss_trace;
  std::vector<MergeEvent> merge_events;
  std::size_t iterations_run = 0;
};

/// Joint flow and rigid segmentation for one pair. `p_window` ends with the
/// source cloud P and `q_window` with the target Q (an empty q_window means
/// {q}); both must already be ego-compensated into a common frame.
RunResult run_pair(std::span<const TimedPointCloud> p_window, const TimedPointCloud& q,
                   std::span<const TimedPointCloud> q_window, const RunConfig& config);

struct PairResult {
  RunResult run;
  /// Transform mapping frame t into frame t+1 (identity when ego
  /// compensation is off).
  RigidTransform ego_motion;
  double icp_residual = 0.0;
  /// Frame t expressed in frame t+1's coordinates; the flow is aligned with it.
  TimedPointCloud source;
};

/// Per-pair outcome of a sequence run: exactly one of result/error is set.
struct SequenceOutcome {
  std::vector<std::optional<PairResult>> results;
  std::vector<std::optional<IndexedError>> errors;

  bool ok() const;
};

/// Runs every consecutive pair of `frames`. Ego-motion is estimated once per
/// pair, windows of up to `horizon` frames are expressed in the target
/// frame's coordinates, and pairs are processed by up to `jobs` threads. A
/// pair whose window depends on a failed registration fails too. Errors are
/// recorded per pair (carrying the pair index) instead of thrown, so the
/// pairs that did complete remain usable.
SequenceOutcome run_sequence_checked(std::span<const TimedPointCloud> frames,
                                     const RunConfig& config, int jobs = 1);

/// run_sequence_checked, rethrowing the lowest-index pair error.
std::vector<PairResult> run_sequence(std::span<const TimedPointCloud> frames,
                                     const RunConfig& config, int jobs = 1);

}  // namespace lif
