#include "lif/optimize.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <string>
#include <thread>

namespace lif {

void AdamState::reset(std::size_t n) {
  first_moment.assign(n, Vec3::Zero());
  second_moment.assign(n, Vec3::Zero());
  step_count = 0;
}

void adam_step(AdamState& state, std::span<Vec3> params, std::span<const Vec3> grads) {
  if (params.size() != grads.size()) {
    throw Error(ErrorKind::kPrecondition, "adam_step: params and grads differ in length");
  }
  if (state.step_count == 0 && state.first_moment.empty()) state.reset(params.size());
  if (state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw Error(ErrorKind::kPrecondition, "adam_step: moment shape mismatch");
  }
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Vec3& m = state.first_moment[i];
    Vec3& v = state.second_moment[i];
    const Vec3& g = grads[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    const Vec3 m_hat = m / bc1;
    const Vec3 v_hat = v / bc2;
    params[i] -= state.lr * m_hat.cwiseQuotient((v_hat.cwiseSqrt().array() + state.epsilon).matrix());
  }
}

void RunConfig::validate() const {
  if (max_iterations < 1) throw Error(ErrorKind::kPrecondition, "max_iterations must be >= 1");
  if (!(convergence_tol >= 0.0) || convergence_window < 1) {
    throw Error(ErrorKind::kPrecondition, "convergence settings invalid");
  }
  if (!(lr > 0.0)) throw Error(ErrorKind::kPrecondition, "lr must be > 0");
  if (index_rebuild_period < 1) {
    throw Error(ErrorKind::kPrecondition, "index_rebuild_period must be >= 1");
  }
  loss.validate();
  cluster.validate();
  icp.validate();
}

namespace {

bool converged(const std::vector<LossSummary>& trace, std::size_t since, std::size_t window,
               double tol) {
  if (tol <= 0.0) return false;
  const std::size_t t = trace.size();
  if (t < since + 2 * window) return false;
  double recent = 0.0;
  double earlier = 0.0;
  for (std::size_t i = t - window; i < t; ++i) recent += trace[i].total;
  for (std::size_t i = t - 2 * window; i < t - window; ++i) earlier += trace[i].total;
  recent /= static_cast<double>(window);
  earlier /= static_cast<double>(window);
  return std::abs(recent - earlier) <= tol * std::max(std::abs(earlier), 1e-12);
}

}  // namespace

RunResult run_pair(std::span<const TimedPointCloud> p_window, const TimedPointCloud& q,
                   std::span<const TimedPointCloud> q_window, const RunConfig& config) {
  config.validate();
  if (p_window.empty()) throw Error(ErrorKind::kPrecondition, "run_pair: empty source window");
  const TimedPointCloud& p = p_window.back();
  if (p.empty() || q.empty()) throw Error(ErrorKind::kPrecondition, "run_pair: empty cloud");
  p.validate();
  q.validate();
  const std::span<const TimedPointCloud> qw =
      q_window.empty() ? std::span<const TimedPointCloud>(&q, 1) : q_window;
  if (qw.back().size() != q.size()) {
    throw Error(ErrorKind::kPrecondition, "run_pair: q_window must end with q");
  }

  const SpatialIndex q_index(q.points);
  RunResult result;
  result.clusters = spatiotemporal_hard_clusters(p_window, config.cluster);

  std::vector<SoftCluster> soft;
  if (config.enable_soft && p.size() >= 2) {
    soft = soft_clusters(p, std::min(config.cluster.k, p.size() - 1));
  }
  HardClustering q_clusters;
  if (config.enable_merge) q_clusters = spatiotemporal_hard_clusters(qw, config.cluster);

  const TermMask mask{true, config.enable_hard, config.enable_soft};
  result.flow = FlowField::zeros(p.size());
  AdamState adam;
  adam.lr = config.lr;
  adam.reset(p.size());

  std::optional<SpatialIndex> warped_index;
  std::size_t since = 0;
  result.loss_trace.reserve(config.max_iterations);
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    const SpatialIndex* stale = nullptr;
    if (config.index_rebuild_period > 1) {
      if (it % config.index_rebuild_period == 0 || !warped_index) {
        std::vector<Vec3> warped(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) warped[i] = p.points[i] + result.flow.vectors[i];
        warped_index.emplace(warped);
      }
      stale = &*warped_index;
    }
    const LossReport report = total_loss(p, result.flow, q, result.clusters, soft, q_index,
                                         config.loss, mask, it, stale);
    result.loss_trace.push_back({report.total, report.dist_term, report.hard_term,
                                 report.soft_term, result.clusters.num_clusters});
    adam_step(adam, result.flow.vectors, report.gradient);
    result.iterations_run = it + 1;

    if (config.enable_merge && (it + 1) % config.cluster.merge_period == 0) {
      HardClustering merged = merge_clusters(result.clusters, p.points, result.flow, q_clusters,
                                             q_index, config.cluster);
      result.merge_events.push_back(
          {it + 1, result.clusters.num_clusters, merged.num_clusters});
      if (merged.num_clusters != result.clusters.num_clusters) {
        result.clusters = std::move(merged);
        since = it + 1;
        if (config.reinit_after_merge) {
          result.flow = FlowField::zeros(p.size());
          adam.reset(p.size());
        }
      }
    }
    if (converged(result.loss_trace, since, config.convergence_window, config.convergence_tol)) {
      break;
    }
  }
  return result;
}

bool SequenceOutcome::ok() const {
  return std::none_of(errors.begin(), errors.end(), [](const auto& e) { return e.has_value(); });
}

SequenceOutcome run_sequence_checked(std::span<const TimedPointCloud> frames,
                                     const RunConfig& config, int jobs) {
  config.validate();
  if (frames.size() < 2) {
    throw Error(ErrorKind::kPrecondition, "run_sequence needs at least two frames");
  }
  const std::size_t pairs = frames.size() - 1;
  const std::size_t horizon = config.cluster.horizon;

  auto wrap = [](std::size_t t, const Error& e) {
    return IndexedError(e.kind(), "pair " + std::to_string(t) + ": " + e.what(), t);
  };

  std::vector<RigidTransform> ego(pairs);
  std::vector<double> icp_residual(pairs, 0.0);
  std::vector<std::optional<Error>> icp_error(pairs);
  for (std::size_t t = 0; t < pairs && config.ego_compensate; ++t) {
    try {
      const IcpResult reg = icp(frames[t], frames[t + 1], config.icp);
      ego[t] = reg.transform;
      icp_residual[t] = reg.residual;
    } catch (const Error& e) {
      icp_error[t] = e;
    }
  }

  // Frame j expressed in frame `target`'s coordinates.
  auto in_frame = [&](std::size_t j, std::size_t target) {
    RigidTransform c;
    for (std::size_t s = j; s < target; ++s) c = ego[s] * c;
    return apply_transform(frames[j], c);
  };

  SequenceOutcome outcome;
  outcome.results.resize(pairs);
  outcome.errors.resize(pairs);

  auto run_one = [&](std::size_t t) {
    const std::size_t target = t + 1;
    const std::size_t first = t + 1 >= horizon ? t + 1 - horizon : 0;
    for (std::size_t s = first; s <= t; ++s) {
      if (icp_error[s]) {
        throw Error(icp_error[s]->kind(),
                    "ego-motion of pair " + std::to_string(s) + ": " + icp_error[s]->what());
      }
    }
    std::vector<TimedPointCloud> p_window;
    for (std::size_t j = first; j <= t; ++j) p_window.push_back(in_frame(j, target));
    std::vector<TimedPointCloud> q_window;
    for (std::size_t j = (target + 1 >= horizon ? target + 1 - horizon : 0); j <= target; ++j) {
      q_window.push_back(in_frame(j, target));
    }
    PairResult r;
    r.run = run_pair(p_window, q_window.back(), q_window, config);
    r.ego_motion = ego[t];
    r.icp_residual = icp_residual[t];
    r.source = std::move(p_window.back());
    outcome.results[t] = std::move(r);
  };

  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, pairs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < pairs; t = next++) {
      try {
        run_one(t);
      } catch (const Error& e) {
        outcome.errors[t] = wrap(t, e);
      } catch (const std::exception& e) {
        outcome.errors[t] = wrap(t, Error(ErrorKind::kPrecondition, e.what()));
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(worker);
  }
  return outcome;
}

std::vector<PairResult> run_sequence(std::span<const TimedPointCloud> frames,
                                     const RunConfig& config, int jobs) {
  SequenceOutcome outcome = run_sequence_checked(frames, config, jobs);
  std::vector<PairResult> results;
  results.reserve(outcome.results.size());
  for (std::size_t t = 0; t < outcome.results.size(); ++t) {
    if (outcome.errors[t]) throw *outcome.errors[t];
    results.push_back(std::move(*outcome.results[t]));
  }
  return results;
}

}  // namespace lif
