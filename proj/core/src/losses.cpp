#include "lif/losses.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "lif/parallel.hpp"
#include "lif/spectral.hpp"

namespace lif {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void check_aligned(const TimedPointCloud& source, const FlowField& flow) {
  if (flow.size() != source.size()) {
    throw Error(ErrorKind::kPrecondition,
                "flow length " + std::to_string(flow.size()) + " != source size " +
                    std::to_string(source.size()));
  }
}

// Principal eigenpair for the soft loss. Power iteration handles the usual
// well-separated case; a nearly degenerate top pair can stall it, in which
// case the dense symmetric solver takes over.
EigenPair soft_cluster_eig(const Eigen::MatrixXd& a) {
  try {
    return principal_eig(a);
  } catch (const NonConvergenceError&) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    EigenPair out;
    const Eigen::Index top = a.rows() - 1;
    out.value = solver.eigenvalues()(top);
    out.vector = solver.eigenvectors().col(top);
    out.residual = (a * out.vector - out.value * out.vector).norm();
    return out;
  }
}

}  // namespace

void LossConfig::validate() const {
  if (!(theta > 0.0)) throw Error(ErrorKind::kPrecondition, "theta must be > 0");
  if (!(reward_floor > 0.0 && reward_floor < 1.0)) {
    throw Error(ErrorKind::kPrecondition, "reward_floor must lie in (0, 1)");
  }
  if (!(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0)) {
    throw Error(ErrorKind::kPrecondition, "loss weights must be >= 0");
  }
  if (edge_budget < 1) throw Error(ErrorKind::kPrecondition, "edge_budget must be >= 1");
}

RewardDerivative reward_derivative(const Vec3& p_i, const Vec3& p_j, const Vec3& f_i,
                                   const Vec3& f_j, double theta, RewardForm form) {
  RewardDerivative out;
  const Vec3 before = p_i - p_j;
  const Vec3 after = (p_i + f_i) - (p_j + f_j);
  if (form == RewardForm::kEuclidean) {
    const double len = after.norm();
    const double delta = before.norm() - len;
    out.raw = 1.0 - delta * delta / theta;
    // Subgradient 0 when the warped points coincide.
    if (len > 0.0) out.d_fi = (2.0 * delta / (theta * len)) * after;
    return out;
  }
  double sum = 0.0;
  for (int u = 0; u < 3; ++u) {
    const double delta = std::abs(before[u]) - std::abs(after[u]);
    sum += delta * delta;
    out.d_fi[u] = 2.0 * delta * sign(after[u]) / theta;
  }
  out.raw = 1.0 - sum / theta;
  return out;
}

double reward(const Vec3& p_i, const Vec3& p_j, const Vec3& f_i, const Vec3& f_j, double theta,
              RewardForm form) {
  if (!(theta > 0.0)) throw Error(ErrorKind::kPrecondition, "theta must be > 0");
  return std::clamp(reward_derivative(p_i, p_j, f_i, f_j, theta, form).raw, 0.0, 1.0);
}

TermValue distance_loss(const TimedPointCloud& source, const FlowField& flow,
                        const TimedPointCloud& target, const SpatialIndex& target_index,
                        DistanceNorm norm, const SpatialIndex* warped_index) {
  check_aligned(source, flow);
  if (source.empty() || target.empty()) {
    throw Error(ErrorKind::kPrecondition, "distance loss needs non-empty clouds");
  }
  if (target_index.size() != target.size()) {
    throw Error(ErrorKind::kPrecondition, "target index does not match target cloud");
  }
  const std::size_t n = source.size();
  const std::size_t m = target.size();

  std::vector<Vec3> warped(n);
  for (std::size_t i = 0; i < n; ++i) warped[i] = source.points[i] + flow.vectors[i];

  SpatialIndex rebuilt;
  if (warped_index == nullptr) {
    rebuilt = SpatialIndex(warped);
    warped_index = &rebuilt;
  } else if (warped_index->size() != n) {
    throw Error(ErrorKind::kPrecondition, "warped index does not match source size");
  }

  std::vector<std::size_t> forward(n);
  std::vector<std::size_t> backward(m);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) forward[i] = target_index.nearest(warped[i]).index;
  });
  parallel_for(m, [&](std::size_t b, std::size_t e) {
    for (std::size_t q = b; q < e; ++q) backward[q] = warped_index->nearest(target.points[q]).index;
  });

  TermValue out;
  out.grad.assign(n, Vec3::Zero());
  const double inv_n = 1.0 / static_cast<double>(n);
  const double inv_m = 1.0 / static_cast<double>(m);
  double fwd = 0.0;
  double bwd = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = warped[i] - target.points[forward[i]];
    if (norm == DistanceNorm::kSquared) {
      fwd += d.dot(d);
      out.grad[i] += (2.0 * inv_n) * d;
    } else {
      const double len = d.norm();
      fwd += len;
      if (len > 0.0) out.grad[i] += (inv_n / len) * d;
    }
  }
  for (std::size_t q = 0; q < m; ++q) {
    const std::size_t j = backward[q];
    const Vec3 d = target.points[q] - warped[j];
    if (norm == DistanceNorm::kSquared) {
      bwd += d.dot(d);
      out.grad[j] -= (2.0 * inv_m) * d;
    } else {
      const double len = d.norm();
      bwd += len;
      if (len > 0.0) out.grad[j] -= (inv_m / len) * d;
    }
  }
  out.value = fwd * inv_n + bwd * inv_m;
  return out;
}

TermValue hard_rigidity_loss(const TimedPointCloud& source, const FlowField& flow,
                             const HardClustering& hard, const LossConfig& config,
                             std::uint64_t evaluation) {
  config.validate();
  check_aligned(source, flow);
  if (hard.size() != source.size()) {
    throw Error(ErrorKind::kPrecondition, "hard labels not aligned with source");
  }
  const auto clusters = hard.members();
  const auto& p = source.points;
  const auto& f = flow.vectors;

  TermValue out;
  out.grad.assign(source.size(), Vec3::Zero());
  std::vector<double> values(clusters.size(), 0.0);

  // Clusters are disjoint, so each task writes only its own members' slots.
  parallel_for(clusters.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c) {
      const auto& mem = clusters[c];
      const std::size_t n = mem.size();
      if (n < 2) continue;
      const std::size_t total_edges = n * (n - 1) / 2;
      const bool sampled = total_edges > config.edge_budget;
      const std::size_t edges = sampled ? config.edge_budget : total_edges;
      const double inv_edges = 1.0 / static_cast<double>(edges);

      double sum = 0.0;
      auto accumulate = [&](std::size_t a, std::size_t bb) {
        const std::size_t i = mem[a];
        const std::size_t j = mem[bb];
        const RewardDerivative rd = reward_derivative(p[i], p[j], f[i], f[j], config.theta,
                                                      config.reward_form);
        const double r = std::min(rd.raw, 1.0);
        if (r <= config.reward_floor) {
          sum += -std::log(config.reward_floor);
          return;
        }
        sum += -std::log(r);
        const Vec3 g = (-inv_edges / r) * rd.d_fi;
        out.grad[i] += g;
        out.grad[j] -= g;
      };

      if (!sampled) {
        for (std::size_t a = 0; a + 1 < n; ++a) {
          for (std::size_t bb = a + 1; bb < n; ++bb) accumulate(a, bb);
        }
      } else {
        std::mt19937_64 rng(splitmix64(config.rng_seed ^ splitmix64(evaluation ^ splitmix64(c))));
        std::uniform_int_distribution<std::size_t> first(0, n - 1);
        std::uniform_int_distribution<std::size_t> second(0, n - 2);
        for (std::size_t s = 0; s < edges; ++s) {
          const std::size_t a = first(rng);
          std::size_t bb = second(rng);
          if (bb >= a) ++bb;
          accumulate(a, bb);
        }
      }
      values[c] = sum * inv_edges;
    }
  }, 4);

  for (double v : values) out.value += v;
  return out;
}

TermValue soft_rigidity_loss(const TimedPointCloud& source, const FlowField& flow,
                             std::span<const SoftCluster> soft, const LossConfig& config) {
  config.validate();
  check_aligned(source, flow);
  const auto& p = source.points;
  const auto& f = flow.vectors;

  TermValue out;
  out.grad.assign(source.size(), Vec3::Zero());
  if (soft.empty()) return out;

  const double inv_anchors = 1.0 / static_cast<double>(soft.size());
  std::vector<double> values(soft.size(), 0.0);
  // Per-anchor gradient contributions, scattered serially afterwards so the
  // overlapping writes happen in a fixed order.
  std::vector<std::vector<Vec3>> local(soft.size());

  parallel_for(soft.size(), [&](std::size_t b, std::size_t e) {
    Eigen::MatrixXd a;
    std::vector<RewardDerivative> pair_derivs;
    for (std::size_t s = b; s < e; ++s) {
      const auto& mem = soft[s].members;
      const auto n = static_cast<Eigen::Index>(mem.size());
      for (auto idx : mem) {
        if (idx >= p.size()) {
          throw Error(ErrorKind::kPrecondition, "soft cluster member out of range");
        }
      }
      a.setIdentity(n, n);
      pair_derivs.resize(static_cast<std::size_t>(n * n));
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
          const auto pi = mem[static_cast<std::size_t>(i)];
          const auto pj = mem[static_cast<std::size_t>(j)];
          const RewardDerivative rd = reward_derivative(p[pi], p[pj], f[pi], f[pj], config.theta,
                                                        config.reward_form);
          pair_derivs[static_cast<std::size_t>(i * n + j)] = rd;
          a(i, j) = a(j, i) = std::clamp(rd.raw, 0.0, 1.0);
        }
      }
      const EigenPair eig = soft_cluster_eig(a);
      const double lambda = eig.value;
      auto& g = local[s];
      g.assign(static_cast<std::size_t>(n), Vec3::Zero());
      if (lambda <= config.reward_floor) {
        values[s] = -std::log(config.reward_floor);
        continue;
      }
      values[s] = -std::log(lambda);
      const double coef = -inv_anchors / lambda;
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
          const RewardDerivative& rd = pair_derivs[static_cast<std::size_t>(i * n + j)];
          if (rd.raw <= 0.0 || rd.raw >= 1.0) continue;
          const Vec3 d = (coef * 2.0 * eig.vector(i) * eig.vector(j)) * rd.d_fi;
          g[static_cast<std::size_t>(i)] += d;
          g[static_cast<std::size_t>(j)] -= d;
        }
      }
    }
  }, 16);

  double sum = 0.0;
  for (std::size_t s = 0; s < soft.size(); ++s) {
    sum += values[s];
    const auto& mem = soft[s].members;
    for (std::size_t i = 0; i < mem.size(); ++i) out.grad[mem[i]] += local[s][i];
  }
  out.value = sum * inv_anchors;
  return out;
}

LossReport total_loss(const TimedPointCloud& source, const FlowField& flow,
                      const TimedPointCloud& target, const HardClustering& hard,
                      std::span<const SoftCluster> soft, const SpatialIndex& target_index,
                      const LossConfig& config, TermMask mask, std::uint64_t evaluation,
                      const SpatialIndex* warped_index) {
  config.validate();
  check_aligned(source, flow);
  LossReport report;
  report.gradient.assign(source.size(), Vec3::Zero());

  auto add = [&](const TermValue& term, double weight, double& slot) {
    slot = term.value;
    for (std::size_t i = 0; i < report.gradient.size(); ++i) {
      report.gradient[i] += weight * term.grad[i];
    }
  };
  if (mask.dist) {
    add(distance_loss(source, flow, target, target_index, config.distance_norm, warped_index),
        config.alpha, report.dist_term);
  }
  if (mask.hard) {
    add(hard_rigidity_loss(source, flow, hard, config, evaluation), config.beta,
        report.hard_term);
  }
  if (mask.soft) {
    add(soft_rigidity_loss(source, flow, soft, config), config.gamma, report.soft_term);
  }
  report.total = config.alpha * report.dist_term + config.beta * report.hard_term +
                 config.gamma * report.soft_term;
  return report;
}

}  // namespace lif
