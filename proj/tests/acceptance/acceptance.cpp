// Acceptance harness: one PASS/FAIL line per criterion. `--only N` runs a
// single criterion; the exit status is 0 iff every criterion that ran passed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli/commands.hpp"
#include "lif/egomotion.hpp"
#include "lif/losses.hpp"
#include "lif/metrics.hpp"
#include "lif/optimize.hpp"
#include "lif/spatial_index.hpp"
#include "lif/spectral.hpp"
#include "lif/synth.hpp"
#include "oracles.hpp"

using namespace lif;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

TimedPointCloud cloud_of(std::vector<Vec3> pts) {
  TimedPointCloud c;
  c.points = std::move(pts);
  return c;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Last pair of a synthetic sequence, every frame in the clustering windows.
RunResult run_last_pair(const std::vector<TimedPointCloud>& frames, const RunConfig& cfg) {
  const std::span<const TimedPointCloud> all(frames);
  return run_pair(all.first(frames.size() - 1), frames.back(), all, cfg);
}

// Mean EPE over source points whose ground truth exceeds the dynamic threshold;
// nullopt when there are none.
std::optional<double> dynamic_epe(const TimedPointCloud& p, const FlowField& flow) {
  const MetricOptions opts;
  std::vector<std::uint8_t> mask;
  for (const Vec3& g : *p.gt_flow) mask.push_back(g.norm() > opts.dynamic_threshold ? 1 : 0);
  const FlowMetrics m = flow_metrics(flow.vectors, *p.gt_flow, mask, opts);
  if (!m.defined()) return std::nullopt;
  return m.epe;
}

Verdict gradients() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  const LossConfig cfg;
  const std::size_t k = 4;
  double worst_dist = 0.0, worst_hard = 0.0, worst_soft = 0.0;
  bool ok = true;
  int scenes = 0, skipped = 0;

  auto rel_err = [](const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      for (int u = 0; u < 3; ++u) {
        worst = std::max(worst, std::abs(a[i][u] - b[i][u]) / std::max(std::abs(b[i][u]), 1e-4));
      }
    }
    return worst;
  };

  while (scenes < 20) {
    const auto s = oracle::random_grad_scene(rng, 30, 3);
    const TimedPointCloud p = cloud_of(s.p);
    const auto soft = soft_clusters(p, k);
    std::vector<std::vector<std::size_t>> members;
    for (const auto& sc : soft) members.push_back(sc.members);

    // Exclude clip/floor boundaries and near-degenerate top eigenvalues.
    bool boundary = false;
    for (const auto& mem : members) {
      const std::size_t n = mem.size();
      std::vector<double> a(n * n, 1.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          const double r = oracle::euclid_reward(s.p[mem[i]], s.p[mem[j]], s.f[mem[i]],
                                                 s.f[mem[j]], cfg.theta);
          if (r < 1e-3) boundary = true;
          a[i * n + j] = a[j * n + i] = r;
        }
      }
      const auto spec = oracle::jacobi_eigen(a, n);
      if (spec.values[n - 1] - spec.values[n - 2] <= 1e-3) boundary = true;
    }
    if (boundary) {
      ++skipped;
      continue;
    }
    ++scenes;

    const SpatialIndex q_index(s.q);
    const FlowField f(s.f);
    const TermValue dist = distance_loss(p, f, cloud_of(s.q), q_index);
    const auto frozen = oracle::FrozenChamfer::at(s.p, s.f, s.q);
    const auto fd_dist =
        oracle::finite_difference([&](std::span<const Vec3> x) { return frozen.value(x); }, s.f);

    const TermValue hard =
        hard_rigidity_loss(p, f, relabel_compact<std::uint32_t>(s.labels), cfg);
    const auto fd_hard = oracle::finite_difference(
        [&](std::span<const Vec3> x) {
          return oracle::hard_loss(s.p, x, s.labels, cfg.theta, cfg.reward_floor);
        },
        s.f);

    const TermValue soft_term = soft_rigidity_loss(p, f, soft, cfg);
    const auto fd_soft = oracle::finite_difference(
        [&](std::span<const Vec3> x) {
          return oracle::soft_loss(s.p, x, members, cfg.theta, cfg.reward_floor);
        },
        s.f);

    worst_dist = std::max(worst_dist, rel_err(dist.grad, fd_dist));
    worst_hard = std::max(worst_hard, rel_err(hard.grad, fd_hard));
    worst_soft = std::max(worst_soft, rel_err(soft_term.grad, fd_soft));
  }
  ok = worst_dist <= 1e-4 && worst_hard <= 1e-4 && worst_soft <= 1e-3;
  const double secs = seconds_since(start);
  return {ok && secs < 30.0,
          fmt("20 scenes (%d redrawn), worst relative error dist %.2e hard %.2e soft %.2e, %.1fs",
              skipped, worst_dist, worst_hard, worst_soft, secs)};
}

Verdict spectral_oracle() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1002);
  const std::size_t n = 17;
  double worst_value = 0.0, worst_residual = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto raw = oracle::random_reward_matrix(n, rng);
    Eigen::MatrixXd a(n, n);
    for (std::size_t i = 0; i < n * n; ++i) a(i / n, i % n) = raw[i];
    const EigenPair e = principal_eig(RewardMatrix(a));
    const auto spec = oracle::jacobi_eigen(raw, n);
    worst_value = std::max(worst_value, std::abs(e.value - spec.values.back()));
    // Residual of the returned pair, recomputed here rather than trusted.
    double res2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) row += raw[i * n + j] * e.vector(static_cast<Eigen::Index>(j));
      const double d = row - e.value * e.vector(static_cast<Eigen::Index>(i));
      res2 += d * d;
    }
    worst_residual = std::max(worst_residual, std::sqrt(res2));
  }
  const double secs = seconds_since(start);
  return {worst_value <= 1e-8 && worst_residual <= 1e-8 && secs < 10.0,
          fmt("1000 matrices, worst |lambda - oracle| %.2e, worst residual %.2e, %.2fs",
              worst_value, worst_residual, secs)};
}

Verdict index_oracle() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1003);
  const auto pts = oracle::random_points(10000, rng);
  const auto queries = oracle::random_points(1000, rng, -0.1, 1.1);
  const SpatialIndex index(pts);
  std::size_t mismatches = 0;
  for (const Vec3& q : queries) {
    const auto near = oracle::brute_nearest(pts, q);
    const Neighbor got = index.nearest(q);
    if (got.index != near.index || got.distance != near.distance) ++mismatches;

    const auto want = oracle::brute_knn(pts, q, 8);
    const auto knn = index.knn(q, 8);
    for (std::size_t i = 0; i < 8; ++i) {
      if (knn[i].index != want[i].index || knn[i].distance != want[i].distance) {
        ++mismatches;
        break;
      }
    }
    if (index.radius(q, 0.05) != oracle::brute_radius(pts, q, 0.05)) ++mismatches;
  }
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < 10.0,
          fmt("1000 x (nearest, 8-nn, radius 0.05) over 10k points, %zu mismatches, %.2fs",
              mismatches, secs)};
}

Verdict rigidity_identity() {
  std::mt19937_64 rng(1004);
  double worst_reward = 0.0, worst_loss = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto pts = oracle::random_points(25, rng, -3.0, 3.0);
    const RigidTransform t = oracle::random_rigid(rng, 5.0, std::numbers::pi);
    std::vector<Vec3> flow;
    for (const Vec3& p : pts) flow.push_back(t.apply(p) - p);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        worst_reward =
            std::max(worst_reward, std::abs(1.0 - reward(pts[i], pts[j], flow[i], flow[j], 0.03)));
      }
    }
    HardClustering one;
    one.labels.assign(pts.size(), 0);
    one.num_clusters = 1;
    const TermValue h = hard_rigidity_loss(cloud_of(pts), FlowField(flow), one, LossConfig{});
    worst_loss = std::max(worst_loss, std::abs(h.value));
  }
  return {worst_reward <= 1e-12 && worst_loss <= 1e-12,
          fmt("100 clusters, worst |1 - r| %.2e, worst hard loss %.2e", worst_reward, worst_loss)};
}

Verdict icp_recovery() {
  const auto room = synth::generate(*synth::scene_by_name("static_room", 1005)).front();
  std::mt19937_64 rng(1005);
  int good = 0;
  double worst_rot = 0.0, worst_trans = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const RigidTransform truth = oracle::random_rigid(rng, 0.2, 2.0 * std::numbers::pi / 180.0);
    const IcpResult r = icp(room, apply_transform(room, truth));
    const double rot = (r.transform.inverse() * truth).rotation_angle() * 180.0 / std::numbers::pi;
    const double trans = (r.transform.translation() - truth.translation()).norm();
    worst_rot = std::max(worst_rot, rot);
    worst_trans = std::max(worst_trans, trans);
    if (rot < 0.5 && trans < 0.01) ++good;
  }
  return {good == 50, fmt("%d/50 recovered, worst rotation %.4f deg, worst translation %.5f m",
                          good, worst_rot, worst_trans)};
}

Verdict fig2_end_to_end() {
  const auto start = std::chrono::steady_clock::now();
  const auto frames = synth::generate(synth::fig2_scene(0.25));
  const RunResult r = run_last_pair(frames, RunConfig{});
  const TimedPointCloud& p = frames[frames.size() - 2];
  const double epe = flow_metrics(r.flow.vectors, *p.gt_flow).epe;
  const std::vector<std::size_t> got(r.clusters.labels.begin(), r.clusters.labels.end());
  const std::vector<std::size_t> want(p.class_id->begin(), p.class_id->end());
  const double ari = oracle::adjusted_rand_index(got, want);
  const double secs = seconds_since(start);
  return {epe < 0.05 && ari > 0.95 && secs < 300.0,
          fmt("separation 0.25 m, %zu points: EPE %.4f, clusters %zu, ARI %.3f, %d iterations, "
              "%.1fs",
              p.size(), epe, r.clusters.num_clusters, ari, static_cast<int>(r.iterations_run),
              secs)};
}

Verdict ablation_order() {
  RunConfig full;
  RunConfig a = full;
  a.enable_hard = a.enable_soft = a.enable_merge = false;
  RunConfig b = full;
  b.enable_soft = b.enable_merge = false;
  RunConfig c = full;
  c.enable_merge = false;
  const RunConfig* rows[] = {&a, &b, &c, &full};
  double sum[4] = {0, 0, 0, 0};
  int scenes = 0;
  for (const auto& scene : synth::benchmark_suite(1007)) {
    const auto frames = synth::generate(scene.spec);
    const TimedPointCloud& p = frames[frames.size() - 2];
    double v[4];
    bool defined = true;
    for (int row = 0; row < 4; ++row) {
      const auto e = dynamic_epe(p, run_last_pair(frames, *rows[row]).flow);
      if (!e) {
        defined = false;
        break;
      }
      v[row] = *e;
    }
    if (!defined) continue;
    ++scenes;
    for (int row = 0; row < 4; ++row) sum[row] += v[row];
  }
  double m[4];
  for (int row = 0; row < 4; ++row) m[row] = sum[row] / scenes;
  const bool ok = m[0] > m[1] && m[1] >= m[2] && m[2] >= m[3] && m[0] >= 2.0 * m[3];
  return {ok, fmt("mean dynamic EPE over %d scenes: a %.4f, b %.4f, c %.4f, d %.4f", scenes, m[0],
                  m[1], m[2], m[3])};
}

Verdict radius_sweep() {
  const auto frames = synth::generate(*synth::scene_by_name("crowd", 1008));
  const TimedPointCloud& p = frames[frames.size() - 2];
  const double radii[] = {0.0, 0.1, 0.2, 0.3, 0.6, 1.0};
  double epe[6];
  std::string detail = "crowd dynamic EPE by radius:";
  for (int i = 0; i < 6; ++i) {
    RunConfig cfg;
    cfg.cluster.radius = radii[i];
    epe[i] = *dynamic_epe(p, run_last_pair(frames, cfg).flow);
    detail += fmt(" %.1f->%.4f", radii[i], epe[i]);
  }
  const double ends = std::min(epe[0], epe[5]);
  return {epe[2] < ends && epe[3] < ends, detail};
}

Verdict metric_definitions() {
  struct Case {
    Vec3 pred, gt;
    double as, ar, out;
  };
  // Offsets sit on an axis where gt is zero, so every error is exact.
  const Case cases[] = {
      {Vec3(0.05, 0, 0), Vec3::Zero(), 0, 1, 0},          // e == 0.05, gt == 0
      {Vec3(0.1, 0, 0), Vec3::Zero(), 0, 0, 0},           // e == 0.1
      {Vec3(0.3, 0, 0), Vec3::Zero(), 0, 0, 0},           // e == 0.3
      {Vec3(0.04, 0, 0), Vec3::Zero(), 1, 1, 0},          // below strict
      {Vec3(0.05, 1, 0), Vec3(0, 1, 0), 0, 1, 0},         // e == rel == 0.05
      {Vec3(0.1, 1, 0), Vec3(0, 1, 0), 0, 0, 0},          // e == rel == 0.1
      {Vec3(0.4, 10, 0), Vec3(0, 10, 0), 1, 1, 1},        // rel 0.04 hits AS, abs 0.4 is Out
      {Vec3(0.2, 1, 0), Vec3(0, 1, 0), 0, 0, 1},          // rel 0.2 > 0.1
      {Vec3(0.04, 0.08, 0), Vec3(0, 0.08, 0), 1, 1, 1},   // abs 0.04, rel 0.5
      {Vec3(0.2, 0, 0), Vec3::Zero(), 0, 0, 0},           // zero gt: relative never applies
  };
  int wrong = 0;
  for (const Case& c : cases) {
    const std::vector<Vec3> p{c.pred}, g{c.gt};
    const FlowMetrics m = flow_metrics(p, g);
    const double e = (c.pred - c.gt).norm();
    if (m.acc_strict != c.as || m.acc_relaxed != c.ar || m.outliers != c.out || m.epe != e) ++wrong;
  }
  // Mixture and threeway arithmetic.
  const std::vector<Vec3> gt{Vec3(0, 1, 0), Vec3(0, 1, 0), Vec3::Zero(), Vec3::Zero()};
  const std::vector<Vec3> pred{Vec3(0.1, 1, 0), Vec3(0, 1, 0.1), Vec3(0.02, 0, 0),
                               Vec3(0, 0.01, 0)};
  const std::vector<std::uint8_t> fg{1, 1, 1, 0};
  const ThreewayReport tw = threeway(pred, gt, fg);
  if (std::abs(tw.average_epe - (0.1 + 0.02 + 0.01) / 3.0) > 1e-15) ++wrong;
  const std::size_t total = sizeof(cases) / sizeof(cases[0]) + 1;
  return {wrong == 0, fmt("%zu hand-computed cases, %d mismatches", total, wrong)};
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lif");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (status != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return status;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Verdict determinism() {
  const fs::path root = fs::temp_directory_path() / "lif_acceptance_determinism";
  fs::remove_all(root);
  if (run_cli({"--seed", "42", "synth", "single_mover", "-o", (root / "scene").string()}) != 0) {
    return {false, "synth failed"};
  }
  std::vector<std::string> frames;
  for (int t = 0; t < 3; ++t) frames.push_back((root / "scene" / fmt("frame_%04d.lifc", t)).string());
  for (const char* run : {"run1", "run2"}) {
    std::vector<std::string> args{"--seed", "42", "--jobs", "2", "--loss.edge_budget", "64",
                                  "-o", (root / run).string(), "flow"};
    args.insert(args.end(), frames.begin(), frames.end());
    if (run_cli(args) != 0) return {false, std::string("flow failed in ") + run};
  }
  std::size_t files = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(root / "run1")) {
    ++files;
    const fs::path other = root / "run2" / entry.path().filename();
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) ++differing;
  }
  std::size_t files2 = 0;
  for ([[maybe_unused]] const auto& entry : fs::directory_iterator(root / "run2")) ++files2;
  fs::remove_all(root);
  return {differing == 0 && files == files2 && files > 0,
          fmt("%zu output files compared, %zu differ", files, differing)};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
  }
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"gradient correctness", gradients},
      {"spectral oracle", spectral_oracle},
      {"spatial index oracle", index_oracle},
      {"rigidity identity", rigidity_identity},
      {"ICP recovery", icp_recovery},
      {"two-object end to end", fig2_end_to_end},
      {"ablation ordering", ablation_order},
      {"cluster radius trend", radius_sweep},
      {"metric definitions", metric_definitions},
      {"determinism", determinism},
  };
  bool all = true;
  for (int n = 1; n <= 10; ++n) {
    if (only != 0 && only != n) continue;
    Verdict v;
    try {
      v = criteria[n - 1].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %d %s: %s (%s)\n", n, criteria[n - 1].first, v.pass ? "PASS" : "FAIL",
                v.detail.c_str());
    std::fflush(stdout);
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
