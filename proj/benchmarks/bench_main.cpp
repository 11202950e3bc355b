#include <random>

#include <benchmark/benchmark.h>

#include "lif/clustering.hpp"
#include "lif/losses.hpp"
#include "lif/spatial_index.hpp"
#include "lif/spectral.hpp"
#include "lif/synth.hpp"

using namespace lif;

namespace {

std::vector<Vec3> cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<Vec3> pts(n);
  for (Vec3& p : pts) p = Vec3(u(rng), u(rng), u(rng));
  return pts;
}

void BM_IndexBuild(benchmark::State& state) {
  const auto pts = cloud(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(SpatialIndex(pts));
}
BENCHMARK(BM_IndexBuild)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_Knn16(benchmark::State& state) {
  const auto pts = cloud(static_cast<std::size_t>(state.range(0)), 2);
  const SpatialIndex index(pts);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.knn(pts[i], 17));
    i = (i + 1) % pts.size();
  }
}
BENCHMARK(BM_Knn16)->Arg(10000)->Arg(100000);

void BM_BatchEig(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.5, 1.0);
  std::vector<RewardMatrix> mats;
  for (int m = 0; m < state.range(0); ++m) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Ones(17, 17);
    for (int i = 0; i < 17; ++i) {
      for (int j = i + 1; j < 17; ++j) a(i, j) = a(j, i) = u(rng);
    }
    mats.emplace_back(a);
  }
  for (auto _ : state) benchmark::DoNotOptimize(batch_principal_eig(mats));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BatchEig)->Arg(1000)->Arg(10000);

void BM_TotalLoss(benchmark::State& state) {
  const auto frames = synth::generate(*synth::scene_by_name("single_mover", 4));
  const TimedPointCloud& p = frames[0];
  const TimedPointCloud& q = frames[1];
  const SpatialIndex q_index(q.points);
  const HardClustering hard = euclidean_clusters(p.points, 0.3);
  const auto soft = soft_clusters(p, 16);
  const FlowField flow(*p.gt_flow);
  const LossConfig cfg;
  std::uint64_t eval = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(total_loss(p, flow, q, hard, soft, q_index, cfg, {}, eval++));
  }
  state.SetLabel(std::to_string(p.size()) + " points");
}
BENCHMARK(BM_TotalLoss)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
