#pragma once

#include <cstddef>
#include <functional>

namespace lif {

/// Number of worker threads used by parallel_for. Defaults to
/// std::thread::hardware_concurrency(); values < 1 are clamped to 1.
void set_num_workers(int n);
int num_workers();

/// Calls fn(begin, end) over disjoint contiguous chunks covering [0, n).
/// Chunks run concurrently when more than one worker is configured and n is
/// at least `grain`. Callers write results into per-index slots, so output is
/// independent of scheduling. The first exception thrown by any chunk is
/// rethrown after all chunks finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t grain = 256);

}  // namespace lif
