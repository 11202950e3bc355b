#pragma once

#include <cstddef>
#include <vector>

#include "lif/types.hpp"

namespace lif {

struct PreprocessResult {
  TimedPointCloud cloud;
  /// index_map[i] is the index in the input cloud of output point i.
  std::vector<std::size_t> index_map;
};

/// Drops ground returns (z <= ground_height) and everything farther than
/// max_range from the sensor in the x-y plane. Attributes are filtered along
/// with the points.
PreprocessResult preprocess(const TimedPointCloud& cloud, double ground_height,
                            double max_range);

/// Keeps the listed indices, in order, carrying all attributes along.
TimedPointCloud select(const TimedPointCloud& cloud, const std::vector<std::size_t>& indices);

}  // namespace lif
