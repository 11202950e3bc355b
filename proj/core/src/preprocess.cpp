#include "lif/preprocess.hpp"

#include <cmath>
#include <string>

namespace lif {

TimedPointCloud select(const TimedPointCloud& cloud, const std::vector<std::size_t>& indices) {
  TimedPointCloud out;
  out.frame_index = cloud.frame_index;
  out.points.reserve(indices.size());
  for (auto i : indices) out.points.push_back(cloud.points.at(i));
  if (cloud.gt_flow) {
    auto& v = out.gt_flow.emplace();
    v.reserve(indices.size());
    for (auto i : indices) v.push_back((*cloud.gt_flow)[i]);
  }
  if (cloud.class_id) {
    auto& v = out.class_id.emplace();
    v.reserve(indices.size());
    for (auto i : indices) v.push_back((*cloud.class_id)[i]);
  }
  if (cloud.is_foreground) {
    auto& v = out.is_foreground.emplace();
    v.reserve(indices.size());
    for (auto i : indices) v.push_back((*cloud.is_foreground)[i]);
  }
  return out;
}

PreprocessResult preprocess(const TimedPointCloud& cloud, double ground_height,
                            double max_range) {
  if (!std::isfinite(ground_height) || !std::isfinite(max_range) || max_range <= 0.0) {
    throw Error(ErrorKind::kPrecondition,
                "preprocess needs finite ground_height and max_range > 0");
  }
  cloud.validate();
  PreprocessResult result;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if (p.z() > ground_height && std::hypot(p.x(), p.y()) <= max_range) {
      result.index_map.push_back(i);
    }
  }
  result.cloud = select(cloud, result.index_map);
  return result;
}

}  // namespace lif
