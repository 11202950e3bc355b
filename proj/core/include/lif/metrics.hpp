#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "lif/types.hpp"

namespace lif {

/// Accuracy thresholds used by the standard scene-flow metrics.
struct MetricThresholds {
  double strict_abs = 0.05;
  double strict_rel = 0.05;
  double relaxed_abs = 0.10;
  double relaxed_rel = 0.10;
  double outlier_abs = 0.30;
  double outlier_rel = 0.10;
};

enum class AngleMode {
  kHomogeneous,  // angle between (f, 1) and (f_gt, 1)
  kRaw,          // angle between f and f_gt; zero vectors contribute 0
};

struct MetricOptions {
  MetricThresholds thresholds;
  AngleMode angle_mode = AngleMode::kHomogeneous;
  /// A point is dynamic when ||gt|| exceeds this (m/frame).
  double dynamic_threshold = 0.05;
  /// Threeway average weighted by bucket size instead of the plain mean.
  bool weighted_average = false;
};

/// Statistics over a set of points. When count == 0 every statistic is 0 and
/// defined() is false.
struct FlowMetrics {
  double epe = 0.0;
  double acc_strict = 0.0;
  double acc_relaxed = 0.0;
  double outliers = 0.0;
  double angle_error = 0.0;  // radians
  std::size_t count = 0;

  bool defined() const noexcept { return count > 0; }
};

struct PointErrors {
  std::vector<double> abs;
  /// abs / ||gt||, unset when ||gt|| == 0.
  std::vector<std::optional<double>> rel;
};

PointErrors point_errors(std::span<const Vec3> pred, std::span<const Vec3> gt);

/// Angle in radians between a and b computed as atan2(|a x b|, a . b) in 4D,
/// which is exactly 0 for identical inputs.
double angle_between(const Vec3& a, const Vec3& b, AngleMode mode);

FlowMetrics flow_metrics(std::span<const Vec3> pred, std::span<const Vec3> gt,
                         std::span<const std::uint8_t> mask = {},
                         const MetricOptions& options = {});

struct ThreewayReport {
  FlowMetrics dynamic_foreground;
  FlowMetrics static_foreground;
  FlowMetrics static_background;
  /// Mean EPE over the populated buckets (or count-weighted, see
  /// MetricOptions::weighted_average).
  double average_epe = 0.0;
  /// Dynamic background points belong to no bucket.
  std::size_t excluded = 0;
};

ThreewayReport threeway(std::span<const Vec3> pred, std::span<const Vec3> gt,
                        std::span<const std::uint8_t> is_foreground,
                        const MetricOptions& options = {});

struct ClassEpe {
  std::optional<double> avg;
  std::optional<double> dyn;
  std::optional<double> stat;
};

std::map<std::uint16_t, ClassEpe> per_class(std::span<const Vec3> pred, std::span<const Vec3> gt,
                                             std::span<const std::uint16_t> class_id,
                                             const MetricOptions& options = {});

}  // namespace lif
