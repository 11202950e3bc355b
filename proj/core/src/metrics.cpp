#include "lif/metrics.hpp"

#include <cmath>
#include <string>

namespace lif {
namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorKind::kPrecondition, std::string(what) + ": length mismatch (" +
                                              std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

PointErrors point_errors(std::span<const Vec3> pred, std::span<const Vec3> gt) {
  check_lengths(pred.size(), gt.size(), "point_errors");
  PointErrors out;
  out.abs.resize(pred.size());
  out.rel.resize(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = (pred[i] - gt[i]).norm();
    out.abs[i] = e;
    const double g = gt[i].norm();
    if (g > 0.0) out.rel[i] = e / g;
  }
  return out;
}

double angle_between(const Vec3& a, const Vec3& b, AngleMode mode) {
  const double w = mode == AngleMode::kHomogeneous ? 1.0 : 0.0;
  const double x[4] = {a.x(), a.y(), a.z(), w};
  const double y[4] = {b.x(), b.y(), b.z(), w};
  double dot = 0.0;
  double cross2 = 0.0;
  for (int i = 0; i < 4; ++i) {
    dot += x[i] * y[i];
    for (int j = i + 1; j < 4; ++j) {
      const double c = x[i] * y[j] - x[j] * y[i];
      cross2 += c * c;
    }
  }
  if (cross2 == 0.0 && dot == 0.0) return 0.0;  // a zero vector in raw mode
  return std::atan2(std::sqrt(cross2), dot);
}

FlowMetrics flow_metrics(std::span<const Vec3> pred, std::span<const Vec3> gt,
                         std::span<const std::uint8_t> mask, const MetricOptions& options) {
  check_lengths(pred.size(), gt.size(), "flow_metrics");
  if (!mask.empty()) check_lengths(mask.size(), pred.size(), "flow_metrics mask");
  const auto& th = options.thresholds;

  FlowMetrics m;
  double epe = 0.0;
  double angle = 0.0;
  std::size_t strict = 0;
  std::size_t relaxed = 0;
  std::size_t outliers = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    const double e = (pred[i] - gt[i]).norm();
    const double g = gt[i].norm();
    const bool has_rel = g > 0.0;
    const double rel = has_rel ? e / g : 0.0;
    ++m.count;
    epe += e;
    if (e < th.strict_abs || (has_rel && rel < th.strict_rel)) ++strict;
    if (e < th.relaxed_abs || (has_rel && rel < th.relaxed_rel)) ++relaxed;
    if (e > th.outlier_abs || (has_rel && rel > th.outlier_rel)) ++outliers;
    angle += angle_between(pred[i], gt[i], options.angle_mode);
  }
  if (m.count == 0) return m;
  const double n = static_cast<double>(m.count);
  m.epe = epe / n;
  m.acc_strict = static_cast<double>(strict) / n;
  m.acc_relaxed = static_cast<double>(relaxed) / n;
  m.outliers = static_cast<double>(outliers) / n;
  m.angle_error = angle / n;
  return m;
}

ThreewayReport threeway(std::span<const Vec3> pred, std::span<const Vec3> gt,
                        std::span<const std::uint8_t> is_foreground,
                        const MetricOptions& options) {
  check_lengths(pred.size(), gt.size(), "threeway");
  check_lengths(is_foreground.size(), gt.size(), "threeway foreground flags");
  if (!(options.dynamic_threshold > 0.0)) {
    throw Error(ErrorKind::kPrecondition, "dynamic_threshold must be > 0");
  }
  const std::size_t n = pred.size();
  std::vector<std::uint8_t> dyn_fg(n, 0), stat_fg(n, 0), stat_bg(n, 0);
  ThreewayReport report;
  for (std::size_t i = 0; i < n; ++i) {
    const bool dynamic = gt[i].norm() > options.dynamic_threshold;
    const bool fg = is_foreground[i] != 0;
    if (dynamic && fg) {
      dyn_fg[i] = 1;
    } else if (!dynamic && fg) {
      stat_fg[i] = 1;
    } else if (!dynamic) {
      stat_bg[i] = 1;
    } else {
      ++report.excluded;
    }
  }
  report.dynamic_foreground = flow_metrics(pred, gt, dyn_fg, options);
  report.static_foreground = flow_metrics(pred, gt, stat_fg, options);
  report.static_background = flow_metrics(pred, gt, stat_bg, options);

  double sum = 0.0;
  double weight = 0.0;
  for (const FlowMetrics* b : {&report.dynamic_foreground, &report.static_foreground,
                               &report.static_background}) {
    if (!b->defined()) continue;
    const double w = options.weighted_average ? static_cast<double>(b->count) : 1.0;
    sum += w * b->epe;
    weight += w;
  }
  report.average_epe = weight > 0.0 ? sum / weight : 0.0;
  return report;
}

std::map<std::uint16_t, ClassEpe> per_class(std::span<const Vec3> pred, std::span<const Vec3> gt,
                                             std::span<const std::uint16_t> class_id,
                                             const MetricOptions& options) {
  check_lengths(pred.size(), gt.size(), "per_class");
  check_lengths(class_id.size(), gt.size(), "per_class class ids");
  struct Acc {
    double dyn_sum = 0.0, stat_sum = 0.0;
    std::size_t dyn_n = 0, stat_n = 0;
  };
  std::map<std::uint16_t, Acc> acc;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    Acc& a = acc[class_id[i]];
    const double e = (pred[i] - gt[i]).norm();
    if (gt[i].norm() > options.dynamic_threshold) {
      a.dyn_sum += e;
      ++a.dyn_n;
    } else {
      a.stat_sum += e;
      ++a.stat_n;
    }
  }
  std::map<std::uint16_t, ClassEpe> out;
  for (const auto& [cls, a] : acc) {
    ClassEpe c;
    if (a.dyn_n > 0) c.dyn = a.dyn_sum / static_cast<double>(a.dyn_n);
    if (a.stat_n > 0) c.stat = a.stat_sum / static_cast<double>(a.stat_n);
    if (c.dyn && c.stat) {
      c.avg = 0.5 * (*c.dyn + *c.stat);
    } else {
      c.avg = c.dyn ? c.dyn : c.stat;
    }
    out[cls] = c;
  }
  return out;
}

}  // namespace lif
