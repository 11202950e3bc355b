#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "lif/types.hpp"

namespace lif::io {

enum class CloudFormat { kBinary, kAsciiXyz };

inline constexpr std::uint32_t kFormatVersion = 1;

// Cloud flag mask bits (.lifc).
inline constexpr std::uint32_t kHasGtFlow = 1u << 0;
inline constexpr std::uint32_t kHasClass = 1u << 1;
inline constexpr std::uint32_t kHasForeground = 1u << 2;

// Flow flag mask bits (.liff).
inline constexpr std::uint32_t kHasLabels = 1u << 0;

/// Picks kAsciiXyz for ".xyz"/".txt" extensions and kBinary otherwise.
CloudFormat format_from_path(const std::filesystem::path& path);

/// Reads a cloud. Failures throw lif::Error with kind kIo, kBadMagic,
/// kBadVersion, kTruncated, kParse or kAttributeMismatch.
TimedPointCloud load_cloud(const std::filesystem::path& path, CloudFormat format);
inline TimedPointCloud load_cloud(const std::filesystem::path& path) {
  return load_cloud(path, format_from_path(path));
}

/// Writes a cloud. Positions and flows are stored as little-endian f32, so a
/// round trip is exact for float-representable values. The ASCII format keeps
/// positions only.
void save_cloud(const std::filesystem::path& path, const TimedPointCloud& cloud,
                CloudFormat format = CloudFormat::kBinary);

struct FlowFile {
  FlowField flow;
  std::optional<std::vector<std::uint32_t>> labels;
};

void save_flow(const std::filesystem::path& path, const FlowField& flow,
               std::optional<std::span<const std::uint32_t>> labels = std::nullopt);
FlowFile load_flow(const std::filesystem::path& path);

}  // namespace lif::io
