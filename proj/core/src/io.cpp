#include "lif/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>

namespace lif::io {
namespace {

constexpr std::array<char, 4> kCloudMagic = {'L', 'I', 'F', 'C'};
constexpr std::array<char, 4> kFlowMagic = {'L', 'I', 'F', 'F'};

class Writer {
 public:
  void magic(const std::array<char, 4>& m) { buf_.insert(buf_.end(), m.begin(), m.end()); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void vec3(const Vec3& v) {
    f32(v.x());
    f32(v.y());
    f32(v.z());
  }

  void flush(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot open for writing: " + path.string());
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::kIo, "write failed: " + path.string());
  }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(std::vector<char> data, std::string name)
      : data_(std::move(data)), name_(std::move(name)) {}

  void expect_magic(const std::array<char, 4>& m) {
    need(4, "magic");
    if (std::memcmp(data_.data() + pos_, m.data(), 4) != 0) {
      throw Error(ErrorKind::kBadMagic, name_ + ": bad magic bytes");
    }
    pos_ += 4;
  }
  void expect_version() {
    const std::uint32_t v = u32("version");
    if (v != kFormatVersion) {
      throw Error(ErrorKind::kBadVersion,
                  name_ + ": unsupported version " + std::to_string(v));
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) {
      v |= static_cast<std::uint16_t>(static_cast<std::uint8_t>(data_[pos_++]) << (8 * i));
    }
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * i);
    }
    return v;
  }
  double f32(const char* what) {
    return static_cast<double>(std::bit_cast<float>(u32(what)));
  }
  Vec3 vec3(const char* what) {
    const double x = f32(what);
    const double y = f32(what);
    const double z = f32(what);
    return {x, y, z};
  }
  void expect_end() const {
    if (pos_ != data_.size()) {
      throw Error(ErrorKind::kAttributeMismatch,
                  name_ + ": " + std::to_string(data_.size() - pos_) +
                      " trailing bytes beyond the declared payload");
    }
  }
  /// Fails early, before allocating, when the declared payload cannot fit.
  void require_remaining(std::size_t bytes, const char* what) const { need(bytes, what); }

 private:
  void need(std::size_t n, const char* what) const {
    if (data_.size() - pos_ < n) {
      throw Error(ErrorKind::kTruncated, name_ + ": truncated while reading " + what);
    }
  }

  std::vector<char> data_;
  std::string name_;
  std::size_t pos_ = 0;
};

std::vector<char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open for reading: " + path.string());
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::kIo, "read failed: " + path.string());
  return data;
}

TimedPointCloud load_binary_cloud(const std::filesystem::path& path) {
  Reader r(read_all(path), path.string());
  r.expect_magic(kCloudMagic);
  r.expect_version();
  const std::uint32_t n = r.u32("point count");
  TimedPointCloud cloud;
  cloud.frame_index = r.u32("frame index");
  const std::uint32_t flags = r.u32("flag mask");

  std::size_t payload = std::size_t{n} * 12;
  if (flags & kHasGtFlow) payload += std::size_t{n} * 12;
  if (flags & kHasClass) payload += std::size_t{n} * 2;
  if (flags & kHasForeground) payload += std::size_t{n};
  r.require_remaining(payload, "payload");

  cloud.points.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) cloud.points.push_back(r.vec3("positions"));
  if (flags & kHasGtFlow) {
    auto& flow = cloud.gt_flow.emplace();
    flow.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) flow.push_back(r.vec3("gt flow"));
  }
  if (flags & kHasClass) {
    auto& cls = cloud.class_id.emplace();
    cls.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) cls.push_back(r.u16("class ids"));
  }
  if (flags & kHasForeground) {
    auto& fg = cloud.is_foreground.emplace();
    fg.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) fg.push_back(r.u8("foreground flags") != 0 ? 1 : 0);
  }
  r.expect_end();
  cloud.validate();
  return cloud;
}

TimedPointCloud load_ascii_cloud(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open for reading: " + path.string());
  TimedPointCloud cloud;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest(line);
    double xyz[3];
    int parsed = 0;
    auto skip_ws = [&] {
      while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t' || rest.front() == '\r')) {
        rest.remove_prefix(1);
      }
    };
    skip_ws();
    if (rest.empty()) continue;
    for (; parsed < 3; ++parsed) {
      skip_ws();
      const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), xyz[parsed]);
      if (ec != std::errc()) break;
      rest.remove_prefix(static_cast<std::size_t>(ptr - rest.data()));
    }
    skip_ws();
    if (parsed != 3 || !rest.empty()) {
      throw Error(ErrorKind::kParse, path.string() + ":" + std::to_string(line_no) +
                                         ": expected \"x y z\"");
    }
    cloud.points.emplace_back(xyz[0], xyz[1], xyz[2]);
  }
  if (in.bad()) throw Error(ErrorKind::kIo, "read failed: " + path.string());
  cloud.validate();
  return cloud;
}

}  // namespace

CloudFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".xyz" || ext == ".txt") ? CloudFormat::kAsciiXyz : CloudFormat::kBinary;
}

TimedPointCloud load_cloud(const std::filesystem::path& path, CloudFormat format) {
  return format == CloudFormat::kBinary ? load_binary_cloud(path) : load_ascii_cloud(path);
}

void save_cloud(const std::filesystem::path& path, const TimedPointCloud& cloud,
                CloudFormat format) {
  cloud.validate();
  if (format == CloudFormat::kAsciiXyz) {
    std::ostringstream os;
    os.precision(9);
    for (const auto& p : cloud.points) os << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot open for writing: " + path.string());
    out << os.str();
    if (!out) throw Error(ErrorKind::kIo, "write failed: " + path.string());
    return;
  }

  std::uint32_t flags = 0;
  if (cloud.gt_flow) flags |= kHasGtFlow;
  if (cloud.class_id) flags |= kHasClass;
  if (cloud.is_foreground) flags |= kHasForeground;

  Writer w;
  w.magic(kCloudMagic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(cloud.size()));
  w.u32(cloud.frame_index);
  w.u32(flags);
  for (const auto& p : cloud.points) w.vec3(p);
  if (cloud.gt_flow) for (const auto& f : *cloud.gt_flow) w.vec3(f);
  if (cloud.class_id) for (auto c : *cloud.class_id) w.u16(c);
  if (cloud.is_foreground) for (auto b : *cloud.is_foreground) w.u8(b ? 1 : 0);
  w.flush(path);
}

void save_flow(const std::filesystem::path& path, const FlowField& flow,
               std::optional<std::span<const std::uint32_t>> labels) {
  if (labels && labels->size() != flow.size()) {
    throw Error(ErrorKind::kPrecondition,
                "label count " + std::to_string(labels->size()) +
                    " != flow length " + std::to_string(flow.size()));
  }
  flow.validate();
  Writer w;
  w.magic(kFlowMagic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(flow.size()));
  w.u32(labels ? kHasLabels : 0u);
  for (const auto& v : flow.vectors) w.vec3(v);
  if (labels) for (auto l : *labels) w.u32(l);
  w.flush(path);
}

FlowFile load_flow(const std::filesystem::path& path) {
  Reader r(read_all(path), path.string());
  r.expect_magic(kFlowMagic);
  r.expect_version();
  const std::uint32_t n = r.u32("vector count");
  const std::uint32_t flags = r.u32("flag mask");
  std::size_t payload = std::size_t{n} * 12;
  if (flags & kHasLabels) payload += std::size_t{n} * 4;
  r.require_remaining(payload, "payload");

  FlowFile file;
  file.flow.vectors.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) file.flow.vectors.push_back(r.vec3("vectors"));
  if (flags & kHasLabels) {
    auto& labels = file.labels.emplace();
    labels.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) labels.push_back(r.u32("labels"));
  }
  r.expect_end();
  file.flow.validate();
  return file;
}

}  // namespace lif::io
