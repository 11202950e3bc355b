#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "lif/io.hpp"
#include "lif/preprocess.hpp"
#include "lif/types.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace lif;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lif_core_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

template <typename T>
void put(std::string& buf, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

void write_bytes(const fs::path& p, const std::string& data) {
  std::ofstream(p, std::ios::binary) << data;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no lif::Error thrown";
  return ErrorKind::kIo;
}

TimedPointCloud full_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TimedPointCloud c;
  c.frame_index = 17;
  // Float-representable values so the f32 round trip is exact.
  for (const Vec3& p : oracle::random_points(n, rng, -20.0, 20.0)) {
    c.points.push_back(Vec3(static_cast<float>(p.x()), static_cast<float>(p.y()),
                            static_cast<float>(p.z())));
  }
  c.gt_flow.emplace();
  c.class_id.emplace();
  c.is_foreground.emplace();
  for (std::size_t i = 0; i < n; ++i) {
    c.gt_flow->push_back(Vec3(0.25 * i, -0.5, 0.125));
    c.class_id->push_back(static_cast<std::uint16_t>(i % 7));
    c.is_foreground->push_back(static_cast<std::uint8_t>(i % 2));
  }
  return c;
}

}  // namespace

TEST(RigidTransformTest, RejectsNonRotation) {
  Mat3 bad = Mat3::Identity();
  bad(0, 0) = -1.0;  // reflection
  EXPECT_THROW(RigidTransform(bad, Vec3::Zero()), Error);
  Mat3 skew = Mat3::Identity();
  skew(0, 1) = 1e-6;
  EXPECT_THROW(RigidTransform(skew, Vec3::Zero()), Error);
}

TEST(RigidTransformTest, ComposeAndInvert) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const RigidTransform a = oracle::random_rigid(rng, 2.0, 1.0);
    const RigidTransform b = oracle::random_rigid(rng, 2.0, 1.0);
    const Vec3 p(0.3, -1.2, 4.0);
    EXPECT_LT(((a * b).apply(p) - a.apply(b.apply(p))).norm(), 1e-12);
    EXPECT_LT((a.inverse().apply(a.apply(p)) - p).norm(), 1e-12);
    EXPECT_TRUE(is_rotation(a.rotation()));
  }
  EXPECT_NEAR(RigidTransform::from_axis_angle(Vec3::UnitZ(), 0.3).rotation_angle(), 0.3, 1e-12);
}

TEST(TimedPointCloudTest, ValidateCatchesBadInput) {
  TimedPointCloud c;
  EXPECT_NO_THROW(c.validate());
  c.points = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  c.class_id = std::vector<std::uint16_t>{1};
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::kAttributeMismatch);
  c.class_id.reset();
  c.points[1].x() = std::numeric_limits<double>::quiet_NaN();
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::kInvalidValue);
}

TEST_F(TempDir, BinaryRoundTripIsBitExact) {
  TimedPointCloud c;
  c.points = {Vec3(0.1f, 0.2f, 0.3f), Vec3(-5.5, 1e-3f, 7), Vec3(1.0f / 3.0f, 2, 3)};
  io::save_cloud(dir_ / "a.lifc", c);
  const TimedPointCloud back = io::load_cloud(dir_ / "a.lifc");
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    for (int u = 0; u < 3; ++u) {
      EXPECT_EQ(std::bit_cast<std::uint64_t>(back.points[i][u]),
                std::bit_cast<std::uint64_t>(c.points[i][u]));
    }
  }
  EXPECT_FALSE(back.gt_flow || back.class_id || back.is_foreground);
}

TEST_F(TempDir, RoundTripPreservesEveryField) {
  for (std::size_t n : {0u, 1u, 50u}) {
    const TimedPointCloud c = full_cloud(n, n + 1);
    io::save_cloud(dir_ / "c.lifc", c);
    const TimedPointCloud back = io::load_cloud(dir_ / "c.lifc");
    EXPECT_EQ(back.frame_index, c.frame_index);
    EXPECT_EQ(back.points, c.points);
    EXPECT_EQ(back.gt_flow, c.gt_flow);
    EXPECT_EQ(back.class_id, c.class_id);
    EXPECT_EQ(back.is_foreground, c.is_foreground);
  }
}

TEST_F(TempDir, AttributePresenceFollowsFlags) {
  TimedPointCloud c = full_cloud(4, 9);
  c.gt_flow.reset();
  io::save_cloud(dir_ / "c.lifc", c);
  const TimedPointCloud back = io::load_cloud(dir_ / "c.lifc");
  EXPECT_FALSE(back.gt_flow);
  EXPECT_TRUE(back.class_id);
  EXPECT_TRUE(back.is_foreground);
}

TEST_F(TempDir, AsciiLiteralParse) {
  write_bytes(dir_ / "a.xyz", "0 0 0\n1 0 0");
  const TimedPointCloud c = io::load_cloud(dir_ / "a.xyz");
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.points[0], Vec3(0, 0, 0));
  EXPECT_EQ(c.points[1], Vec3(1, 0, 0));
}

TEST_F(TempDir, AsciiRejectsGarbage) {
  write_bytes(dir_ / "a.xyz", "0 0 0\n1 zero 0\n");
  EXPECT_EQ(kind_of([&] { io::load_cloud(dir_ / "a.xyz"); }), ErrorKind::kParse);
  write_bytes(dir_ / "b.txt", "1 2\n");
  EXPECT_EQ(kind_of([&] { io::load_cloud(dir_ / "b.txt"); }), ErrorKind::kParse);
}

TEST_F(TempDir, TruncatedPayload) {
  std::string buf = "LIFC";
  put<std::uint32_t>(buf, 1);
  put<std::uint32_t>(buf, 5);
  put<std::uint32_t>(buf, 0);
  put<std::uint32_t>(buf, 0);
  for (int i = 0; i < 4 * 3; ++i) put<float>(buf, 1.0f);  // only 4 points
  write_bytes(dir_ / "t.lifc", buf);
  EXPECT_EQ(kind_of([&] { io::load_cloud(dir_ / "t.lifc"); }), ErrorKind::kTruncated);
}

TEST_F(TempDir, HeaderErrorsHaveDistinctKinds) {
  std::string bad_magic = "LIFX";
  put<std::uint32_t>(bad_magic, 1);
  put<std::uint32_t>(bad_magic, 0);
  put<std::uint32_t>(bad_magic, 0);
  put<std::uint32_t>(bad_magic, 0);
  write_bytes(dir_ / "m.lifc", bad_magic);
  EXPECT_EQ(kind_of([&] { io::load_cloud(dir_ / "m.lifc"); }), ErrorKind::kBadMagic);

  std::string bad_version = "LIFC";
  put<std::uint32_t>(bad_version, 2);
  put<std::uint32_t>(bad_version, 0);
  put<std::uint32_t>(bad_version, 0);
  put<std::uint32_t>(bad_version, 0);
  write_bytes(dir_ / "v.lifc", bad_version);
  EXPECT_EQ(kind_of([&] { io::load_cloud(dir_ / "v.lifc"); }), ErrorKind::kBadVersion);

  // A class block without its flag leaves bytes the header does not account for.
  std::string extra = "LIFC";
  put<std::uint32_t>(extra, 1);
  put<std::uint32_t>(extra, 1);
  put<std::uint32_t>(extra, 0);
  put<std::uint32_t>(extra, 0);
  for (int i = 0; i < 3; ++i) put<float>(extra, 0.0f);
  put<std::uint16_t>(extra, 4);
  write_bytes(dir_ / "x.lifc", extra);
  EXPECT_EQ(kind_of([&] { io::load_cloud(dir_ / "x.lifc"); }), ErrorKind::kAttributeMismatch);

  EXPECT_EQ(kind_of([&] { io::load_cloud(dir_ / "missing.lifc"); }), ErrorKind::kIo);
}

TEST_F(TempDir, FlowRoundTrip) {
  std::vector<Vec3> v;
  for (int i = 0; i < 10; ++i) v.emplace_back(0.5 * i, -0.25 * i, 1.0f / (i + 1.0f));
  const FlowField flow(v);
  io::save_flow(dir_ / "f.liff", flow);
  io::FlowFile back = io::load_flow(dir_ / "f.liff");
  EXPECT_EQ(back.flow.vectors, flow.vectors);
  EXPECT_FALSE(back.labels);

  std::vector<std::uint32_t> labels{0, 0, 1, 2, 2, 2, 3, 0, 1, 4};
  io::save_flow(dir_ / "g.liff", flow, std::span<const std::uint32_t>(labels));
  back = io::load_flow(dir_ / "g.liff");
  ASSERT_TRUE(back.labels);
  EXPECT_EQ(*back.labels, labels);
}

TEST_F(TempDir, FlowLabelLengthMismatch) {
  const FlowField flow = FlowField::zeros(3);
  std::vector<std::uint32_t> labels{0, 1};
  EXPECT_EQ(kind_of([&] {
              io::save_flow(dir_ / "f.liff", flow, std::span<const std::uint32_t>(labels));
            }),
            ErrorKind::kPrecondition);
  EXPECT_FALSE(fs::exists(dir_ / "f.liff"));
}

TEST_F(TempDir, FlowFileMagicChecked) {
  TimedPointCloud c = full_cloud(2, 1);
  io::save_cloud(dir_ / "c.lifc", c);
  EXPECT_EQ(kind_of([&] { io::load_flow(dir_ / "c.lifc"); }), ErrorKind::kBadMagic);
}

TEST(PreprocessTest, GroundThreshold) {
  TimedPointCloud c;
  c.points = {Vec3(1, 0, -0.1), Vec3(1, 0, 0.0), Vec3(1, 0, 0.5), Vec3(1, 0, 0.3)};
  const PreprocessResult r = preprocess(c, 0.3, 35.0);
  ASSERT_EQ(r.cloud.size(), 1u);
  EXPECT_EQ(r.cloud.points[0].z(), 0.5);
  EXPECT_EQ(r.index_map, std::vector<std::size_t>{2});
}

TEST(PreprocessTest, RangeCropIsPlanar) {
  TimedPointCloud c;
  c.points = {Vec3(40, 0, 1), Vec3(0, 34.9, 1), Vec3(24.8, 24.8, 1), Vec3(0, 0, 100)};
  const PreprocessResult r = preprocess(c, 0.3, 35.0);
  EXPECT_EQ(r.index_map, (std::vector<std::size_t>{1, 3}));
}

TEST(PreprocessTest, EmptyCloud) {
  const PreprocessResult r = preprocess(TimedPointCloud{}, 0.3, 35.0);
  EXPECT_TRUE(r.cloud.empty());
  EXPECT_TRUE(r.index_map.empty());
}

TEST(PreprocessTest, RejectsBadParameters) {
  EXPECT_THROW(preprocess(TimedPointCloud{}, 0.3, 0.0), Error);
  EXPECT_THROW(preprocess(TimedPointCloud{}, std::nan(""), 1.0), Error);
}

TEST(PreprocessTest, IdempotentWithConsistentAttributes) {
  TimedPointCloud c = full_cloud(400, 5);
  const PreprocessResult once = preprocess(c, 0.3, 15.0);
  const PreprocessResult twice = preprocess(once.cloud, 0.3, 15.0);
  EXPECT_EQ(twice.cloud.points, once.cloud.points);
  EXPECT_EQ(twice.cloud.class_id, once.cloud.class_id);
  ASSERT_FALSE(once.index_map.empty());
  for (std::size_t i = 0; i < once.index_map.size(); ++i) {
    const std::size_t src = once.index_map[i];
    if (i > 0) {
      EXPECT_LT(once.index_map[i - 1], src);
    }
    EXPECT_EQ(c.points[src], once.cloud.points[i]);
    EXPECT_EQ((*c.gt_flow)[src], (*once.cloud.gt_flow)[i]);
    EXPECT_EQ((*c.class_id)[src], (*once.cloud.class_id)[i]);
    EXPECT_EQ((*c.is_foreground)[src], (*once.cloud.is_foreground)[i]);
  }
}
