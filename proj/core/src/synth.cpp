#include "lif/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace lif::synth {
namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Uniform samples on the object's surface in local coordinates (centered).
std::vector<Vec3> sample_surface(const SceneObject& obj, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
  const double hx = obj.size.x() / 2.0;
  const double hy = obj.size.y() / 2.0;
  const double hz = obj.size.z() / 2.0;

  std::vector<Vec3> out;
  out.reserve(obj.points);
  switch (obj.shape) {
    case Shape::kBox: {
      // Faces: +x, -x, +y, -y, +z, weighted by area.
      const double ax = obj.size.y() * obj.size.z();
      const double ay = obj.size.x() * obj.size.z();
      const double az = obj.size.x() * obj.size.y();
      std::discrete_distribution<int> face({ax, ax, ay, ay, az});
      for (std::size_t i = 0; i < obj.points; ++i) {
        switch (face(rng)) {
          case 0: out.emplace_back(hx, uniform(-hy, hy), uniform(-hz, hz)); break;
          case 1: out.emplace_back(-hx, uniform(-hy, hy), uniform(-hz, hz)); break;
          case 2: out.emplace_back(uniform(-hx, hx), hy, uniform(-hz, hz)); break;
          case 3: out.emplace_back(uniform(-hx, hx), -hy, uniform(-hz, hz)); break;
          default: out.emplace_back(uniform(-hx, hx), uniform(-hy, hy), hz); break;
        }
      }
      break;
    }
    case Shape::kCylinder: {
      const double r = hx;
      const double lateral = 2.0 * std::numbers::pi * r * obj.size.z();
      const double cap = std::numbers::pi * r * r;
      std::bernoulli_distribution on_side(lateral / (lateral + cap));
      for (std::size_t i = 0; i < obj.points; ++i) {
        const double phi = uniform(0.0, 2.0 * std::numbers::pi);
        if (on_side(rng)) {
          out.emplace_back(r * std::cos(phi), r * std::sin(phi), uniform(-hz, hz));
        } else {
          const double rho = r * std::sqrt(u01(rng));
          out.emplace_back(rho * std::cos(phi), rho * std::sin(phi), hz);
        }
      }
      break;
    }
    case Shape::kWall: {
      for (std::size_t i = 0; i < obj.points; ++i) {
        out.emplace_back(uniform(-hx, hx), 0.0, uniform(-hz, hz));
      }
      break;
    }
  }
  return out;
}

bool occluded(const SceneObject& obj, const Vec3& local, std::size_t frame) {
  if (!obj.occluder) return false;
  const auto& occ = *obj.occluder;
  if (std::find(occ.frames.begin(), occ.frames.end(), frame) == occ.frames.end()) return false;
  return (local.array() >= occ.local_min.array()).all() &&
         (local.array() <= occ.local_max.array()).all();
}

RigidTransform power(const RigidTransform& t, std::size_t n) {
  RigidTransform out;
  for (std::size_t i = 0; i < n; ++i) out = t * out;
  return out;
}

}  // namespace

void SceneSpec::validate() const {
  if (num_frames < 1) throw Error(ErrorKind::kPrecondition, "scene needs at least one frame");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorKind::kPrecondition, "noise_sigma must be >= 0");
  for (const auto& o : objects) {
    if (o.points < 1) throw Error(ErrorKind::kPrecondition, "object point count must be positive");
    if (!(o.size.array() > 0.0).all() && o.shape != Shape::kWall) {
      throw Error(ErrorKind::kPrecondition, "object size must be positive");
    }
  }
}

RigidTransform object_pose(const SceneObject& object, std::size_t frame) {
  const Mat3 r = power(RigidTransform(object.motion.rotation(), Vec3::Zero()), frame).rotation() *
                 object.pose.rotation();
  const Vec3 c = object.pose.translation() + static_cast<double>(frame) * object.motion.translation();
  return RigidTransform(r, c);
}

std::vector<TimedPointCloud> generate(const SceneSpec& spec) {
  spec.validate();
  std::vector<std::vector<Vec3>> local(spec.objects.size());
  for (std::size_t o = 0; o < spec.objects.size(); ++o) {
    std::mt19937_64 rng(mix(spec.rng_seed ^ mix(o + 1)));
    local[o] = sample_surface(spec.objects[o], rng);
  }

  std::vector<TimedPointCloud> frames(spec.num_frames);
  for (std::size_t t = 0; t < spec.num_frames; ++t) {
    const RigidTransform sensor = power(spec.ego_motion, t);
    const RigidTransform to_sensor = sensor.inverse();
    const Mat3 next_axes = power(spec.ego_motion, t + 1).rotation().transpose();
    std::mt19937_64 noise_rng(mix(spec.rng_seed ^ mix(0xF00D0000ull + t)));
    std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);

    TimedPointCloud& cloud = frames[t];
    cloud.frame_index = static_cast<std::uint32_t>(t);
    auto& flow = cloud.gt_flow.emplace();
    auto& cls = cloud.class_id.emplace();
    auto& fg = cloud.is_foreground.emplace();
    for (std::size_t o = 0; o < spec.objects.size(); ++o) {
      const SceneObject& obj = spec.objects[o];
      const RigidTransform now = object_pose(obj, t);
      const RigidTransform next = object_pose(obj, t + 1);
      for (const Vec3& s : local[o]) {
        if (occluded(obj, s, t)) continue;
        const Vec3 x_now = now.apply(s);
        const Vec3 x_next = next.apply(s);
        Vec3 y = to_sensor.apply(x_now);
        if (spec.noise_sigma > 0.0) y += Vec3(noise(noise_rng), noise(noise_rng), noise(noise_rng));
        cloud.points.push_back(y);
        flow.push_back(next_axes * (x_next - x_now));
        cls.push_back(obj.class_id);
        fg.push_back(obj.shape == Shape::kWall ? 0 : 1);
      }
    }
  }
  return frames;
}

SceneSpec fig2_scene(double separation, double speed, std::size_t points_per_object) {
  const Vec3 size(0.5, 0.5, 1.5);
  const double offset = (size.y() + separation) / 2.0;
  SceneSpec spec;
  spec.num_frames = 5;
  SceneObject left;
  left.shape = Shape::kBox;
  left.size = size;
  left.pose = RigidTransform::from_translation(Vec3(0.0, -offset, size.z() / 2.0));
  left.motion = RigidTransform::from_translation(Vec3(speed, 0.0, 0.0));
  left.points = points_per_object;
  left.class_id = 1;
  SceneObject right = left;
  right.pose = RigidTransform::from_translation(Vec3(0.0, offset, size.z() / 2.0));
  right.motion = RigidTransform::from_translation(Vec3(-speed, 0.0, 0.0));
  right.class_id = 2;
  spec.objects = {left, right};
  return spec;
}

namespace {

constexpr std::uint16_t kClassBackground = 0;
constexpr std::uint16_t kClassPedestrian = 1;
constexpr std::uint16_t kClassVehicle = 3;
constexpr double kNoise = 0.02;

SceneObject wall(const Vec3& center, double length, double height, double yaw,
                 std::size_t points) {
  SceneObject w;
  w.shape = Shape::kWall;
  w.size = Vec3(length, 0.0, height);
  w.pose = RigidTransform::from_axis_angle(Vec3::UnitZ(), yaw, center);
  w.points = points;
  w.class_id = kClassBackground;
  return w;
}

SceneObject box(const Vec3& size, const Vec3& base_center, std::size_t points,
                std::uint16_t class_id, const RigidTransform& motion = {}) {
  SceneObject b;
  b.shape = Shape::kBox;
  b.size = size;
  b.pose = RigidTransform::from_translation(base_center + Vec3(0.0, 0.0, size.z() / 2.0));
  b.motion = motion;
  b.points = points;
  b.class_id = class_id;
  return b;
}

SceneObject pedestrian(const Vec3& base_center, const Vec3& velocity, std::size_t points) {
  SceneObject p;
  p.shape = Shape::kCylinder;
  p.size = Vec3(0.5, 0.5, 1.7);
  p.pose = RigidTransform::from_translation(base_center + Vec3(0.0, 0.0, 0.85));
  p.motion = RigidTransform::from_translation(velocity);
  p.points = points;
  p.class_id = kClassPedestrian;
  return p;
}

std::vector<SceneObject> room_walls(std::size_t points_per_wall) {
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  return {
      wall(Vec3(0.0, 4.0, 1.25), 10.0, 2.5, 0.0, points_per_wall),
      wall(Vec3(0.0, -4.0, 1.25), 10.0, 2.5, 0.0, points_per_wall),
      wall(Vec3(5.0, 0.0, 1.25), 8.0, 2.5, kHalfPi, points_per_wall),
      wall(Vec3(-5.0, 0.0, 1.25), 8.0, 2.5, kHalfPi, points_per_wall),
  };
}

}  // namespace

std::vector<NamedScene> benchmark_suite(std::uint64_t seed) {
  std::vector<NamedScene> suite;
  auto add = [&](SceneSpec spec, const char* name) {
    spec.rng_seed = mix(seed ^ mix(suite.size() + 101));
    suite.push_back({std::move(spec), name});
  };

  {
    SceneSpec s;
    s.noise_sigma = kNoise;
    s.objects = room_walls(120);
    s.objects.push_back(box(Vec3(2.0, 1.0, 1.2), Vec3(1.5, -1.5, 0.0), 150, kClassVehicle));
    add(s, "static_room");
  }
  {
    SceneSpec s;
    s.noise_sigma = kNoise;
    s.objects = room_walls(80);
    s.objects.push_back(box(Vec3(3.0, 1.6, 1.4), Vec3(-1.5, 0.5, 0.0), 250, kClassVehicle,
                            RigidTransform::from_translation(Vec3(0.25, 0.0, 0.0))));
    add(s, "single_mover");
  }
  add(fig2_scene(0.25), "fig2_sep025");
  add(fig2_scene(0.5), "fig2_sep050");
  {
    SceneSpec s;
    s.noise_sigma = kNoise;
    s.objects.push_back(wall(Vec3(0.0, 0.0, 1.25), 7.0, 2.5, 0.0, 700));
    // Cylinder surfaces sit 0.5 m from the wall: apart at 0.3 m, joined at 0.8 m.
    const double y = 0.75;
    s.objects.push_back(pedestrian(Vec3(-2.25, y, 0.0), Vec3(-0.12, 0.0, 0.0), 80));
    s.objects.push_back(pedestrian(Vec3(-0.75, y, 0.0), Vec3(0.10, 0.0, 0.0), 80));
    s.objects.push_back(pedestrian(Vec3(0.75, y, 0.0), Vec3(0.10, 0.0, 0.0), 80));
    s.objects.push_back(pedestrian(Vec3(2.25, y, 0.0), Vec3(0.15, 0.0, 0.0), 80));
    add(s, "crowd");
  }
  {
    SceneSpec s;
    s.noise_sigma = kNoise;
    s.objects.push_back(wall(Vec3(0.0, 3.0, 1.25), 10.0, 2.5, 0.0, 150));
    SceneObject car = box(Vec3(4.0, 1.8, 1.5), Vec3(-1.0, 0.0, 0.0), 500, kClassVehicle,
                          RigidTransform::from_translation(Vec3(0.1, 0.0, 0.0)));
    // A pole in front hides a slab of the car in every frame but the last.
    car.occluder = Occluder{Vec3(-0.4, -1.0, -1.0), Vec3(0.4, 1.0, 1.0), {0, 1, 2, 3}};
    s.objects.push_back(car);
    add(s, "occlusion_split");
  }
  {
    SceneSpec s;
    s.noise_sigma = kNoise;
    s.objects.push_back(wall(Vec3(0.0, 3.5, 1.25), 10.0, 2.5, 0.0, 150));
    const double yaw = 4.0 * std::numbers::pi / 180.0;
    s.objects.push_back(box(Vec3(4.0, 1.8, 1.5), Vec3(0.0, 0.0, 0.0), 500, kClassVehicle,
                            RigidTransform::from_axis_angle(Vec3::UnitZ(), yaw,
                                                            Vec3(0.2, 0.0, 0.0))));
    add(s, "rotating_vehicle");
  }
  return suite;
}

std::optional<SceneSpec> scene_by_name(const std::string& name, std::uint64_t seed) {
  if (name == "fig2") {
    SceneSpec s = fig2_scene();
    s.rng_seed = seed;
    return s;
  }
  for (auto& scene : benchmark_suite(seed)) {
    if (scene.name == name) return std::move(scene.spec);
  }
  return std::nullopt;
}

}  // namespace lif::synth
