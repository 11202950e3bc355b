#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lif/types.hpp"

namespace lif::synth {

enum class Shape {
  kBox,       // closed box without the bottom face
  kCylinder,  // pedestrian stand-in: lateral surface plus top cap
  kWall,      // single vertical rectangle in the local x-z plane
};

/// Points of an object whose local coordinates fall inside this box are
/// dropped in the listed frames.
struct Occluder {
  Vec3 local_min;
  Vec3 local_max;
  std::vector<std::size_t> frames;
};

struct SceneObject {
  Shape shape = Shape::kBox;
  /// Box: extent along local x, y, z. Cylinder: (diameter, diameter, height).
  /// Wall: (length, unused, height).
  Vec3 size = Vec3::Ones();
  /// Pose at frame 0. The translation is the object's geometric center.
  RigidTransform pose;
  /// Applied once per frame: rotation about the current center, then the
  /// translation, both in world axes.
  RigidTransform motion;
  std::size_t points = 100;
  std::uint16_t class_id = 0;
  std::optional<Occluder> occluder;
};

struct SceneSpec {
  std::vector<SceneObject> objects;
  /// Sensor motion per frame, in the previous sensor frame.
  RigidTransform ego_motion;
  double noise_sigma = 0.0;
  std::size_t num_frames = 5;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Object pose (rotation, center) at frame t.
RigidTransform object_pose(const SceneObject& object, std::size_t frame);

/// Samples every object once, then renders each frame in that frame's sensor
/// coordinates with gt_flow, class_id and is_foreground populated. gt_flow
/// of frame t is each point's displacement to frame t+1 expressed in frame
/// t+1's sensor axes, i.e. the residual motion after ego compensation.
std::vector<TimedPointCloud> generate(const SceneSpec& spec);

/// Two upright boxes `separation` apart (gap along y) moving +speed and
/// -speed along x; 5 frames, no ego motion, no noise.
SceneSpec fig2_scene(double separation = 0.5, double speed = 0.2,
                     std::size_t points_per_object = 100);

struct NamedScene {
  SceneSpec spec;
  std::string name;
};

/// The fixed evaluation catalog: static_room, single_mover, fig2_sep025,
/// fig2_sep050, crowd, occlusion_split, rotating_vehicle.
std::vector<NamedScene> benchmark_suite(std::uint64_t seed);

/// Catalog lookup by name; "fig2" is fig2_scene() with defaults. Returns
/// nullopt for unknown names.
std::optional<SceneSpec> scene_by_name(const std::string& name, std::uint64_t seed);

}  // namespace lif::synth
