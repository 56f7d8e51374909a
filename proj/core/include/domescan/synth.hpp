#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "domescan/annotation.hpp"
#include "domescan/projection.hpp"
#include "domescan/random.hpp"
#include "domescan/scan.hpp"
#include "domescan/wire.hpp"

namespace domescan::synth {

struct Emission {
  std::uint16_t reflectivity = 100;
  std::uint16_t signal = 200;
  std::uint16_t nir = 300;

  friend bool operator==(const Emission&, const Emission&) = default;
};

enum class Shape { kSphere, kBox, kCylinder };

std::string_view to_string(Shape shape);

/// All primitives are placed by their geometric centre (meters).
///   sphere:   size[0] = radius
///   box:      size = full extents along x, y, z (axis aligned)
///   cylinder: vertical axis; size[0] = radius, size[2] = height
struct Primitive {
  Shape shape = Shape::kSphere;
  std::array<double, 3> center{};
  std::array<double, 3> size{};
  Emission emission;
  std::string label;                     // empty: unlabeled clutter
  std::array<double, 3> velocity{};      // meters per frame, used by animate()

  friend bool operator==(const Primitive&, const Primitive&) = default;
};

struct Background {
  std::optional<double> ground_z;  // horizontal plane z = ground_z
  std::optional<double> wall_x;    // vertical plane x = wall_x
  Emission emission{20, 10, 50};

  friend bool operator==(const Background&, const Background&) = default;
};

struct Scene {
  std::vector<Primitive> primitives;
  Background background;

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Sizes must be positive; labels (when a task is given) must belong to it.
void validate(const Scene& scene, std::optional<Task> task = std::nullopt);

Scene scene_from_json(std::string_view text);
std::string scene_to_json(const Scene& scene);
Scene load_scene(const std::string& path);

/// Mirror about the x-z plane (y -> -y).
Scene mirror_y(const Scene& scene);
/// Rotation about the sensor z axis. Boxes keep their axis alignment, so the
/// result is exact only for spheres and cylinders.
Scene rotate_z(const Scene& scene, double angle_rad);
/// Moves each primitive by `frames` times its velocity.
Scene animate(const Scene& scene, int frames);

struct RandomSceneOptions {
  int primitive_count = 8;
  double min_distance_m = 1.5;
  double max_distance_m = 8.0;
  double min_height_m = -0.5;
  double max_height_m = 3.0;
  double min_size_m = 0.15;
  double max_size_m = 0.8;
  bool allow_boxes = true;
  double labeled_fraction = 0.75;
};

Scene random_scene(Rng& rng, Task task, const RandomSceneOptions& options = {});

struct RenderOptions {
  ProjectionMode mode = ProjectionMode::kStandard;
  double max_range_m = 120.0;
  double noise_std_mm = 0.0;  // Gaussian range noise, no accuracy contract
  std::uint64_t noise_seed = 0;
};

struct Rendered {
  LidarScan scan;
  Grid<std::uint32_t> range_raw;  // counts as they go on the wire
  AnnotationSet annotations;      // one instance per visible labeled primitive
  PointImage ground_truth;        // exact hit points, not quantized
  Grid<std::int32_t> hit_primitive;  // primitive index, -1 for none/background
};

/// Casts one ray per pixel along the direction the selected projection mode
/// assigns to it, starting at the front optics (range |n|). The first hit
/// gives the range, quantized to whole range counts.
Rendered render(const Scene& scene, std::shared_ptr<const SensorIntrinsics> intrinsics,
                const RenderOptions& options = {}, std::uint32_t frame_id = 0);

/// Splits a destaggered scan back into wire packets, 16 measurement ids per
/// packet. scan_width must be a multiple of 16.
std::vector<LidarPacket> packetize(const LidarScan& scan, const Grid<std::uint32_t>& range_raw,
                                   const SensorIntrinsics& intr, std::uint64_t timestamp_base_ns = 0);

/// Recorded stream with one frame per scene, frame ids counting up from
/// `first_frame_id`.
std::vector<std::uint8_t> make_stream(std::span<const Scene> scenes,
                                      std::shared_ptr<const SensorIntrinsics> intrinsics,
                                      const RenderOptions& options = {}, std::uint16_t first_frame_id = 0);

}  // namespace domescan::synth
