#include "domescan/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "domescan/error.hpp"

namespace domescan::synth {

namespace {

using Vec3 = std::array<double, 3>;
constexpr double kNoHit = std::numeric_limits<double>::infinity();

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 sub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

// Smallest root of a s^2 + b s + c = 0 that is >= s_min.
double first_root(double a, double b, double c, double s_min) {
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0 || a == 0.0) return kNoHit;
  const double sq = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double q = -0.5 * (b + std::copysign(sq, b));
  double r0 = q / a;
  double r1 = q != 0.0 ? c / q : r0;
  if (r0 > r1) std::swap(r0, r1);
  if (r0 >= s_min) return r0;
  if (r1 >= s_min) return r1;
  return kNoHit;
}

// Rays are p(s) = origin + s * dir with s the sensor range in meters.
double hit_sphere(const Primitive& p, const Vec3& origin, const Vec3& dir, double s_min) {
  const Vec3 oc = sub(origin, p.center);
  const double radius = p.size[0];
  return first_root(dot(dir, dir), 2.0 * dot(dir, oc), dot(oc, oc) - radius * radius, s_min);
}

double hit_box(const Primitive& p, const Vec3& origin, const Vec3& dir, double s_min) {
  double enter = -kNoHit;
  double exit = kNoHit;
  for (int k = 0; k < 3; ++k) {
    const double lo = p.center[k] - 0.5 * p.size[k];
    const double hi = p.center[k] + 0.5 * p.size[k];
    if (dir[k] == 0.0) {
      if (origin[k] < lo || origin[k] > hi) return kNoHit;
      continue;
    }
    double t0 = (lo - origin[k]) / dir[k];
    double t1 = (hi - origin[k]) / dir[k];
    if (t0 > t1) std::swap(t0, t1);
    enter = std::max(enter, t0);
    exit = std::min(exit, t1);
  }
  if (enter > exit) return kNoHit;
  if (enter >= s_min) return enter;
  if (exit >= s_min) return exit;
  return kNoHit;
}

double hit_cylinder(const Primitive& p, const Vec3& origin, const Vec3& dir, double s_min) {
  const double radius = p.size[0];
  const double z_lo = p.center[2] - 0.5 * p.size[2];
  const double z_hi = p.center[2] + 0.5 * p.size[2];
  double best = kNoHit;

  // Side wall.
  const double ox = origin[0] - p.center[0];
  const double oy = origin[1] - p.center[1];
  const double a = dir[0] * dir[0] + dir[1] * dir[1];
  if (a > 0.0) {
    const double b = 2.0 * (ox * dir[0] + oy * dir[1]);
    const double c = ox * ox + oy * oy - radius * radius;
    const double disc = b * b - 4.0 * a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double s : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
        if (s < s_min || s >= best) continue;
        const double z = origin[2] + s * dir[2];
        if (z >= z_lo && z <= z_hi) best = s;
      }
    }
  }
  // Caps.
  if (dir[2] != 0.0) {
    for (double zc : {z_lo, z_hi}) {
      const double s = (zc - origin[2]) / dir[2];
      if (s < s_min || s >= best) continue;
      const double x = ox + s * dir[0];
      const double y = oy + s * dir[1];
      if (x * x + y * y <= radius * radius) best = s;
    }
  }
  return best;
}

double hit_primitive(const Primitive& p, const Vec3& origin, const Vec3& dir, double s_min) {
  switch (p.shape) {
    case Shape::kSphere: return hit_sphere(p, origin, dir, s_min);
    case Shape::kBox: return hit_box(p, origin, dir, s_min);
    case Shape::kCylinder: return hit_cylinder(p, origin, dir, s_min);
  }
  return kNoHit;
}

double hit_plane(int axis, double value, const Vec3& origin, const Vec3& dir, double s_min) {
  if (dir[axis] == 0.0) return kNoHit;
  const double s = (value - origin[axis]) / dir[axis];
  return s >= s_min ? s : kNoHit;
}

Shape parse_shape(const std::string& text) {
  if (text == "sphere") return Shape::kSphere;
  if (text == "box") return Shape::kBox;
  if (text == "cylinder") return Shape::kCylinder;
  throw Error(ErrorCode::SchemaViolation, "type", "unknown primitive '" + text + "'");
}

Vec3 read_vec3(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::SchemaViolation, "vector", "expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Emission read_emission(const nlohmann::json& j, Emission fallback) {
  Emission e = fallback;
  if (j.contains("reflectivity")) e.reflectivity = j["reflectivity"].get<std::uint16_t>();
  if (j.contains("signal")) e.signal = j["signal"].get<std::uint16_t>();
  if (j.contains("nir")) e.nir = j["nir"].get<std::uint16_t>();
  return e;
}

}  // namespace

std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::kSphere: return "sphere";
    case Shape::kBox: return "box";
    case Shape::kCylinder: return "cylinder";
  }
  return "unknown";
}

void validate(const Scene& scene, std::optional<Task> task) {
  for (const auto& p : scene.primitives) {
    const bool ok = p.shape == Shape::kSphere     ? p.size[0] > 0.0
                    : p.shape == Shape::kCylinder ? p.size[0] > 0.0 && p.size[2] > 0.0
                                                  : p.size[0] > 0.0 && p.size[1] > 0.0 && p.size[2] > 0.0;
    if (!ok) throw Error(ErrorCode::InvariantViolation, "size", "primitive sizes must be positive");
    if (task && !p.label.empty() && !in_vocabulary(*task, p.label)) {
      throw Error(ErrorCode::InvariantViolation, "label", "'" + p.label + "' is not in the task vocabulary");
    }
  }
}

Scene scene_from_json(std::string_view text) {
  auto doc = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::MalformedDocument, "scene");
  Scene scene;
  try {
    for (const auto& j : doc.value("primitives", nlohmann::json::array())) {
      Primitive p;
      p.shape = parse_shape(j.at("type").get<std::string>());
      p.center = read_vec3(j.at("center"));
      if (p.shape == Shape::kSphere) {
        p.size = {j.at("radius").get<double>(), 0.0, 0.0};
      } else if (p.shape == Shape::kCylinder) {
        p.size = {j.at("radius").get<double>(), 0.0, j.at("height").get<double>()};
      } else {
        p.size = read_vec3(j.at("size"));
      }
      p.emission = read_emission(j, p.emission);
      p.label = j.value("label", std::string{});
      if (j.contains("velocity")) p.velocity = read_vec3(j["velocity"]);
      scene.primitives.push_back(std::move(p));
    }
    if (doc.contains("background")) {
      const auto& b = doc["background"];
      if (b.contains("ground_z")) scene.background.ground_z = b["ground_z"].get<double>();
      if (b.contains("wall_x")) scene.background.wall_x = b["wall_x"].get<double>();
      scene.background.emission = read_emission(b, scene.background.emission);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, "scene", e.what());
  }
  validate(scene);
  return scene;
}

std::string scene_to_json(const Scene& scene) {
  nlohmann::ordered_json doc;
  doc["primitives"] = nlohmann::ordered_json::array();
  for (const auto& p : scene.primitives) {
    nlohmann::ordered_json j;
    j["type"] = std::string(to_string(p.shape));
    j["center"] = p.center;
    if (p.shape == Shape::kSphere) {
      j["radius"] = p.size[0];
    } else if (p.shape == Shape::kCylinder) {
      j["radius"] = p.size[0];
      j["height"] = p.size[2];
    } else {
      j["size"] = p.size;
    }
    j["reflectivity"] = p.emission.reflectivity;
    j["signal"] = p.emission.signal;
    j["nir"] = p.emission.nir;
    if (!p.label.empty()) j["label"] = p.label;
    if (p.velocity != Vec3{}) j["velocity"] = p.velocity;
    doc["primitives"].push_back(std::move(j));
  }
  nlohmann::ordered_json b;
  if (scene.background.ground_z) b["ground_z"] = *scene.background.ground_z;
  if (scene.background.wall_x) b["wall_x"] = *scene.background.wall_x;
  b["reflectivity"] = scene.background.emission.reflectivity;
  b["signal"] = scene.background.emission.signal;
  b["nir"] = scene.background.emission.nir;
  doc["background"] = std::move(b);
  return doc.dump(2);
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, path, "cannot open scene file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return scene_from_json(ss.str());
}

Scene mirror_y(const Scene& scene) {
  Scene out = scene;
  for (auto& p : out.primitives) {
    p.center[1] = -p.center[1];
    p.velocity[1] = -p.velocity[1];
  }
  return out;
}

Scene rotate_z(const Scene& scene, double angle_rad) {
  Scene out = scene;
  const double c = std::cos(angle_rad);
  const double s = std::sin(angle_rad);
  for (auto& p : out.primitives) {
    const double x = p.center[0];
    const double y = p.center[1];
    p.center[0] = c * x - s * y;
    p.center[1] = s * x + c * y;
  }
  return out;
}

Scene animate(const Scene& scene, int frames) {
  Scene out = scene;
  for (auto& p : out.primitives) {
    for (int k = 0; k < 3; ++k) p.center[k] += frames * p.velocity[k];
  }
  return out;
}

Scene random_scene(Rng& rng, Task task, const RandomSceneOptions& options) {
  const auto& vocab = task_vocabulary(task);
  Scene scene;
  for (int i = 0; i < options.primitive_count; ++i) {
    Primitive p;
    const auto kinds = options.allow_boxes ? 3u : 2u;
    switch (uniform_below(rng, kinds)) {
      case 0: p.shape = Shape::kSphere; break;
      case 1: p.shape = Shape::kCylinder; break;
      default: p.shape = Shape::kBox; break;
    }
    const double distance = uniform_real(rng, options.min_distance_m, options.max_distance_m);
    const double heading = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
    p.center = {distance * std::cos(heading), distance * std::sin(heading),
                uniform_real(rng, options.min_height_m, options.max_height_m)};
    const double a = uniform_real(rng, options.min_size_m, options.max_size_m);
    const double b = uniform_real(rng, options.min_size_m, options.max_size_m);
    const double c = uniform_real(rng, options.min_size_m, 3.0 * options.max_size_m);
    if (p.shape == Shape::kSphere) p.size = {a, 0.0, 0.0};
    else if (p.shape == Shape::kCylinder) p.size = {a, 0.0, c};
    else p.size = {a, b, c};
    p.emission = {static_cast<std::uint16_t>(uniform_below(rng, 256)),
                  static_cast<std::uint16_t>(uniform_below(rng, 2048)),
                  static_cast<std::uint16_t>(uniform_below(rng, 2048))};
    if (uniform_unit(rng) < options.labeled_fraction) {
      p.label = vocab[static_cast<std::size_t>(uniform_below(rng, vocab.size()))];
    }
    scene.primitives.push_back(std::move(p));
  }
  return scene;
}

Rendered render(const Scene& scene, std::shared_ptr<const SensorIntrinsics> intrinsics,
                const RenderOptions& options, std::uint32_t frame_id) {
  validate(scene);
  const SensorIntrinsics& intr = *intrinsics;
  const int h = intr.beam_count;
  const int w = intr.scan_width;
  const double s_min = std::max(derived_n(intr) / 1000.0, 1e-9);
  const double unit_m = intr.range_unit_mm / 1000.0;

  Rendered out{LidarScan(frame_id, intrinsics),
               Grid<std::uint32_t>(h, w),
               AnnotationSet{frame_id, h, w, {}},
               PointImage{Grid<double>(h, w), Grid<double>(h, w), Grid<double>(h, w), Grid<std::uint8_t>(h, w),
                          options.mode},
               Grid<std::int32_t>(h, w, -1)};
  out.scan.received_columns = w;

  Rng noise_rng(options.noise_seed);
  std::normal_distribution<double> noise(0.0, options.noise_std_mm / 1000.0);

  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      Vec3 dir;
      Vec3 origin;
      beam_geometry(intr, options.mode, measurement_of_column(intr, row, col), row, dir, origin);

      double best = kNoHit;
      int hit = -1;
      for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
        const double s = hit_primitive(scene.primitives[i], origin, dir, s_min);
        if (s < best) {
          best = s;
          hit = static_cast<int>(i);
        }
      }
      Emission emission = hit >= 0 ? scene.primitives[static_cast<std::size_t>(hit)].emission
                                   : scene.background.emission;
      if (scene.background.ground_z) {
        const double s = hit_plane(2, *scene.background.ground_z, origin, dir, s_min);
        if (s < best) {
          best = s;
          hit = -1;
          emission = scene.background.emission;
        }
      }
      if (scene.background.wall_x) {
        const double s = hit_plane(0, *scene.background.wall_x, origin, dir, s_min);
        if (s < best) {
          best = s;
          hit = -1;
          emission = scene.background.emission;
        }
      }
      if (!(best <= options.max_range_m)) continue;

      double measured = best;
      if (options.noise_std_mm > 0.0) measured = std::max(0.0, measured + noise(noise_rng));
      const double counts = std::round(measured / unit_m);
      if (counts < 1.0 || counts > static_cast<double>(std::numeric_limits<std::uint32_t>::max())) continue;
      const auto raw = static_cast<std::uint32_t>(counts);

      out.range_raw(row, col) = raw;
      out.scan.range_mm(row, col) = static_cast<std::uint32_t>(std::llround(raw * intr.range_unit_mm));
      out.scan.signal(row, col) = emission.signal;
      out.scan.reflectivity(row, col) = emission.reflectivity;
      out.scan.nir(row, col) = emission.nir;
      out.scan.valid(row, col) = 1;
      out.ground_truth.x(row, col) = origin[0] + best * dir[0];
      out.ground_truth.y(row, col) = origin[1] + best * dir[1];
      out.ground_truth.z(row, col) = origin[2] + best * dir[2];
      out.ground_truth.valid(row, col) = 1;
      out.hit_primitive(row, col) = hit;
    }
  }

  for (std::size_t i = 0; i < scene.primitives.size(); ++i) {
    const auto& p = scene.primitives[i];
    if (p.label.empty()) continue;
    Grid<std::uint8_t> mask(h, w);
    bool any = false;
    for (std::size_t k = 0; k < mask.size(); ++k) {
      if (out.hit_primitive.data()[k] == static_cast<std::int32_t>(i)) {
        mask.data()[k] = 1;
        any = true;
      }
    }
    if (any) out.annotations.instances.push_back({rle_encode(mask), p.label});
  }
  return out;
}

std::vector<LidarPacket> packetize(const LidarScan& scan, const Grid<std::uint32_t>& range_raw,
                                   const SensorIntrinsics& intr, std::uint64_t timestamp_base_ns) {
  const int w = intr.scan_width;
  if (w % kColumnsPerPacket != 0) {
    throw Error(ErrorCode::InvariantViolation, "scan_width", "must be a multiple of 16 to packetize");
  }
  if (!range_raw.same_shape(intr.beam_count, w) || scan.rows() != intr.beam_count || scan.cols() != w) {
    throw Error(ErrorCode::DimensionMismatch, "scan");
  }
  // 10 Hz rotation: 100 ms per revolution.
  const std::uint64_t column_ns = 100'000'000ULL / static_cast<std::uint64_t>(w);
  std::vector<LidarPacket> packets(static_cast<std::size_t>(w / kColumnsPerPacket));
  for (std::size_t p = 0; p < packets.size(); ++p) {
    LidarPacket& packet = packets[p];
    packet.beam_count = static_cast<std::uint16_t>(intr.beam_count);
    for (int k = 0; k < kColumnsPerPacket; ++k) {
      const int m = static_cast<int>(p) * kColumnsPerPacket + k;
      MeasurementBlock& block = packet.blocks[static_cast<std::size_t>(k)];
      block.measurement_id = static_cast<std::uint16_t>(m);
      block.frame_id = static_cast<std::uint16_t>(scan.frame_id);
      block.timestamp_ns = timestamp_base_ns + static_cast<std::uint64_t>(m) * column_ns;
      block.beams.resize(static_cast<std::size_t>(intr.beam_count));
      for (int row = 0; row < intr.beam_count; ++row) {
        const int col = destaggered_column(intr, row, m);
        BeamRecord& beam = block.beams[static_cast<std::size_t>(row)];
        beam.range_raw = range_raw(row, col);
        beam.signal = scan.signal(row, col);
        beam.reflectivity = scan.reflectivity(row, col);
        beam.nir = scan.nir(row, col);
      }
    }
  }
  return packets;
}

std::vector<std::uint8_t> make_stream(std::span<const Scene> scenes,
                                      std::shared_ptr<const SensorIntrinsics> intrinsics,
                                      const RenderOptions& options, std::uint16_t first_frame_id) {
  std::vector<std::uint8_t> stream;
  std::vector<std::uint8_t> buffer;
  for (std::size_t f = 0; f < scenes.size(); ++f) {
    const auto frame_id = static_cast<std::uint16_t>(first_frame_id + f);
    RenderOptions frame_options = options;
    frame_options.noise_seed = options.noise_seed + f;
    const Rendered r = render(scenes[f], intrinsics, frame_options, frame_id);
    const auto packets = packetize(r.scan, r.range_raw, *intrinsics, static_cast<std::uint64_t>(f) * 100'000'000ULL);
    for (const auto& packet : packets) {
      encode_packet_into(packet, buffer, intrinsics->scan_width);
      stream.insert(stream.end(), buffer.begin(), buffer.end());
    }
  }
  return stream;
}

}  // namespace domescan::synth
