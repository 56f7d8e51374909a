#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <queue>

#include "domescan/error.hpp"
#include "domescan/ingest.hpp"
#include "domescan/intrinsics.hpp"
#include "domescan/projection.hpp"
#include "domescan/synth.hpp"

using namespace domescan;
using namespace domescan::synth;

namespace {

std::shared_ptr<const SensorIntrinsics> dome(int beams, int width, double xn = 0, double zn = 0) {
  return std::make_shared<const SensorIntrinsics>(make_uniform_intrinsics(beams, width, xn, zn));
}

Primitive sphere(std::array<double, 3> c, double r, std::string label = "person") {
  Primitive p;
  p.shape = Shape::kSphere;
  p.center = c;
  p.size = {r, 0, 0};
  p.label = std::move(label);
  return p;
}

// 4-connected components of a mask (columns wrap around).
int components(const Grid<std::uint8_t>& m) {
  Grid<std::uint8_t> seen(m.rows(), m.cols());
  int count = 0;
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      if (!m(r, c) || seen(r, c)) continue;
      ++count;
      std::queue<std::pair<int, int>> q;
      q.push({r, c});
      seen(r, c) = 1;
      while (!q.empty()) {
        auto [y, x] = q.front();
        q.pop();
        const std::pair<int, int> nb[] = {{y - 1, x}, {y + 1, x}, {y, (x + 1) % m.cols()},
                                          {y, (x + m.cols() - 1) % m.cols()}};
        for (auto [ny, nx] : nb) {
          if (ny < 0 || ny >= m.rows() || !m(ny, nx) || seen(ny, nx)) continue;
          seen(ny, nx) = 1;
          q.push({ny, nx});
        }
      }
    }
  }
  return count;
}

}  // namespace

TEST(Synth, UnitSphereExample) {
  auto intr = dome(64, 512);
  Scene scene;
  scene.primitives.push_back(sphere({3, 0, 0.5}, 1.0));
  const auto r = render(scene, intr);
  ASSERT_EQ(r.annotations.instances.size(), 1u);
  EXPECT_EQ(r.annotations.instances[0].label, "person");
  const auto mask = rle_decode(r.annotations.instances[0].mask);
  EXPECT_EQ(components(mask), 1);
  std::uint64_t valid = 0;
  for (int row = 0; row < 64; ++row) {
    for (int col = 0; col < 512; ++col) {
      if (!r.scan.valid(row, col)) continue;
      ++valid;
      EXPECT_EQ(mask(row, col), 1);
      EXPECT_GE(r.scan.range_mm(row, col), 2000u);
      EXPECT_LE(r.scan.range_mm(row, col), 4000u);
    }
  }
  EXPECT_EQ(valid, rle_area(r.annotations.instances[0].mask));
  EXPECT_GT(valid, 100u);
  // Nearest surface point is |c| - 1 = sqrt(9.25) - 1 away.
  std::uint32_t nearest = UINT32_MAX;
  for (auto v : r.scan.range_mm.data()) {
    if (v) nearest = std::min(nearest, v);
  }
  EXPECT_NEAR(nearest, (std::sqrt(9.25) - 1) * 1000, 15);
}

TEST(Synth, EmptySceneIsCompleteButInvalid) {
  const auto r = render(Scene{}, dome(16, 64));
  EXPECT_EQ(r.scan.completeness(), 1.0);
  for (auto v : r.scan.valid.data()) EXPECT_EQ(v, 0);
  EXPECT_TRUE(r.annotations.instances.empty());
}

TEST(Synth, ProjectionRecoversGroundTruth) {
  Rng rng(5);
  for (int beams : {32, 64}) {
    auto intr = dome(beams, 256, 15.806, 7.5);
    for (int k = 0; k < 3; ++k) {
      Scene scene = random_scene(rng, Task::kPerson);
      scene.background.ground_z = -1.5;
      const auto r = render(scene, intr);
      const auto pts = project(r.scan, *intr);
      for (int row = 0; row < beams; ++row) {
        for (int col = 0; col < 256; ++col) {
          ASSERT_EQ(pts.valid(row, col), r.ground_truth.valid(row, col));
          if (!pts.valid(row, col)) continue;
          const double err = std::hypot(pts.x(row, col) - r.ground_truth.x(row, col),
                                        pts.y(row, col) - r.ground_truth.y(row, col),
                                        pts.z(row, col) - r.ground_truth.z(row, col));
          ASSERT_LE(err, 0.002);
        }
      }
    }
  }
}

TEST(Synth, PaperModeRoundTripIsSelfConsistent) {
  Rng rng(6);
  auto intr = dome(32, 128, 10, 0);
  Scene scene = random_scene(rng, Task::kAction);
  scene.background.wall_x = 12;
  RenderOptions opts;
  opts.mode = ProjectionMode::kPaperVerbatim;
  const auto r = render(scene, intr, opts);
  const auto pts = project(r.scan, *intr, ProjectionMode::kPaperVerbatim);
  for (std::size_t k = 0; k < pts.x.size(); ++k) {
    if (!pts.valid.data()[k]) continue;
    const double err = std::hypot(pts.x.data()[k] - r.ground_truth.x.data()[k],
                                  pts.y.data()[k] - r.ground_truth.y.data()[k],
                                  pts.z.data()[k] - r.ground_truth.z.data()[k]);
    ASSERT_LE(err, 0.002);
  }
}

TEST(Synth, RotationShiftsColumns) {
  Rng rng(7);
  auto intr = dome(16, 128);
  Scene scene;
  for (int i = 0; i < 4; ++i) {
    auto p = sphere({uniform_real(rng, -5, 5), uniform_real(rng, -5, 5), uniform_real(rng, 0, 2)}, 0.6);
    if (i % 2) {
      p.shape = Shape::kCylinder;
      p.size = {0.4, 0, 1.5};
    }
    scene.primitives.push_back(p);
  }
  scene.background.ground_z = -1.0;
  const int k = 5;
  const auto base = render(scene, intr);
  // The encoder angle decreases with the measurement id, so a positive
  // rotation moves content to lower columns.
  const auto rotated = render(rotate_z(scene, -2 * std::numbers::pi * k / 128), intr);
  int mismatches = 0;
  for (int row = 0; row < 16; ++row) {
    for (int col = 0; col < 128; ++col) {
      const auto a = base.scan.range_mm(row, col);
      const auto b = rotated.scan.range_mm(row, (col + k) % 128);
      if (a == b) continue;
      // Rotating the centres is exact only up to float rounding; allow
      // one-count quantization flips.
      ++mismatches;
      EXPECT_LE(std::abs(static_cast<long>(a) - static_cast<long>(b)), 1);
    }
  }
  EXPECT_LT(mismatches, 16 * 128 / 50);
}

TEST(Synth, QuantizationBoundedByRangeUnit) {
  auto base = make_uniform_intrinsics(16, 64);
  base.range_unit_mm = 4.0;
  auto intr = std::make_shared<const SensorIntrinsics>(base);
  Scene scene;
  scene.primitives.push_back(sphere({2.5, 1.0, 0.7}, 0.9));
  const auto r = render(scene, intr);
  for (int row = 0; row < 16; ++row) {
    for (int col = 0; col < 64; ++col) {
      if (!r.scan.valid(row, col)) continue;
      EXPECT_EQ(r.scan.range_mm(row, col), r.range_raw(row, col) * 4u);
      const double exact = std::hypot(r.ground_truth.x(row, col), r.ground_truth.y(row, col),
                                      r.ground_truth.z(row, col)) * 1000;
      EXPECT_LE(std::abs(exact - r.scan.range_mm(row, col)), 2.0 + 1e-6);
    }
  }
}

TEST(Synth, StreamDecodesToRenderedScans) {
  auto intr = dome(8, 64);
  Rng rng(8);
  std::vector<Scene> scenes;
  for (int i = 0; i < 3; ++i) scenes.push_back(random_scene(rng, Task::kPerson));
  const auto stream = make_stream(scenes, intr, {}, 40);
  EXPECT_EQ(stream.size(), 3u * 4 * packet_size(8));
  const auto scans = assemble(stream, intr);
  ASSERT_EQ(scans.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(scans[static_cast<std::size_t>(i)].completeness(), 1.0);
    EXPECT_EQ(scans[static_cast<std::size_t>(i)].frame_id, 40u + static_cast<std::uint32_t>(i));
    EXPECT_TRUE(scans[static_cast<std::size_t>(i)].same_data(
        render(scenes[static_cast<std::size_t>(i)], intr, {}, 40 + static_cast<std::uint32_t>(i)).scan));
  }
}

TEST(Synth, OcclusionPicksNearestAndMasksAreDisjoint) {
  auto intr = dome(32, 128);
  Scene scene;
  scene.primitives.push_back(sphere({4, 0, 1.5}, 0.5, "walking"));
  scene.primitives.push_back(sphere({2, 0, 0.25}, 0.4, "waving"));
  const auto r = render(scene, intr);
  ASSERT_EQ(r.annotations.instances.size(), 2u);
  const auto a = rle_decode(r.annotations.instances[0].mask);
  const auto b = rle_decode(r.annotations.instances[1].mask);
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_FALSE(a.data()[k] && b.data()[k]);
}

TEST(Synth, SceneJsonRoundTrip) {
  Rng rng(9);
  Scene scene = random_scene(rng, Task::kAction);
  scene.primitives[0].velocity = {0.1, -0.2, 0};
  scene.background.ground_z = -1.2;
  const auto back = scene_from_json(scene_to_json(scene));
  EXPECT_EQ(back, scene);
  EXPECT_THROW(scene_from_json("{\"primitives\":[{\"type\":\"cone\",\"center\":[0,0,0]}]}"), Error);
  EXPECT_THROW(scene_from_json("{\"primitives\":[{\"type\":\"sphere\",\"center\":[0,0,0],\"radius\":-1}]}"), Error);
  EXPECT_THROW(validate(scene, Task::kPerson), Error);
  EXPECT_NO_THROW(validate(scene, Task::kAction));
}

TEST(Synth, MirrorAndAnimate) {
  Scene scene;
  auto p = sphere({1, 2, 3}, 1);
  p.velocity = {0.5, 0.25, 0};
  scene.primitives.push_back(p);
  const auto m = mirror_y(scene);
  EXPECT_EQ(m.primitives[0].center, (std::array<double, 3>{1, -2, 3}));
  const auto a = animate(scene, 4);
  EXPECT_EQ(a.primitives[0].center, (std::array<double, 3>{3, 3, 3}));
}
