#include <benchmark/benchmark.h>

#include <map>
#include <memory>

#include "domescan/ingest.hpp"
#include "domescan/intrinsics.hpp"
#include "domescan/projection.hpp"
#include "domescan/random.hpp"
#include "domescan/representation.hpp"
#include "domescan/synth.hpp"
#include "domescan/wire.hpp"

using namespace domescan;

namespace {

struct Fixture {
  std::shared_ptr<const SensorIntrinsics> intr;
  std::vector<std::uint8_t> stream;
  LidarScan scan;
};

const Fixture& fixture(int beams) {
  static std::map<int, Fixture> cache;
  auto it = cache.find(beams);
  if (it != cache.end()) return it->second;
  Fixture f;
  f.intr = std::make_shared<const SensorIntrinsics>(make_uniform_intrinsics(beams, 512, 15.8, 36.2));
  Rng rng(1);
  std::vector<synth::Scene> scenes;
  for (int k = 0; k < 4; ++k) {
    auto s = synth::random_scene(rng, Task::kPerson);
    s.background.ground_z = -1.2;
    scenes.push_back(s);
  }
  f.stream = synth::make_stream(scenes, f.intr);
  f.scan = assemble(f.stream, f.intr).front();
  return cache.emplace(beams, std::move(f)).first->second;
}

void BM_Decode(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)));
  const std::size_t size = packet_size(static_cast<std::size_t>(f.intr->beam_count));
  const std::span<const std::uint8_t> one(f.stream.data(), size);
  for (auto _ : state) benchmark::DoNotOptimize(decode_packet(one, f.intr->scan_width));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * size));
}

void BM_Assemble(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(assemble(f.stream, f.intr));
  state.SetItemsProcessed(state.iterations() * 4);
}

void BM_Project(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)));
  const ProjectionTable table(*f.intr, ProjectionMode::kStandard);
  for (auto _ : state) benchmark::DoNotOptimize(project(f.scan, table));
}

void BM_Representation(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)));
  const auto points = project(f.scan, *f.intr);
  RepresentationConfig config;
  config.positional = true;
  for (auto _ : state) benchmark::DoNotOptimize(build_representation(f.scan, &points, config));
}

void BM_FullPipeline(benchmark::State& state) {
  const auto& f = fixture(static_cast<int>(state.range(0)));
  const ProjectionTable table(*f.intr, ProjectionMode::kStandard);
  RepresentationConfig config;
  config.positional = true;
  for (auto _ : state) {
    for (const auto& scan : assemble(f.stream, f.intr)) {
      const auto points = project(scan, table);
      benchmark::DoNotOptimize(build_representation(scan, &points, config));
    }
  }
  state.SetItemsProcessed(state.iterations() * 4);
}

}  // namespace

BENCHMARK(BM_Decode)->Arg(64)->Arg(128);
BENCHMARK(BM_Assemble)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Project)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Representation)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FullPipeline)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
