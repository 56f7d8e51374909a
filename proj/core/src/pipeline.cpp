#include "domescan/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include "domescan/error.hpp"
#include "domescan/ingest.hpp"
#include "domescan/storage.hpp"

namespace domescan {

namespace fs = std::filesystem;

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (unsigned t = 0; t < jobs; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<std::uint32_t> export_representations(const std::string& in_dir,
                                                  std::shared_ptr<const SensorIntrinsics> intrinsics,
                                                  const RepresentationConfig& config, const std::string& out_dir,
                                                  unsigned jobs) {
  const auto files = list_frame_files(in_dir);
  fs::create_directories(out_dir);
  const ProjectionTable table(*intrinsics, config.projection_mode);
  std::vector<std::uint32_t> ids(files.size());
  std::vector<ChannelManifest> manifests(files.size());

  parallel_for(files.size(), jobs, [&](std::size_t i) {
    const LidarScan scan = read_scan(files[i], intrinsics);
    std::optional<PointImage> points;
    if (config.positional) points = project(scan, table);
    const FrameRepresentation rep = build_representation(scan, points ? &*points : nullptr, config);
    write_representation((fs::path(out_dir) / scan_filename(scan.frame_id)).string(), rep);
    ids[i] = scan.frame_id;
    manifests[i] = rep.manifest;
  });

  ChannelManifest manifest;
  if (!manifests.empty()) {
    manifest = manifests.front();
  } else {
    manifest.channels = config.channels();
    manifest.excluded = config.excluded;
    manifest.projection_mode = config.projection_mode;
  }
  std::ofstream out(fs::path(out_dir) / "channels.json", std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, out_dir, "cannot write channels.json");
  out << manifest_to_json(manifest) << '\n';
  return ids;
}

BenchReport bench(std::span<const std::uint8_t> stream, std::shared_ptr<const SensorIntrinsics> intrinsics,
                  const BenchOptions& options) {
  using clock = std::chrono::steady_clock;
  RepresentationConfig config = options.representation;
  config.positional = options.positional;
  config.projection_mode = options.mode;
  const ProjectionTable table(*intrinsics, options.mode);

  ScanAssembler assembler(intrinsics);
  PacketStreamReader reader(stream);
  std::vector<LidarScan> completed;
  std::vector<double> latencies_ms;
  std::size_t full_frames = 0;
  float sink = 0.0f;

  auto process = [&](clock::time_point& mark) {
    for (const auto& scan : completed) {
      if (scan.received_columns == scan.cols()) ++full_frames;
      std::optional<PointImage> points;
      if (config.positional) points = project(scan, table);
      const FrameRepresentation rep = build_representation(scan, points ? &*points : nullptr, config);
      sink += rep.data[rep.data.size() / 2];
      const auto now = clock::now();
      latencies_ms.push_back(std::chrono::duration<double, std::milli>(now - mark).count());
      mark = now;
    }
    completed.clear();
  };

  const auto start = clock::now();
  auto mark = start;
  while (auto bytes = reader.next()) {
    assembler.push(*bytes, completed);
    if (!completed.empty()) process(mark);
  }
  assembler.finish(completed);
  process(mark);
  const auto stop = clock::now();
  (void)sink;

  if (full_frames < options.min_frames) {
    throw Error(ErrorCode::InsufficientFrames, "source",
                "need " + std::to_string(options.min_frames) + " complete frames, found " +
                    std::to_string(full_frames));
  }

  BenchReport report;
  report.frames = latencies_ms.size();
  report.total_seconds = std::chrono::duration<double>(stop - start).count();
  report.scans_per_second = report.frames / report.total_seconds;
  double sum = 0.0;
  for (double l : latencies_ms) sum += l;
  report.mean_latency_ms = sum / static_cast<double>(latencies_ms.size());
  std::vector<double> sorted = latencies_ms;
  std::sort(sorted.begin(), sorted.end());
  const auto p99_index = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(sorted.size()))) - 1;
  report.p99_latency_ms = sorted[std::min(p99_index, sorted.size() - 1)];
  report.rows = intrinsics->beam_count;
  report.cols = intrinsics->scan_width;
  return report;
}

}  // namespace domescan
