#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "domescan/intrinsics.hpp"
#include "domescan/representation.hpp"

namespace domescan {

/// Runs fn(0..count-1) on up to `jobs` threads (0 = hardware concurrency).
/// The first exception thrown by any task is rethrown after all finish.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

/// Reads every frame_<id>.ldt scan under `in_dir`, builds its representation
/// and writes it to `out_dir` under the same name, plus out_dir/channels.json
/// holding the channel manifest. Returns the frame ids in order.
std::vector<std::uint32_t> export_representations(const std::string& in_dir,
                                                  std::shared_ptr<const SensorIntrinsics> intrinsics,
                                                  const RepresentationConfig& config, const std::string& out_dir,
                                                  unsigned jobs = 0);

struct BenchOptions {
  bool positional = true;
  ProjectionMode mode = ProjectionMode::kStandard;
  std::size_t min_frames = 100;
  RepresentationConfig representation;
};

struct BenchReport {
  std::size_t frames = 0;
  double total_seconds = 0.0;
  double scans_per_second = 0.0;
  double mean_latency_ms = 0.0;
  double p99_latency_ms = 0.0;
  int rows = 0;
  int cols = 0;
};

/// Times assemble -> project -> build_representation over a recorded stream.
/// A scan's latency runs from the end of the previous scan's processing to
/// the end of its own, so it includes decoding and assembling its packets.
/// Throws InsufficientFrames when the stream has fewer than
/// `options.min_frames` complete frames.
BenchReport bench(std::span<const std::uint8_t> stream, std::shared_ptr<const SensorIntrinsics> intrinsics,
                  const BenchOptions& options = {});

}  // namespace domescan
