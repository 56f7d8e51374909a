#pragma once

#include <memory>
#include <string>
#include <vector>

#include "domescan/projection.hpp"
#include "domescan/scan.hpp"
#include "domescan/tensor.hpp"

namespace domescan {

// Scan file (frame_<id>.ldt), three records:
//   u32 [4, H, W]  range_mm, signal, reflectivity, nir
//   u8  [H, W]     validity, one byte per pixel (0 or 1)
//   u32 [2]        frame_id, received_columns
// Point file, two records:
//   f32 [3, H, W]  x, y, z in meters
//   u8  [H, W]     validity

std::string scan_filename(std::uint32_t frame_id);

std::vector<Tensor> scan_to_tensors(const LidarScan& scan);
/// Throws DimensionMismatch when the records disagree with `intrinsics`.
LidarScan scan_from_tensors(const std::vector<Tensor>& tensors,
                            std::shared_ptr<const SensorIntrinsics> intrinsics);

void write_scan(const std::string& path, const LidarScan& scan);
LidarScan read_scan(const std::string& path, std::shared_ptr<const SensorIntrinsics> intrinsics);

void write_points(const std::string& path, const PointImage& points);
/// Coordinates come back as float32 values widened to double.
PointImage read_points(const std::string& path);

/// Sorted frame files (frame_*.ldt) under `dir`.
std::vector<std::string> list_frame_files(const std::string& dir);
/// Parses the id out of ".../frame_<id>.ldt"; throws SchemaViolation.
std::uint32_t frame_id_from_filename(const std::string& path);

}  // namespace domescan
