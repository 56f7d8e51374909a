#pragma once

#include <cstdint>
#include <memory>

#include "domescan/grid.hpp"
#include "domescan/intrinsics.hpp"

namespace domescan {

/// One destaggered frame: column j of row u holds the firing whose
/// measurement id is (j - pixel_shift_by_row[u]) mod scan_width.
struct LidarScan {
  std::uint32_t frame_id = 0;
  std::shared_ptr<const SensorIntrinsics> intrinsics;
  Grid<std::uint32_t> range_mm;
  Grid<std::uint16_t> signal;
  Grid<std::uint16_t> reflectivity;
  Grid<std::uint16_t> nir;
  Grid<std::uint8_t> valid;
  int received_columns = 0;

  LidarScan() = default;
  LidarScan(std::uint32_t frame, std::shared_ptr<const SensorIntrinsics> intr);

  int rows() const noexcept { return range_mm.rows(); }
  int cols() const noexcept { return range_mm.cols(); }
  double completeness() const noexcept {
    return cols() == 0 ? 0.0 : static_cast<double>(received_columns) / cols();
  }

  /// Measurement data only; the intrinsics pointer is not compared.
  bool same_data(const LidarScan& other) const;
};

/// Column of the destaggered image that measurement `measurement_id` of
/// `row` lands in.
inline int destaggered_column(const SensorIntrinsics& intr, int row, int measurement_id) {
  const int w = intr.scan_width;
  const int c = (measurement_id + intr.pixel_shift_by_row[static_cast<std::size_t>(row)]) % w;
  return c < 0 ? c + w : c;
}

/// Inverse of destaggered_column.
inline int measurement_of_column(const SensorIntrinsics& intr, int row, int column) {
  const int w = intr.scan_width;
  const int m = (column - intr.pixel_shift_by_row[static_cast<std::size_t>(row)]) % w;
  return m < 0 ? m + w : m;
}

}  // namespace domescan
