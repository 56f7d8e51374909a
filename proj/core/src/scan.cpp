#include "domescan/scan.hpp"

namespace domescan {

LidarScan::LidarScan(std::uint32_t frame, std::shared_ptr<const SensorIntrinsics> intr)
    : frame_id(frame), intrinsics(std::move(intr)) {
  const int h = intrinsics->beam_count;
  const int w = intrinsics->scan_width;
  range_mm = Grid<std::uint32_t>(h, w);
  signal = Grid<std::uint16_t>(h, w);
  reflectivity = Grid<std::uint16_t>(h, w);
  nir = Grid<std::uint16_t>(h, w);
  valid = Grid<std::uint8_t>(h, w);
}

bool LidarScan::same_data(const LidarScan& other) const {
  return frame_id == other.frame_id && received_columns == other.received_columns &&
         range_mm == other.range_mm && signal == other.signal &&
         reflectivity == other.reflectivity && nir == other.nir && valid == other.valid;
}

}  // namespace domescan
