#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace domescan {

/// Calibration of a dome (hemisphere field-of-view) lidar. Beam 0 is the
/// topmost row of every scan image.
struct SensorIntrinsics {
  int beam_count = 0;
  int scan_width = 0;
  std::vector<double> beam_altitude_deg;
  std::vector<double> beam_azimuth_deg;
  double origin_to_optics_x_mm = 0.0;
  double origin_to_optics_z_mm = 0.0;
  std::vector<int> pixel_shift_by_row;
  double range_unit_mm = 1.0;

  friend bool operator==(const SensorIntrinsics&, const SensorIntrinsics&) = default;
};

inline constexpr double kDefaultAltitudeSlackDeg = 5.0;

/// Throws InvariantViolation naming the first offending field.
void validate(const SensorIntrinsics& intr, double altitude_slack_deg = kDefaultAltitudeSlackDeg);

/// Parses the JSON metadata document. Unknown keys are tolerated; a
/// message per ignored key is appended to `warnings` when given.
SensorIntrinsics parse_metadata(std::string_view text,
                                std::vector<std::string>* warnings = nullptr,
                                double altitude_slack_deg = kDefaultAltitudeSlackDeg);

SensorIntrinsics load_metadata(const std::string& path,
                               std::vector<std::string>* warnings = nullptr);

/// Canonical document: fixed key order, two-space indent.
std::string serialize_metadata(const SensorIntrinsics& intr);

/// Distance from the sensor origin to the front optics, |n| = hypot(x_n, z_n).
double derived_n(const SensorIntrinsics& intr);

/// Evenly spaced altitudes from just below the zenith (row 0) down to the
/// horizon (last row), zero azimuth offsets, zero pixel shifts.
SensorIntrinsics make_uniform_intrinsics(int beam_count, int scan_width,
                                         double origin_to_optics_x_mm = 0.0,
                                         double origin_to_optics_z_mm = 0.0);

}  // namespace domescan
