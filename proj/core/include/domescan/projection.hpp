#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "domescan/grid.hpp"
#include "domescan/intrinsics.hpp"
#include "domescan/scan.hpp"

namespace domescan {

/// Which equation set maps (range, angles) to Euclidean coordinates.
///
/// kStandard is the conventional spherical form:
///   x = (r - |n|) cos(t_enc + t_azi) cos(phi) + x_n cos(t_enc)
///   y = (r - |n|) sin(t_enc + t_azi) cos(phi) + x_n sin(t_enc)
///   z = (r - |n|) sin(phi) + z_n
/// kPaperVerbatim keeps the printed y row, which has sin(phi) and
/// x_n cos(t_enc) instead and therefore does not preserve the radius.
enum class ProjectionMode { kStandard, kPaperVerbatim };

std::string_view to_string(ProjectionMode mode);
/// Accepts "standard" and "paper" / "paper-verbatim"; throws SchemaViolation.
ProjectionMode parse_projection_mode(std::string_view text);

struct BeamAngles {
  double encoder;   // t_enc = 2 pi (1 - i / w)
  double azimuth;   // t_azi = -2 pi alpha / 360
  double altitude;  // phi = 2 pi beta / 360
};

/// Throws IndexOutOfRange unless 0 <= measurement_id <= w and 0 <= beam < H.
/// measurement_id == w is admitted so the closing endpoint (t_enc = 0) can be
/// evaluated.
BeamAngles angles(int measurement_id, int beam, const SensorIntrinsics& intr);

double encoder_angle(int measurement_id, int scan_width);
double azimuth_angle(double beam_azimuth_deg);
double altitude_angle(double beam_altitude_deg);

/// Coordinates are in meters.
struct PointImage {
  Grid<double> x;
  Grid<double> y;
  Grid<double> z;
  Grid<std::uint8_t> valid;
  ProjectionMode mode = ProjectionMode::kStandard;

  int rows() const noexcept { return x.rows(); }
  int cols() const noexcept { return x.cols(); }

  friend bool operator==(const PointImage&, const PointImage&) = default;
};

/// Per-pixel affine map p = range_m * direction + offset, precomputed for a
/// destaggered image. Direction is the r-gradient of (x, y, z) and offset is
/// the value at r = 0, both in meters.
class ProjectionTable {
 public:
  ProjectionTable(const SensorIntrinsics& intr, ProjectionMode mode);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  ProjectionMode mode() const noexcept { return mode_; }

  std::array<double, 3> direction(int row, int col) const;
  std::array<double, 3> offset(int row, int col) const;
  /// Point at metric range `range_m` for pixel (row, col).
  std::array<double, 3> point(int row, int col, double range_m) const;

 private:
  int rows_;
  int cols_;
  ProjectionMode mode_;
  std::vector<double> dir_;  // rows * cols * 3
  std::vector<double> off_;  // rows * cols * 3
};

/// Direction and offset of one firing straight from the equations, without
/// the table. Used by the renderer and as a cross-check of the table.
void beam_geometry(const SensorIntrinsics& intr, ProjectionMode mode, int measurement_id, int beam,
                   std::array<double, 3>& direction, std::array<double, 3>& offset);

/// Throws DimensionMismatch when the scan does not match the intrinsics.
PointImage project(const LidarScan& scan, const SensorIntrinsics& intr,
                   ProjectionMode mode = ProjectionMode::kStandard);
PointImage project(const LidarScan& scan, const ProjectionTable& table);

inline constexpr double kDefaultPositionScaleM = 10.0;

struct PositionalPlanes {
  Grid<float> x;
  Grid<float> y;
  Grid<float> z;
};

/// v -> clamp(v / scale, -1, 1); invalid pixels are 0.
PositionalPlanes positional_channels(const PointImage& points,
                                     double position_scale_m = kDefaultPositionScaleM);

}  // namespace domescan
