#include "domescan/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "domescan/error.hpp"

namespace domescan {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

std::string_view to_string(ProjectionMode mode) {
  return mode == ProjectionMode::kStandard ? "standard" : "paper-verbatim";
}

ProjectionMode parse_projection_mode(std::string_view text) {
  if (text == "standard") return ProjectionMode::kStandard;
  if (text == "paper" || text == "paper-verbatim") return ProjectionMode::kPaperVerbatim;
  throw Error(ErrorCode::SchemaViolation, "mode", "expected standard or paper, got '" + std::string(text) + "'");
}

double encoder_angle(int measurement_id, int scan_width) {
  return kTwoPi * (1.0 - static_cast<double>(measurement_id) / scan_width);
}

double azimuth_angle(double beam_azimuth_deg) { return -kTwoPi * (beam_azimuth_deg / 360.0); }

double altitude_angle(double beam_altitude_deg) { return kTwoPi * (beam_altitude_deg / 360.0); }

BeamAngles angles(int measurement_id, int beam, const SensorIntrinsics& intr) {
  if (measurement_id < 0 || measurement_id > intr.scan_width) {
    throw Error(ErrorCode::IndexOutOfRange, "measurement_id", std::to_string(measurement_id));
  }
  if (beam < 0 || beam >= intr.beam_count) {
    throw Error(ErrorCode::IndexOutOfRange, "beam", std::to_string(beam));
  }
  const auto b = static_cast<std::size_t>(beam);
  return {encoder_angle(measurement_id, intr.scan_width), azimuth_angle(intr.beam_azimuth_deg[b]),
          altitude_angle(intr.beam_altitude_deg[b])};
}

void beam_geometry(const SensorIntrinsics& intr, ProjectionMode mode, int measurement_id, int beam,
                   std::array<double, 3>& direction, std::array<double, 3>& offset) {
  const BeamAngles a = angles(measurement_id, beam, intr);
  const double n_m = derived_n(intr) / 1000.0;
  const double xn_m = intr.origin_to_optics_x_mm / 1000.0;
  const double zn_m = intr.origin_to_optics_z_mm / 1000.0;

  const double heading = a.encoder + a.azimuth;
  const double cos_phi = std::cos(a.altitude);
  const double sin_phi = std::sin(a.altitude);

  direction[0] = std::cos(heading) * cos_phi;
  direction[2] = sin_phi;
  double y_offset;
  if (mode == ProjectionMode::kStandard) {
    direction[1] = std::sin(heading) * cos_phi;
    y_offset = xn_m * std::sin(a.encoder);
  } else {
    direction[1] = std::sin(heading) * sin_phi;
    y_offset = xn_m * std::cos(a.encoder);
  }
  // (r - |n|) * d + c  ==  r * d + (c - |n| * d)
  offset[0] = xn_m * std::cos(a.encoder) - n_m * direction[0];
  offset[1] = y_offset - n_m * direction[1];
  offset[2] = zn_m - n_m * direction[2];
}

ProjectionTable::ProjectionTable(const SensorIntrinsics& intr, ProjectionMode mode)
    : rows_(intr.beam_count), cols_(intr.scan_width), mode_(mode) {
  validate(intr);
  const auto n = static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_) * 3;
  dir_.resize(n);
  off_.resize(n);
  for (int row = 0; row < rows_; ++row) {
    for (int col = 0; col < cols_; ++col) {
      std::array<double, 3> d;
      std::array<double, 3> o;
      beam_geometry(intr, mode, measurement_of_column(intr, row, col), row, d, o);
      const auto k = (static_cast<std::size_t>(row) * cols_ + col) * 3;
      std::copy(d.begin(), d.end(), dir_.begin() + static_cast<std::ptrdiff_t>(k));
      std::copy(o.begin(), o.end(), off_.begin() + static_cast<std::ptrdiff_t>(k));
    }
  }
}

std::array<double, 3> ProjectionTable::direction(int row, int col) const {
  const auto k = (static_cast<std::size_t>(row) * cols_ + col) * 3;
  return {dir_[k], dir_[k + 1], dir_[k + 2]};
}

std::array<double, 3> ProjectionTable::offset(int row, int col) const {
  const auto k = (static_cast<std::size_t>(row) * cols_ + col) * 3;
  return {off_[k], off_[k + 1], off_[k + 2]};
}

std::array<double, 3> ProjectionTable::point(int row, int col, double range_m) const {
  const auto k = (static_cast<std::size_t>(row) * cols_ + col) * 3;
  return {range_m * dir_[k] + off_[k], range_m * dir_[k + 1] + off_[k + 1],
          range_m * dir_[k + 2] + off_[k + 2]};
}

PointImage project(const LidarScan& scan, const ProjectionTable& table) {
  if (!scan.range_mm.same_shape(table.rows(), table.cols()) ||
      !scan.valid.same_shape(table.rows(), table.cols())) {
    throw Error(ErrorCode::DimensionMismatch, "scan",
                std::to_string(scan.rows()) + "x" + std::to_string(scan.cols()) + " vs intrinsics " +
                    std::to_string(table.rows()) + "x" + std::to_string(table.cols()));
  }
  const int h = table.rows();
  const int w = table.cols();
  PointImage out{Grid<double>(h, w), Grid<double>(h, w), Grid<double>(h, w), scan.valid, table.mode()};
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      if (!scan.valid(row, col)) continue;
      const double r = scan.range_mm(row, col) / 1000.0;
      const auto p = table.point(row, col, r);
      out.x(row, col) = p[0];
      out.y(row, col) = p[1];
      out.z(row, col) = p[2];
    }
  }
  return out;
}

PointImage project(const LidarScan& scan, const SensorIntrinsics& intr, ProjectionMode mode) {
  return project(scan, ProjectionTable(intr, mode));
}

PositionalPlanes positional_channels(const PointImage& points, double position_scale_m) {
  const int h = points.rows();
  const int w = points.cols();
  PositionalPlanes out{Grid<float>(h, w), Grid<float>(h, w), Grid<float>(h, w)};
  auto norm = [position_scale_m](double v) {
    return static_cast<float>(std::clamp(v / position_scale_m, -1.0, 1.0));
  };
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      if (!points.valid(row, col)) continue;
      out.x(row, col) = norm(points.x(row, col));
      out.y(row, col) = norm(points.y(row, col));
      out.z(row, col) = norm(points.z(row, col));
    }
  }
  return out;
}

}  // namespace domescan
