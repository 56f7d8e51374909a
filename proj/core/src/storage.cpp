#include "domescan/storage.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>

#include "domescan/error.hpp"

namespace domescan {

namespace fs = std::filesystem;

std::string scan_filename(std::uint32_t frame_id) { return "frame_" + std::to_string(frame_id) + ".ldt"; }

std::vector<Tensor> scan_to_tensors(const LidarScan& scan) {
  const auto h = static_cast<std::uint32_t>(scan.rows());
  const auto w = static_cast<std::uint32_t>(scan.cols());
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<std::uint32_t> raw(plane * 4);
  std::copy(scan.range_mm.data().begin(), scan.range_mm.data().end(), raw.begin());
  std::copy(scan.signal.data().begin(), scan.signal.data().end(), raw.begin() + static_cast<std::ptrdiff_t>(plane));
  std::copy(scan.reflectivity.data().begin(), scan.reflectivity.data().end(),
            raw.begin() + static_cast<std::ptrdiff_t>(2 * plane));
  std::copy(scan.nir.data().begin(), scan.nir.data().end(), raw.begin() + static_cast<std::ptrdiff_t>(3 * plane));
  const std::uint32_t info[2] = {scan.frame_id, static_cast<std::uint32_t>(scan.received_columns)};
  return {Tensor::from_u32({4, h, w}, raw), Tensor::from_u8({h, w}, scan.valid.data()),
          Tensor::from_u32({2}, info)};
}

LidarScan scan_from_tensors(const std::vector<Tensor>& tensors,
                            std::shared_ptr<const SensorIntrinsics> intrinsics) {
  if (tensors.size() != 3) throw Error(ErrorCode::SchemaViolation, "scan file", "expected three records");
  const auto h = static_cast<std::uint32_t>(intrinsics->beam_count);
  const auto w = static_cast<std::uint32_t>(intrinsics->scan_width);
  if (tensors[0].dims != std::vector<std::uint32_t>{4, h, w} || tensors[1].dims != std::vector<std::uint32_t>{h, w} ||
      tensors[2].dims != std::vector<std::uint32_t>{2}) {
    throw Error(ErrorCode::DimensionMismatch, "scan file", "records do not match the intrinsics");
  }
  const auto raw = tensors[0].u32();
  const auto valid = tensors[1].u8();
  const auto info = tensors[2].u32();

  LidarScan scan(info[0], std::move(intrinsics));
  scan.received_columns = static_cast<int>(info[1]);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (std::size_t k = 0; k < plane; ++k) {
    scan.range_mm.data()[k] = raw[k];
    scan.signal.data()[k] = static_cast<std::uint16_t>(raw[plane + k]);
    scan.reflectivity.data()[k] = static_cast<std::uint16_t>(raw[2 * plane + k]);
    scan.nir.data()[k] = static_cast<std::uint16_t>(raw[3 * plane + k]);
    scan.valid.data()[k] = valid[k] ? 1 : 0;
  }
  return scan;
}

void write_scan(const std::string& path, const LidarScan& scan) {
  const auto tensors = scan_to_tensors(scan);
  write_tensors(path, tensors);
}

LidarScan read_scan(const std::string& path, std::shared_ptr<const SensorIntrinsics> intrinsics) {
  const auto tensors = read_tensors(path);
  try {
    return scan_from_tensors(tensors, std::move(intrinsics));
  } catch (const Error& e) {
    throw Error(e.code(), path, e.what());
  }
}

void write_points(const std::string& path, const PointImage& points) {
  const auto h = static_cast<std::uint32_t>(points.rows());
  const auto w = static_cast<std::uint32_t>(points.cols());
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  std::vector<float> xyz(plane * 3);
  for (std::size_t k = 0; k < plane; ++k) {
    xyz[k] = static_cast<float>(points.x.data()[k]);
    xyz[plane + k] = static_cast<float>(points.y.data()[k]);
    xyz[2 * plane + k] = static_cast<float>(points.z.data()[k]);
  }
  const Tensor records[2] = {Tensor::from_floats({3, h, w}, xyz), Tensor::from_u8({h, w}, points.valid.data())};
  write_tensors(path, records);
}

PointImage read_points(const std::string& path) {
  const auto tensors = read_tensors(path);
  if (tensors.size() != 2 || tensors[0].dims.size() != 3 || tensors[0].dims[0] != 3 ||
      tensors[1].dims != std::vector<std::uint32_t>{tensors[0].dims[1], tensors[0].dims[2]}) {
    throw Error(ErrorCode::SchemaViolation, path, "not a point image file");
  }
  const int h = static_cast<int>(tensors[0].dims[1]);
  const int w = static_cast<int>(tensors[0].dims[2]);
  const auto xyz = tensors[0].floats();
  const auto valid = tensors[1].u8();
  PointImage p{Grid<double>(h, w), Grid<double>(h, w), Grid<double>(h, w), Grid<std::uint8_t>(h, w),
               ProjectionMode::kStandard};
  const std::size_t plane = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  for (std::size_t k = 0; k < plane; ++k) {
    p.x.data()[k] = xyz[k];
    p.y.data()[k] = xyz[plane + k];
    p.z.data()[k] = xyz[2 * plane + k];
    p.valid.data()[k] = valid[k] ? 1 : 0;
  }
  return p;
}

std::uint32_t frame_id_from_filename(const std::string& path) {
  const std::string stem = fs::path(path).stem().string();
  constexpr std::string_view prefix = "frame_";
  std::uint32_t id = 0;
  if (stem.rfind(prefix, 0) == 0) {
    const char* first = stem.data() + prefix.size();
    const char* last = stem.data() + stem.size();
    auto [ptr, ec] = std::from_chars(first, last, id);
    if (ec == std::errc() && ptr == last && first != last) return id;
  }
  throw Error(ErrorCode::SchemaViolation, path, "expected frame_<id>.ldt");
}

std::vector<std::string> list_frame_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, dir, "not a directory");
  std::vector<std::pair<std::uint32_t, std::string>> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".ldt") continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("frame_", 0) != 0) continue;
    try {
      found.emplace_back(frame_id_from_filename(name), entry.path().string());
    } catch (const Error&) {
      // frame_<id>.flip.ldt and other derived files are not frames.
    }
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> out;
  out.reserve(found.size());
  for (auto& f : found) out.push_back(std::move(f.second));
  return out;
}

}  // namespace domescan
