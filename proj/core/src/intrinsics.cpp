#include "domescan/intrinsics.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "domescan/error.hpp"

namespace domescan {

namespace {

using nlohmann::json;

constexpr const char* kKnownKeys[] = {
    "beam_count",          "scan_width",          "beam_altitude_deg",  "beam_azimuth_deg",
    "origin_to_optics_x_mm", "origin_to_optics_z_mm", "pixel_shift_by_row", "range_unit_mm",
};

const json& require(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw Error(ErrorCode::SchemaViolation, key, "missing field");
  return *it;
}

int read_int(const json& doc, const char* key) {
  const json& v = require(doc, key);
  if (!v.is_number_integer()) throw Error(ErrorCode::SchemaViolation, key, "expected integer");
  auto value = v.get<long long>();
  if (value < -2147483647LL || value > 2147483647LL) {
    throw Error(ErrorCode::InvariantViolation, key, "integer out of range");
  }
  return static_cast<int>(value);
}

double read_number(const json& doc, const char* key) {
  const json& v = require(doc, key);
  if (!v.is_number()) throw Error(ErrorCode::SchemaViolation, key, "expected number");
  return v.get<double>();
}

std::vector<double> read_number_array(const json& doc, const char* key) {
  const json& v = require(doc, key);
  if (!v.is_array()) throw Error(ErrorCode::SchemaViolation, key, "expected array");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number()) throw Error(ErrorCode::SchemaViolation, key, "expected numeric entries");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<int> read_int_array(const json& doc, const char* key) {
  const json& v = require(doc, key);
  if (!v.is_array()) throw Error(ErrorCode::SchemaViolation, key, "expected array");
  std::vector<int> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number_integer()) throw Error(ErrorCode::SchemaViolation, key, "expected integer entries");
    out.push_back(e.get<int>());
  }
  return out;
}

bool is_known_key(const std::string& key) {
  for (const char* k : kKnownKeys) {
    if (key == k) return true;
  }
  return false;
}

}  // namespace

void validate(const SensorIntrinsics& intr, double altitude_slack_deg) {
  if (intr.beam_count <= 0) throw Error(ErrorCode::InvariantViolation, "beam_count", "must be positive");
  if (intr.scan_width <= 0) throw Error(ErrorCode::InvariantViolation, "scan_width", "must be positive");
  if (intr.beam_count > 65535) throw Error(ErrorCode::InvariantViolation, "beam_count", "exceeds 65535");
  if (intr.scan_width > 65536) throw Error(ErrorCode::InvariantViolation, "scan_width", "exceeds 65536");

  const auto beams = static_cast<std::size_t>(intr.beam_count);
  if (intr.beam_altitude_deg.size() != beams) {
    throw Error(ErrorCode::InvariantViolation, "beam_altitude_deg", "length differs from beam_count");
  }
  if (intr.beam_azimuth_deg.size() != beams) {
    throw Error(ErrorCode::InvariantViolation, "beam_azimuth_deg", "length differs from beam_count");
  }
  if (intr.pixel_shift_by_row.size() != beams) {
    throw Error(ErrorCode::InvariantViolation, "pixel_shift_by_row", "length differs from beam_count");
  }
  for (double beta : intr.beam_altitude_deg) {
    if (!std::isfinite(beta) || beta < -altitude_slack_deg || beta > 90.0 + altitude_slack_deg) {
      throw Error(ErrorCode::InvariantViolation, "beam_altitude_deg",
                  "altitude outside the hemisphere; wrong metadata file?");
    }
  }
  for (double alpha : intr.beam_azimuth_deg) {
    if (!std::isfinite(alpha)) throw Error(ErrorCode::InvariantViolation, "beam_azimuth_deg", "not finite");
  }
  for (int shift : intr.pixel_shift_by_row) {
    if (std::abs(shift) >= intr.scan_width) {
      throw Error(ErrorCode::InvariantViolation, "pixel_shift_by_row", "|shift| must be < scan_width");
    }
  }
  if (!std::isfinite(intr.origin_to_optics_x_mm)) {
    throw Error(ErrorCode::InvariantViolation, "origin_to_optics_x_mm", "not finite");
  }
  if (!std::isfinite(intr.origin_to_optics_z_mm)) {
    throw Error(ErrorCode::InvariantViolation, "origin_to_optics_z_mm", "not finite");
  }
  if (!std::isfinite(intr.range_unit_mm) || intr.range_unit_mm <= 0.0) {
    throw Error(ErrorCode::InvariantViolation, "range_unit_mm", "must be positive");
  }
}

SensorIntrinsics parse_metadata(std::string_view text, std::vector<std::string>* warnings,
                                double altitude_slack_deg) {
  json doc = json::parse(text.begin(), text.end(), nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw Error(ErrorCode::MalformedDocument, "document", "invalid JSON");
  if (!doc.is_object()) throw Error(ErrorCode::MalformedDocument, "document", "expected a JSON object");

  SensorIntrinsics intr;
  intr.beam_count = read_int(doc, "beam_count");
  intr.scan_width = read_int(doc, "scan_width");
  intr.beam_altitude_deg = read_number_array(doc, "beam_altitude_deg");
  intr.beam_azimuth_deg = read_number_array(doc, "beam_azimuth_deg");
  intr.origin_to_optics_x_mm = read_number(doc, "origin_to_optics_x_mm");
  intr.origin_to_optics_z_mm = read_number(doc, "origin_to_optics_z_mm");
  intr.pixel_shift_by_row = read_int_array(doc, "pixel_shift_by_row");
  if (doc.contains("range_unit_mm")) intr.range_unit_mm = read_number(doc, "range_unit_mm");

  if (warnings != nullptr) {
    for (const auto& [key, value] : doc.items()) {
      if (!is_known_key(key)) warnings->push_back("ignoring unknown metadata field '" + key + "'");
    }
  }

  validate(intr, altitude_slack_deg);
  return intr;
}

SensorIntrinsics load_metadata(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, path, "cannot open metadata file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_metadata(ss.str(), warnings);
}

std::string serialize_metadata(const SensorIntrinsics& intr) {
  // ordered_json keeps the documented key order.
  nlohmann::ordered_json doc;
  doc["beam_count"] = intr.beam_count;
  doc["scan_width"] = intr.scan_width;
  doc["beam_altitude_deg"] = intr.beam_altitude_deg;
  doc["beam_azimuth_deg"] = intr.beam_azimuth_deg;
  doc["origin_to_optics_x_mm"] = intr.origin_to_optics_x_mm;
  doc["origin_to_optics_z_mm"] = intr.origin_to_optics_z_mm;
  doc["pixel_shift_by_row"] = intr.pixel_shift_by_row;
  doc["range_unit_mm"] = intr.range_unit_mm;
  return doc.dump(2) + "\n";
}

double derived_n(const SensorIntrinsics& intr) {
  return std::hypot(intr.origin_to_optics_x_mm, intr.origin_to_optics_z_mm);
}

SensorIntrinsics make_uniform_intrinsics(int beam_count, int scan_width,
                                         double origin_to_optics_x_mm,
                                         double origin_to_optics_z_mm) {
  SensorIntrinsics intr;
  intr.beam_count = beam_count;
  intr.scan_width = scan_width;
  intr.origin_to_optics_x_mm = origin_to_optics_x_mm;
  intr.origin_to_optics_z_mm = origin_to_optics_z_mm;
  const double step = 90.0 / beam_count;
  for (int b = 0; b < beam_count; ++b) {
    intr.beam_altitude_deg.push_back(step * (beam_count - 1 - b));
  }
  intr.beam_azimuth_deg.assign(static_cast<std::size_t>(beam_count), 0.0);
  intr.pixel_shift_by_row.assign(static_cast<std::size_t>(beam_count), 0);
  validate(intr);
  return intr;
}

}  // namespace domescan
