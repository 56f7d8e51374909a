#include "domescan/representation.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "domescan/error.hpp"

namespace domescan {

namespace {

bool is_positional(std::string_view name) {
  return name == kChannelPosX || name == kChannelPosY || name == kChannelPosZ;
}

float unit_clamp(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

}  // namespace

std::vector<std::string> resolve_channels(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "pos" || lower == "position" || lower == "positional") {
    return {std::string(kChannelPosX), std::string(kChannelPosY), std::string(kChannelPosZ)};
  }
  if (lower == "reflectivity") return {std::string(kChannelReflectivity)};
  if (lower == "range" || lower == "reversed-range" || lower == "reversed_range") {
    return {std::string(kChannelRevRange)};
  }
  for (auto known : kAllChannels) {
    if (lower == known) return {std::string(known)};
  }
  throw Error(ErrorCode::UnknownChannel, std::string(name));
}

std::vector<std::string> ChannelManifest::names() const {
  std::vector<std::string> out;
  out.reserve(channels.size());
  for (const auto& c : channels) out.push_back(c.name);
  return out;
}

std::string manifest_to_json(const ChannelManifest& manifest) {
  nlohmann::ordered_json doc;
  doc["channels"] = nlohmann::ordered_json::array();
  for (const auto& c : manifest.channels) {
    doc["channels"].push_back({{"name", c.name}, {"scale", c.scale}});
  }
  doc["excluded"] = manifest.excluded;
  doc["projection_mode"] = std::string(to_string(manifest.projection_mode));
  if (manifest.resized_from) {
    doc["resized_from"] = {manifest.resized_from->first, manifest.resized_from->second};
  }
  return doc.dump(2);
}

ChannelManifest manifest_from_json(std::string_view text) {
  auto doc = nlohmann::json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::MalformedDocument, "channel manifest");
  }
  ChannelManifest m;
  try {
    for (const auto& c : doc.at("channels")) {
      m.channels.push_back({c.at("name").get<std::string>(), c.at("scale").get<double>()});
    }
    if (doc.contains("excluded")) m.excluded = doc["excluded"].get<std::vector<std::string>>();
    if (doc.contains("projection_mode")) {
      m.projection_mode = parse_projection_mode(doc["projection_mode"].get<std::string>());
    }
    if (doc.contains("resized_from")) {
      m.resized_from = std::pair{doc["resized_from"].at(0).get<int>(), doc["resized_from"].at(1).get<int>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, "channel manifest", e.what());
  }
  for (const auto& c : m.channels) resolve_channels(c.name);
  return m;
}

std::vector<ChannelInfo> RepresentationConfig::channels() const {
  std::vector<ChannelInfo> all{{std::string(kChannelNir), nir_scale},
                               {std::string(kChannelReflectivity), reflectivity_scale},
                               {std::string(kChannelSignal), signal_scale},
                               {std::string(kChannelRevRange), max_range_mm}};
  if (positional) {
    all.push_back({std::string(kChannelPosX), position_scale_m});
    all.push_back({std::string(kChannelPosY), position_scale_m});
    all.push_back({std::string(kChannelPosZ), position_scale_m});
  }
  std::vector<ChannelInfo> out;
  for (auto& c : all) {
    if (std::find(excluded.begin(), excluded.end(), c.name) == excluded.end()) out.push_back(std::move(c));
  }
  return out;
}

RepresentationConfig config_from_manifest(const ChannelManifest& manifest) {
  RepresentationConfig config;
  config.projection_mode = manifest.projection_mode;
  for (const auto& name : manifest.excluded) {
    for (auto& n : resolve_channels(name)) config.excluded.push_back(std::move(n));
  }
  for (const auto& c : manifest.channels) {
    if (c.name == kChannelNir) config.nir_scale = c.scale;
    else if (c.name == kChannelReflectivity) config.reflectivity_scale = c.scale;
    else if (c.name == kChannelSignal) config.signal_scale = c.scale;
    else if (c.name == kChannelRevRange) config.max_range_mm = c.scale;
    else if (is_positional(c.name)) {
      config.positional = true;
      config.position_scale_m = c.scale;
    }
  }
  // Excluded positional channels still mean the positional variant was built.
  for (const auto& name : config.excluded) {
    if (is_positional(name)) config.positional = true;
  }
  return config;
}

int FrameRepresentation::channel_index(std::string_view name) const {
  for (std::size_t i = 0; i < manifest.channels.size(); ++i) {
    if (manifest.channels[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

FrameRepresentation build_representation(const LidarScan& scan, const PointImage* points,
                                         const RepresentationConfig& config) {
  const int h = scan.rows();
  const int w = scan.cols();
  if (!scan.signal.same_shape(h, w) || !scan.reflectivity.same_shape(h, w) ||
      !scan.nir.same_shape(h, w) || !scan.valid.same_shape(h, w)) {
    throw Error(ErrorCode::DimensionMismatch, "scan", "channel grids disagree");
  }
  if (config.positional) {
    if (points == nullptr) throw Error(ErrorCode::MissingPoints, "points");
    if (points->rows() != h || points->cols() != w) {
      throw Error(ErrorCode::DimensionMismatch, "points", "point image does not match the scan");
    }
  }

  FrameRepresentation rep;
  rep.frame_id = scan.frame_id;
  rep.rows = h;
  rep.cols = w;
  rep.manifest.channels = config.channels();
  rep.manifest.excluded = config.excluded;
  rep.manifest.projection_mode = config.projection_mode;
  const auto plane = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
  rep.data.assign(plane * rep.manifest.channels.size(), 0.0f);

  std::optional<PositionalPlanes> pos;
  if (config.positional) pos = positional_channels(*points, config.position_scale_m);

  for (std::size_t c = 0; c < rep.manifest.channels.size(); ++c) {
    const ChannelInfo& info = rep.manifest.channels[c];
    float* out = rep.data.data() + c * plane;
    const auto& valid = scan.valid.data();
    if (is_positional(info.name)) {
      const Grid<float>& src = info.name == kChannelPosX ? pos->x : info.name == kChannelPosY ? pos->y : pos->z;
      std::copy(src.data().begin(), src.data().end(), out);
      continue;
    }
    if (info.name == kChannelRevRange) {
      const auto& range = scan.range_mm.data();
      for (std::size_t k = 0; k < plane; ++k) {
        if (valid[k]) out[k] = unit_clamp(1.0 - range[k] / info.scale);
      }
      continue;
    }
    const auto& src = info.name == kChannelNir ? scan.nir.data()
                      : info.name == kChannelSignal ? scan.signal.data()
                                                    : scan.reflectivity.data();
    for (std::size_t k = 0; k < plane; ++k) {
      if (valid[k]) out[k] = unit_clamp(src[k] / info.scale);
    }
  }
  return rep;
}

FrameRepresentation resize(const FrameRepresentation& rep, int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw Error(ErrorCode::DimensionMismatch, "target", "dimensions must be positive");
  if (rows == rep.rows && cols == rep.cols) return rep;

  struct Tap {
    int i0, i1;
    double f;  // weight of i1
  };
  auto taps = [](int src, int dst) {
    std::vector<Tap> out(static_cast<std::size_t>(dst));
    const double ratio = static_cast<double>(src) / dst;
    for (int d = 0; d < dst; ++d) {
      double s = (d + 0.5) * ratio - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(src - 1));
      const int i0 = static_cast<int>(std::floor(s));
      const int i1 = std::min(i0 + 1, src - 1);
      out[static_cast<std::size_t>(d)] = {i0, i1, i1 == i0 ? 0.0 : s - i0};
    }
    return out;
  };
  const auto ty = taps(rep.rows, rows);
  const auto tx = taps(rep.cols, cols);

  FrameRepresentation out;
  out.frame_id = rep.frame_id;
  out.rows = rows;
  out.cols = cols;
  out.manifest = rep.manifest;
  if (!out.manifest.resized_from) out.manifest.resized_from = std::pair{rep.rows, rep.cols};
  out.data.assign(static_cast<std::size_t>(rep.channels()) * rows * cols, 0.0f);

  for (int c = 0; c < rep.channels(); ++c) {
    const bool conservative = rep.manifest.channels[static_cast<std::size_t>(c)].name == kChannelRevRange;
    for (int r = 0; r < rows; ++r) {
      const Tap& y = ty[static_cast<std::size_t>(r)];
      for (int q = 0; q < cols; ++q) {
        const Tap& x = tx[static_cast<std::size_t>(q)];
        const double a = rep.at(c, y.i0, x.i0);
        const double b = rep.at(c, y.i0, x.i1);
        const double d = rep.at(c, y.i1, x.i0);
        const double e = rep.at(c, y.i1, x.i1);
        if (conservative) {
          const bool hole = a == 0.0 || (x.f > 0.0 && b == 0.0) || (y.f > 0.0 && d == 0.0) ||
                            (x.f > 0.0 && y.f > 0.0 && e == 0.0);
          if (hole) continue;
        }
        const double top = a + x.f * (b - a);
        const double bottom = d + x.f * (e - d);
        out.at(c, r, q) = static_cast<float>(top + y.f * (bottom - top));
      }
    }
  }
  return out;
}

FrameRepresentation exclude_channel(const FrameRepresentation& rep, std::string_view name) {
  const auto targets = resolve_channels(name);
  std::vector<int> keep;
  bool found = false;
  for (int c = 0; c < rep.channels(); ++c) {
    const auto& n = rep.manifest.channels[static_cast<std::size_t>(c)].name;
    if (std::find(targets.begin(), targets.end(), n) != targets.end()) {
      found = true;
    } else {
      keep.push_back(c);
    }
  }
  if (!found) throw Error(ErrorCode::UnknownChannel, std::string(name), "not present in the representation");

  FrameRepresentation out;
  out.frame_id = rep.frame_id;
  out.rows = rep.rows;
  out.cols = rep.cols;
  out.manifest = rep.manifest;
  out.manifest.channels.clear();
  const auto plane = static_cast<std::size_t>(rep.rows) * static_cast<std::size_t>(rep.cols);
  out.data.reserve(plane * keep.size());
  for (int c : keep) {
    out.manifest.channels.push_back(rep.manifest.channels[static_cast<std::size_t>(c)]);
    const auto begin = rep.data.begin() + static_cast<std::ptrdiff_t>(plane * static_cast<std::size_t>(c));
    out.data.insert(out.data.end(), begin, begin + static_cast<std::ptrdiff_t>(plane));
  }
  for (const auto& t : targets) out.manifest.excluded.push_back(t);
  return out;
}

Tensor to_tensor(const FrameRepresentation& rep) {
  return Tensor::from_floats({static_cast<std::uint32_t>(rep.channels()), static_cast<std::uint32_t>(rep.rows),
                              static_cast<std::uint32_t>(rep.cols)},
                             rep.data);
}

FrameRepresentation from_tensor(const Tensor& tensor, ChannelManifest manifest, std::uint32_t frame_id) {
  if (tensor.dims.size() != 3) throw Error(ErrorCode::DimensionMismatch, "tensor", "expected C x H x W");
  if (tensor.dims[0] != manifest.channels.size()) {
    throw Error(ErrorCode::DimensionMismatch, "channels", "tensor and manifest disagree on channel count");
  }
  FrameRepresentation rep;
  rep.frame_id = frame_id;
  rep.rows = static_cast<int>(tensor.dims[1]);
  rep.cols = static_cast<int>(tensor.dims[2]);
  rep.manifest = std::move(manifest);
  rep.data = tensor.floats();
  return rep;
}

void write_representation(const std::string& path, const FrameRepresentation& rep) {
  const Tensor t = to_tensor(rep);
  write_tensors(path, std::span<const Tensor>(&t, 1));
}

FrameRepresentation read_representation(const std::string& path, ChannelManifest manifest,
                                        std::uint32_t frame_id) {
  const auto tensors = read_tensors(path);
  return from_tensor(tensors.front(), std::move(manifest), frame_id);
}

}  // namespace domescan
