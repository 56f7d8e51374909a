#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "domescan/projection.hpp"
#include "domescan/scan.hpp"
#include "domescan/tensor.hpp"

namespace domescan {

// Channel names, in their fixed order.
inline constexpr std::string_view kChannelNir = "nir";
inline constexpr std::string_view kChannelReflectivity = "refl";
inline constexpr std::string_view kChannelSignal = "signal";
inline constexpr std::string_view kChannelRevRange = "revrange";
inline constexpr std::string_view kChannelPosX = "posx";
inline constexpr std::string_view kChannelPosY = "posy";
inline constexpr std::string_view kChannelPosZ = "posz";

inline constexpr std::string_view kAllChannels[] = {kChannelNir,  kChannelReflectivity, kChannelSignal,
                                                    kChannelRevRange, kChannelPosX, kChannelPosY,
                                                    kChannelPosZ};

/// Maps user spellings to channel names: "reflectivity" -> "refl",
/// "range" / "reversed-range" -> "revrange", "pos" -> the three positional
/// channels. Throws UnknownChannel.
std::vector<std::string> resolve_channels(std::string_view name);

struct ChannelInfo {
  std::string name;
  double scale = 1.0;  // divisor of the raw value (mm for revrange, m for pos*)

  friend bool operator==(const ChannelInfo&, const ChannelInfo&) = default;
};

/// Everything needed to reproduce the numeric mapping of a representation.
struct ChannelManifest {
  std::vector<ChannelInfo> channels;
  std::vector<std::string> excluded;
  ProjectionMode projection_mode = ProjectionMode::kStandard;
  std::optional<std::pair<int, int>> resized_from;  // (rows, cols) before resize

  std::vector<std::string> names() const;
  friend bool operator==(const ChannelManifest&, const ChannelManifest&) = default;
};

std::string manifest_to_json(const ChannelManifest& manifest);
ChannelManifest manifest_from_json(std::string_view text);

struct RepresentationConfig {
  bool positional = false;
  double nir_scale = 1024.0;
  double signal_scale = 1024.0;
  double reflectivity_scale = 255.0;
  double max_range_mm = 15000.0;
  double position_scale_m = kDefaultPositionScaleM;
  ProjectionMode projection_mode = ProjectionMode::kStandard;
  std::vector<std::string> excluded;  // canonical names

  /// Channel list in output order, exclusions applied.
  std::vector<ChannelInfo> channels() const;
};

/// Reconstructs the config that produced `manifest`.
RepresentationConfig config_from_manifest(const ChannelManifest& manifest);

/// Channel-first C x H x W float image.
struct FrameRepresentation {
  std::uint32_t frame_id = 0;
  int rows = 0;
  int cols = 0;
  ChannelManifest manifest;
  std::vector<float> data;

  int channels() const noexcept { return static_cast<int>(manifest.channels.size()); }
  float& at(int channel, int row, int col) {
    return data[(static_cast<std::size_t>(channel) * rows + row) * cols + col];
  }
  float at(int channel, int row, int col) const {
    return data[(static_cast<std::size_t>(channel) * rows + row) * cols + col];
  }
  /// Index of a channel by canonical name, or -1.
  int channel_index(std::string_view name) const;

  friend bool operator==(const FrameRepresentation&, const FrameRepresentation&) = default;
};

/// NIR, signal: clamp(v / scale, 0, 1); reflectivity: clamp(v / 255, 0, 1);
/// reversed range: clamp(1 - range_mm / max_range_mm, 0, 1); invalid pixels
/// are 0 in every channel. With `config.positional` the three positional
/// planes follow. Errors: DimensionMismatch, MissingPoints.
FrameRepresentation build_representation(const LidarScan& scan, const PointImage* points,
                                         const RepresentationConfig& config);

/// Bilinear, half-pixel-centre resampling. The reversed-range channel is
/// conservative: a target pixel is 0 if any source pixel with non-zero
/// weight is 0, so no return is fabricated.
FrameRepresentation resize(const FrameRepresentation& rep, int rows, int cols);

/// Drops one channel (canonical name or alias); the manifest records it.
/// "pos" drops all three positional channels. Throws UnknownChannel.
FrameRepresentation exclude_channel(const FrameRepresentation& rep, std::string_view name);

Tensor to_tensor(const FrameRepresentation& rep);
FrameRepresentation from_tensor(const Tensor& tensor, ChannelManifest manifest, std::uint32_t frame_id);

void write_representation(const std::string& path, const FrameRepresentation& rep);
/// Reads the float record; the channel count must match `manifest`.
FrameRepresentation read_representation(const std::string& path, ChannelManifest manifest,
                                        std::uint32_t frame_id = 0);

}  // namespace domescan
