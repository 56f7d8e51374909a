#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace domescan {

// Packet layout, little-endian throughout:
//   magic "DOME" | version u8 | beam_count u16 | reserved u8
//   16 x { measurement_id u16 | frame_id u16 | timestamp_ns u64 |
//          beam_count x { range_raw u32 | signal u16 | reflectivity u16 | nir u16 } }
inline constexpr std::array<std::uint8_t, 4> kPacketMagic{0x44, 0x4F, 0x4D, 0x45};
inline constexpr std::uint8_t kPacketVersion = 1;
inline constexpr int kColumnsPerPacket = 16;
inline constexpr std::size_t kPacketHeaderBytes = 8;
inline constexpr std::size_t kBlockHeaderBytes = 12;
inline constexpr std::size_t kBeamRecordBytes = 10;

struct BeamRecord {
  std::uint32_t range_raw = 0;  // range counts; 0 = no return
  std::uint16_t signal = 0;
  std::uint16_t reflectivity = 0;
  std::uint16_t nir = 0;

  friend bool operator==(const BeamRecord&, const BeamRecord&) = default;
};

struct MeasurementBlock {
  std::uint16_t measurement_id = 0;
  std::uint16_t frame_id = 0;
  std::uint64_t timestamp_ns = 0;
  std::vector<BeamRecord> beams;

  friend bool operator==(const MeasurementBlock&, const MeasurementBlock&) = default;
};

struct LidarPacket {
  std::uint8_t version = kPacketVersion;
  std::uint16_t beam_count = 0;
  std::array<MeasurementBlock, kColumnsPerPacket> blocks;

  friend bool operator==(const LidarPacket&, const LidarPacket&) = default;
};

constexpr std::size_t packet_size(std::size_t beam_count) {
  return kPacketHeaderBytes + kColumnsPerPacket * (kBlockHeaderBytes + beam_count * kBeamRecordBytes);
}

/// Checks the packet invariants. When `scan_width` is known, measurement ids
/// must be below it and consecutive modulo it; otherwise consecutive ids may
/// only wrap to zero.
void validate(const LidarPacket& packet, std::optional<int> scan_width = std::nullopt);

std::vector<std::uint8_t> encode_packet(const LidarPacket& packet,
                                        std::optional<int> scan_width = std::nullopt);
void encode_packet_into(const LidarPacket& packet, std::vector<std::uint8_t>& out,
                        std::optional<int> scan_width = std::nullopt);

/// Never reads outside `bytes`. Errors: BadMagic, UnsupportedVersion,
/// TruncatedPacket (any length mismatch), InvariantViolation.
LidarPacket decode_packet(std::span<const std::uint8_t> bytes,
                          std::optional<int> scan_width = std::nullopt);

/// Splits a recorded stream (concatenated packets) into per-packet views.
/// A damaged header cannot be skipped by length, so the reader scans forward
/// to the next magic and counts the skip.
class PacketStreamReader {
 public:
  explicit PacketStreamReader(std::span<const std::uint8_t> stream) : stream_(stream) {}

  /// Next candidate packet, or nullopt at end of stream. The view may still
  /// fail to decode; a trailing partial packet is returned as-is.
  std::optional<std::span<const std::uint8_t>> next();

  std::size_t resync_count() const noexcept { return resyncs_; }

 private:
  std::span<const std::uint8_t> stream_;
  std::size_t offset_ = 0;
  std::size_t resyncs_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace domescan
