#include "domescan/wire.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include "byte_io.hpp"
#include "domescan/error.hpp"

namespace domescan {

using detail::get_u16;
using detail::get_u32;
using detail::get_u64;

void validate(const LidarPacket& packet, std::optional<int> scan_width) {
  if (packet.beam_count == 0) throw Error(ErrorCode::InvariantViolation, "beam_count", "must be positive");
  const auto& first = packet.blocks.front();
  for (int k = 0; k < kColumnsPerPacket; ++k) {
    const auto& block = packet.blocks[static_cast<std::size_t>(k)];
    if (block.beams.size() != packet.beam_count) {
      throw Error(ErrorCode::InvariantViolation, "beams", "block " + std::to_string(k) +
                                                              " does not hold beam_count records");
    }
    if (block.frame_id != first.frame_id) {
      throw Error(ErrorCode::InvariantViolation, "frame_id", "blocks disagree on frame_id");
    }
    if (scan_width && block.measurement_id >= *scan_width) {
      throw Error(ErrorCode::InvariantViolation, "measurement_id", "not below scan_width");
    }
    if (k > 0) {
      const int prev = packet.blocks[static_cast<std::size_t>(k - 1)].measurement_id;
      const int id = block.measurement_id;
      const bool consecutive = scan_width ? id == (prev + 1) % *scan_width
                                          : (id == prev + 1 || id == 0);
      if (!consecutive) {
        throw Error(ErrorCode::InvariantViolation, "measurement_id", "blocks are not consecutive");
      }
    }
  }
}

void encode_packet_into(const LidarPacket& packet, std::vector<std::uint8_t>& out,
                        std::optional<int> scan_width) {
  validate(packet, scan_width);
  out.clear();
  out.reserve(packet_size(packet.beam_count));
  out.insert(out.end(), kPacketMagic.begin(), kPacketMagic.end());
  detail::put_u8(out, packet.version);
  detail::put_u16(out, packet.beam_count);
  detail::put_u8(out, 0);
  for (const auto& block : packet.blocks) {
    detail::put_u16(out, block.measurement_id);
    detail::put_u16(out, block.frame_id);
    detail::put_u64(out, block.timestamp_ns);
    for (const auto& beam : block.beams) {
      detail::put_u32(out, beam.range_raw);
      detail::put_u16(out, beam.signal);
      detail::put_u16(out, beam.reflectivity);
      detail::put_u16(out, beam.nir);
    }
  }
}

std::vector<std::uint8_t> encode_packet(const LidarPacket& packet, std::optional<int> scan_width) {
  std::vector<std::uint8_t> out;
  encode_packet_into(packet, out, scan_width);
  return out;
}

LidarPacket decode_packet(std::span<const std::uint8_t> bytes, std::optional<int> scan_width) {
  if (bytes.size() < kPacketMagic.size() ||
      !std::equal(kPacketMagic.begin(), kPacketMagic.end(), bytes.begin())) {
    throw Error(ErrorCode::BadMagic, "magic");
  }
  if (bytes.size() < kPacketHeaderBytes) {
    throw Error(ErrorCode::TruncatedPacket, "header", "shorter than the packet header");
  }
  LidarPacket packet;
  packet.version = bytes[4];
  if (packet.version != kPacketVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "version", "got " + std::to_string(packet.version));
  }
  packet.beam_count = get_u16(bytes.data() + 5);
  const std::size_t expected = packet_size(packet.beam_count);
  if (bytes.size() != expected) {
    throw Error(ErrorCode::TruncatedPacket, "length",
                "expected " + std::to_string(expected) + " bytes, got " + std::to_string(bytes.size()));
  }
  if (packet.beam_count == 0) throw Error(ErrorCode::InvariantViolation, "beam_count", "must be positive");

  const std::uint8_t* p = bytes.data() + kPacketHeaderBytes;
  for (auto& block : packet.blocks) {
    block.measurement_id = get_u16(p);
    block.frame_id = get_u16(p + 2);
    block.timestamp_ns = get_u64(p + 4);
    p += kBlockHeaderBytes;
    block.beams.resize(packet.beam_count);
    for (auto& beam : block.beams) {
      beam.range_raw = get_u32(p);
      beam.signal = get_u16(p + 4);
      beam.reflectivity = get_u16(p + 6);
      beam.nir = get_u16(p + 8);
      p += kBeamRecordBytes;
    }
  }
  validate(packet, scan_width);
  return packet;
}

std::optional<std::span<const std::uint8_t>> PacketStreamReader::next() {
  if (offset_ >= stream_.size()) return std::nullopt;
  auto rest = stream_.subspan(offset_);
  const bool magic_ok = rest.size() >= kPacketMagic.size() &&
                        std::equal(kPacketMagic.begin(), kPacketMagic.end(), rest.begin());
  if (!magic_ok) {
    // Hand the damaged bytes (up to the next magic) to the caller so the
    // decode error is counted, then continue from the next magic.
    auto it = std::search(rest.begin() + 1, rest.end(), kPacketMagic.begin(), kPacketMagic.end());
    const auto skipped = static_cast<std::size_t>(it - rest.begin());
    offset_ += skipped;
    ++resyncs_;
    return rest.first(skipped);
  }
  if (rest.size() < kPacketHeaderBytes) {
    offset_ = stream_.size();
    return rest;
  }
  const std::size_t len = packet_size(get_u16(rest.data() + 5));
  const std::size_t take = std::min(len, rest.size());
  offset_ += take;
  return rest.first(take);
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, path, "cannot open for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, path, "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, path, "write failed");
}

}  // namespace domescan
