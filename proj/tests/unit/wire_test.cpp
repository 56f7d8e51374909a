#include <gtest/gtest.h>

#include "domescan/error.hpp"
#include "domescan/random.hpp"
#include "domescan/wire.hpp"

using namespace domescan;

namespace {

LidarPacket random_packet(Rng& rng, int beams, int width) {
  LidarPacket p;
  p.beam_count = static_cast<std::uint16_t>(beams);
  const auto first = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(width)));
  const auto frame = static_cast<std::uint16_t>(rng());
  for (int k = 0; k < kColumnsPerPacket; ++k) {
    auto& b = p.blocks[static_cast<std::size_t>(k)];
    b.measurement_id = static_cast<std::uint16_t>((first + k) % width);
    b.frame_id = frame;
    b.timestamp_ns = rng();
    b.beams.resize(static_cast<std::size_t>(beams));
    for (auto& r : b.beams) {
      r.range_raw = static_cast<std::uint32_t>(rng());
      r.signal = static_cast<std::uint16_t>(rng());
      r.reflectivity = static_cast<std::uint16_t>(rng());
      r.nir = static_cast<std::uint16_t>(rng());
    }
  }
  return p;
}

ErrorCode decode_error(std::span<const std::uint8_t> bytes, std::optional<int> width = std::nullopt) {
  try {
    decode_packet(bytes, width);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode succeeded";
  return ErrorCode::IoError;
}

}  // namespace

TEST(Wire, PacketSizes) {
  EXPECT_EQ(packet_size(64), 10440u);
  EXPECT_EQ(packet_size(128), 20680u);
  Rng rng(1);
  EXPECT_EQ(encode_packet(random_packet(rng, 64, 512)).size(), 10440u);
  EXPECT_EQ(encode_packet(random_packet(rng, 128, 512)).size(), 20680u);
}

TEST(Wire, ByteLayoutIsLittleEndian) {
  LidarPacket p;
  p.beam_count = 1;
  for (int k = 0; k < kColumnsPerPacket; ++k) {
    auto& b = p.blocks[static_cast<std::size_t>(k)];
    b.measurement_id = static_cast<std::uint16_t>(0x0102 + k);
    b.frame_id = 0x0A0B;
    b.timestamp_ns = 0x1122334455667788ULL;
    b.beams = {{0xDEADBEEF, 0x1234, 0x5678, 0x9ABC}};
  }
  const auto bytes = encode_packet(p);
  ASSERT_EQ(bytes.size(), packet_size(1));
  const std::vector<std::uint8_t> head(bytes.begin(), bytes.begin() + 30);
  const std::vector<std::uint8_t> expected = {
      'D', 'O', 'M', 'E', 1, 1, 0, 0,                          // header
      0x02, 0x01, 0x0B, 0x0A,                                   // measurement id, frame id
      0x88, 0x77, 0x66, 0x55, 0x44, 0x33, 0x22, 0x11,           // timestamp
      0xEF, 0xBE, 0xAD, 0xDE, 0x34, 0x12, 0x78, 0x56, 0xBC, 0x9A  // beam record
  };
  EXPECT_EQ(head, expected);
  EXPECT_EQ(bytes[30], 0x03);  // second block's measurement id
}

TEST(Wire, RoundTripRandomPackets) {
  Rng rng(7);
  for (int n = 0; n < 500; ++n) {
    const int beams = 1 + static_cast<int>(uniform_below(rng, 130));
    const int width = 16 + static_cast<int>(uniform_below(rng, 1024));
    const auto p = random_packet(rng, beams, width);
    const auto bytes = encode_packet(p, width);
    ASSERT_EQ(bytes.size(), packet_size(static_cast<std::size_t>(beams)));
    EXPECT_EQ(decode_packet(bytes, width), p);
    EXPECT_EQ(decode_packet(bytes), p);
  }
}

TEST(Wire, DecodeErrors) {
  Rng rng(3);
  const auto bytes = encode_packet(random_packet(rng, 64, 512), 512);

  auto bad_magic = bytes;
  bad_magic[0] ^= 0xFF;
  EXPECT_EQ(decode_error(bad_magic), ErrorCode::BadMagic);

  auto version = bytes;
  version[4] = 2;
  EXPECT_EQ(decode_error(version), ErrorCode::UnsupportedVersion);

  const std::span<const std::uint8_t> all(bytes);
  EXPECT_EQ(decode_error(all.first(bytes.size() - 1)), ErrorCode::TruncatedPacket);
  EXPECT_EQ(decode_error(all.first(6)), ErrorCode::TruncatedPacket);
  EXPECT_EQ(decode_error(all.first(2)), ErrorCode::BadMagic);
  EXPECT_EQ(decode_error({}), ErrorCode::BadMagic);

  auto longer = bytes;
  longer.push_back(0);
  EXPECT_EQ(decode_error(longer), ErrorCode::TruncatedPacket);

  auto frame = bytes;
  frame[8 + 652 + 2] ^= 1;  // frame id of block 1
  EXPECT_EQ(decode_error(frame), ErrorCode::InvariantViolation);

  auto gap = bytes;
  gap[8 + 652] += 2;  // measurement id of block 1 jumps
  EXPECT_EQ(decode_error(gap), ErrorCode::InvariantViolation);

  EXPECT_EQ(decode_error(bytes, 100), ErrorCode::InvariantViolation);  // ids beyond scan width
}

TEST(Wire, EncodeRejectsInvalidPacket) {
  Rng rng(4);
  auto p = random_packet(rng, 8, 64);
  p.blocks[5].beams.pop_back();
  EXPECT_THROW(encode_packet(p), Error);
  p = random_packet(rng, 8, 64);
  p.blocks[15].frame_id ^= 1;
  EXPECT_THROW(encode_packet(p), Error);
}

TEST(Wire, MeasurementIdsWrapModuloWidth) {
  Rng rng(5);
  auto p = random_packet(rng, 2, 512);
  for (int k = 0; k < kColumnsPerPacket; ++k) {
    p.blocks[static_cast<std::size_t>(k)].measurement_id = static_cast<std::uint16_t>((504 + k) % 512);
  }
  EXPECT_EQ(decode_packet(encode_packet(p, 512), 512), p);
}

TEST(Wire, FuzzProducesOnlyDefinedErrors) {
  Rng rng(11);
  const auto valid = encode_packet(random_packet(rng, 4, 64), 64);
  std::vector<std::uint8_t> buf;
  for (int n = 0; n < 20000; ++n) {
    if (n % 2 == 0) {
      buf.resize(uniform_below(rng, 600));
      for (auto& b : buf) b = static_cast<std::uint8_t>(rng());
      if (buf.size() >= 4 && n % 4 == 0) std::copy(kPacketMagic.begin(), kPacketMagic.end(), buf.begin());
    } else {
      buf = valid;
      const auto flips = 1 + uniform_below(rng, 8);
      for (std::uint64_t f = 0; f < flips; ++f) buf[uniform_below(rng, buf.size())] ^= static_cast<std::uint8_t>(rng());
      if (n % 3 == 0) buf.resize(uniform_below(rng, buf.size() + 1));
    }
    try {
      decode_packet(buf, 64);
    } catch (const Error& e) {
      const auto c = e.code();
      ASSERT_TRUE(c == ErrorCode::BadMagic || c == ErrorCode::UnsupportedVersion ||
                  c == ErrorCode::TruncatedPacket || c == ErrorCode::InvariantViolation)
          << e.what();
    }
  }
}

TEST(Wire, StreamReaderSplitsAndResyncs) {
  Rng rng(9);
  std::vector<std::uint8_t> stream;
  std::vector<LidarPacket> packets;
  for (int n = 0; n < 3; ++n) {
    packets.push_back(random_packet(rng, 4, 64));
    const auto bytes = encode_packet(packets.back());
    stream.insert(stream.end(), bytes.begin(), bytes.end());
    if (n == 0) stream.insert(stream.end(), {'x', 'y', 'z'});  // junk between packets
  }
  stream.resize(stream.size() - 5);  // truncated tail

  PacketStreamReader reader(stream);
  std::vector<std::span<const std::uint8_t>> views;
  while (auto v = reader.next()) views.push_back(*v);
  ASSERT_EQ(views.size(), 4u);
  EXPECT_EQ(decode_packet(views[0]), packets[0]);
  EXPECT_EQ(views[1].size(), 3u);
  EXPECT_EQ(decode_packet(views[2]), packets[1]);
  EXPECT_EQ(views[3].size(), packet_size(4) - 5);
  EXPECT_EQ(reader.resync_count(), 1u);
}
