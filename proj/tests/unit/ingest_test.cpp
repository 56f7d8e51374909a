#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <memory>
#include <tuple>

#include "domescan/error.hpp"
#include "domescan/ingest.hpp"
#include "domescan/intrinsics.hpp"
#include "domescan/random.hpp"
#include "domescan/synth.hpp"
#include "domescan/wire.hpp"

using namespace domescan;

namespace {

std::shared_ptr<const SensorIntrinsics> staggered(int beams, int width) {
  auto intr = make_uniform_intrinsics(beams, width);
  for (int b = 0; b < beams; ++b) intr.pixel_shift_by_row[static_cast<std::size_t>(b)] = (b % 4) * 4 - 6;
  return std::make_shared<const SensorIntrinsics>(intr);
}

// Scan with random measurements; roughly one pixel in ten has no return.
LidarScan random_scan(Rng& rng, std::shared_ptr<const SensorIntrinsics> intr, std::uint32_t frame) {
  LidarScan scan(frame, intr);
  for (int r = 0; r < scan.rows(); ++r) {
    for (int c = 0; c < scan.cols(); ++c) {
      const bool hit = uniform_below(rng, 10) != 0;
      scan.range_mm(r, c) = hit ? 1 + static_cast<std::uint32_t>(uniform_below(rng, 100000)) : 0;
      scan.valid(r, c) = hit ? 1 : 0;
      scan.signal(r, c) = static_cast<std::uint16_t>(rng());
      scan.reflectivity(r, c) = static_cast<std::uint16_t>(rng());
      scan.nir(r, c) = static_cast<std::uint16_t>(rng());
    }
  }
  scan.received_columns = scan.cols();
  return scan;
}

std::vector<std::vector<std::uint8_t>> encode_frame(const LidarScan& scan, const SensorIntrinsics& intr) {
  std::vector<std::vector<std::uint8_t>> out;
  for (const auto& p : synth::packetize(scan, scan.range_mm, intr)) out.push_back(encode_packet(p));
  return out;
}

std::vector<std::uint8_t> concat(const std::vector<std::vector<std::uint8_t>>& packets) {
  std::vector<std::uint8_t> out;
  for (const auto& p : packets) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

TEST(Ingest, FullFrame) {
  Rng rng(1);
  auto intr = staggered(8, 512);
  const auto scan = random_scan(rng, intr, 7);
  const auto packets = encode_frame(scan, *intr);
  ASSERT_EQ(packets.size(), 32u);
  AssemblerStats stats;
  const auto scans = assemble(concat(packets), intr, &stats);
  ASSERT_EQ(scans.size(), 1u);
  EXPECT_EQ(scans[0].frame_id, 7u);
  EXPECT_EQ(scans[0].completeness(), 1.0);
  EXPECT_TRUE(scans[0].same_data(scan));
  EXPECT_EQ(stats.packets_accepted, 32u);
  EXPECT_EQ(stats.decode_errors, 0u);
}

TEST(Ingest, MissingPacketLeavesSixteenInvalidColumns) {
  Rng rng(2);
  auto intr = std::make_shared<const SensorIntrinsics>(make_uniform_intrinsics(8, 512));
  auto packets = encode_frame(random_scan(rng, intr, 7), *intr);
  packets.erase(packets.begin() + 5);  // measurement ids 80..95
  const auto scans = assemble(concat(packets), intr);
  ASSERT_EQ(scans.size(), 1u);
  EXPECT_EQ(scans[0].received_columns, 496);
  EXPECT_EQ(scans[0].completeness(), 0.96875);
  int invalid_columns = 0;
  for (int c = 0; c < 512; ++c) {
    bool all_invalid = true;
    for (int r = 0; r < 8; ++r) {
      if (scans[0].valid(r, c)) all_invalid = false;
      if (c >= 80 && c < 96) {
        EXPECT_EQ(scans[0].range_mm(r, c), 0u);
        EXPECT_EQ(scans[0].nir(r, c), 0u);
      }
    }
    invalid_columns += all_invalid;
  }
  EXPECT_EQ(invalid_columns, 16);
}

TEST(Ingest, DestaggerIsAPermutationPerRow) {
  Rng rng(3);
  auto intr = staggered(16, 64);
  const auto source = random_scan(rng, intr, 1);
  // Feed measurement blocks directly and compare per-row multisets against the
  // raw block contents.
  const auto packets = synth::packetize(source, source.range_mm, *intr);
  ScanAssembler assembler(intr);
  std::vector<LidarScan> out;
  for (const auto& p : packets) assembler.push(p, out);
  assembler.finish(out);
  ASSERT_EQ(out.size(), 1u);
  for (int r = 0; r < 16; ++r) {
    std::multiset<std::tuple<std::uint32_t, std::uint16_t, std::uint16_t, std::uint16_t>> raw, got;
    for (const auto& p : packets) {
      for (const auto& b : p.blocks) {
        const auto& rec = b.beams[static_cast<std::size_t>(r)];
        raw.insert({rec.range_raw, rec.signal, rec.reflectivity, rec.nir});
      }
    }
    for (int c = 0; c < 64; ++c) {
      got.insert({out[0].range_mm(r, c), out[0].signal(r, c), out[0].reflectivity(r, c), out[0].nir(r, c)});
    }
    EXPECT_EQ(raw, got);
  }
  // Column placement follows (m + shift) mod w.
  const auto& b = packets[1].blocks[3];
  const int m = b.measurement_id;
  for (int r = 0; r < 16; ++r) {
    const int col = ((m + intr->pixel_shift_by_row[static_cast<std::size_t>(r)]) % 64 + 64) % 64;
    EXPECT_EQ(out[0].range_mm(r, col), b.beams[static_cast<std::size_t>(r)].range_raw);
  }
}

TEST(Ingest, InterleavedFrameBoundaryYieldsTwoScansInOrder) {
  Rng rng(4);
  auto intr = staggered(4, 128);
  const auto a = random_scan(rng, intr, 7);
  const auto b = random_scan(rng, intr, 8);
  auto pa = encode_frame(a, *intr);
  auto pb = encode_frame(b, *intr);
  // Last two packets of frame 7 arrive after the first packets of frame 8.
  std::vector<std::vector<std::uint8_t>> order(pa.begin(), pa.end() - 2);
  order.push_back(pb[0]);
  order.push_back(pa[pa.size() - 2]);
  order.push_back(pb[1]);
  order.push_back(pa.back());
  order.insert(order.end(), pb.begin() + 2, pb.end());

  AssemblerStats stats;
  const auto scans = assemble(concat(order), intr, &stats);
  ASSERT_EQ(scans.size(), 2u);
  EXPECT_EQ(scans[0].frame_id, 7u);
  EXPECT_EQ(scans[1].frame_id, 8u);
  EXPECT_TRUE(scans[0].same_data(a));
  EXPECT_TRUE(scans[1].same_data(b));
  EXPECT_EQ(stats.late_packets, 0u);
}

TEST(Ingest, ReorderedAndDuplicatedPacketsWithinFrame) {
  Rng rng(5);
  auto intr = staggered(4, 128);
  const auto a = random_scan(rng, intr, 3);
  auto pa = encode_frame(a, *intr);
  std::reverse(pa.begin(), pa.end());
  pa.push_back(pa[2]);
  const auto scans = assemble(concat(pa), intr);
  ASSERT_EQ(scans.size(), 1u);
  EXPECT_TRUE(scans[0].same_data(a));
}

TEST(Ingest, DuplicateColumnLastWriterWins) {
  Rng rng(6);
  auto intr = std::make_shared<const SensorIntrinsics>(make_uniform_intrinsics(2, 32));
  const auto a = random_scan(rng, intr, 1);
  auto packets = synth::packetize(a, a.range_mm, *intr);
  auto dup = packets[0];
  for (auto& blk : dup.blocks) {
    for (auto& beam : blk.beams) beam.nir = 4242;
  }
  ScanAssembler assembler(intr);
  std::vector<LidarScan> out;
  assembler.push(packets[0], out);
  assembler.push(dup, out);
  assembler.push(packets[1], out);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].nir(0, 0), 4242);
  EXPECT_EQ(out[0].nir(1, 15), 4242);
  EXPECT_EQ(out[0].nir(0, 16), a.nir(0, 16));
  EXPECT_EQ(out[0].received_columns, 32);
}

TEST(Ingest, TrailingPartialFrameIsEmittedAtEnd) {
  Rng rng(7);
  auto intr = std::make_shared<const SensorIntrinsics>(make_uniform_intrinsics(4, 64));
  auto p1 = encode_frame(random_scan(rng, intr, 1), *intr);
  auto p2 = encode_frame(random_scan(rng, intr, 2), *intr);
  p2.resize(1);
  p1.insert(p1.end(), p2.begin(), p2.end());
  const auto scans = assemble(concat(p1), intr);
  ASSERT_EQ(scans.size(), 2u);
  EXPECT_EQ(scans[1].frame_id, 2u);
  EXPECT_EQ(scans[1].completeness(), 0.25);
}

TEST(Ingest, LatePacketsAreDropped) {
  Rng rng(8);
  auto intr = std::make_shared<const SensorIntrinsics>(make_uniform_intrinsics(4, 64));
  auto f1 = encode_frame(random_scan(rng, intr, 1), *intr);
  auto f2 = encode_frame(random_scan(rng, intr, 2), *intr);
  auto f3 = encode_frame(random_scan(rng, intr, 3), *intr);
  std::vector<std::vector<std::uint8_t>> order = {f1[0], f1[1], f1[2], f2[0], f3[0], f1[3]};
  AssemblerStats stats;
  const auto scans = assemble(concat(order), intr, &stats);
  ASSERT_EQ(scans.size(), 3u);
  EXPECT_EQ(scans[0].received_columns, 48);  // frame 1 closed when frame 3 opened
  EXPECT_EQ(stats.late_packets, 1u);
}

TEST(Ingest, FrameIdWraps) {
  Rng rng(9);
  auto intr = std::make_shared<const SensorIntrinsics>(make_uniform_intrinsics(2, 32));
  auto f1 = encode_frame(random_scan(rng, intr, 65535), *intr);
  auto f2 = encode_frame(random_scan(rng, intr, 0), *intr);
  f1.insert(f1.end(), f2.begin(), f2.end());
  const auto scans = assemble(concat(f1), intr);
  ASSERT_EQ(scans.size(), 2u);
  EXPECT_EQ(scans[0].frame_id, 65535u);
  EXPECT_EQ(scans[1].frame_id, 0u);
}

TEST(Ingest, BadDatagramsAreCountedNotFatal) {
  Rng rng(10);
  auto intr = staggered(4, 64);
  const auto a = random_scan(rng, intr, 1);
  auto packets = encode_frame(a, *intr);
  std::vector<std::uint8_t> junk(packets[0]);
  junk[0] = 'X';
  std::vector<std::uint8_t> short_packet(packets[0].begin(), packets[0].end() - 3);
  ScanAssembler assembler(intr);
  std::vector<LidarScan> out;
  assembler.push(junk, out);
  for (std::size_t i = 0; i < packets.size(); ++i) {
    assembler.push(packets[i], out);
    if (i == 1) assembler.push(short_packet, out);
  }
  assembler.finish(out);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(out[0].same_data(a));
  EXPECT_EQ(assembler.stats().decode_errors, 2u);
}

TEST(Ingest, BeamCountMismatchIsFatal) {
  Rng rng(11);
  auto intr8 = std::make_shared<const SensorIntrinsics>(make_uniform_intrinsics(8, 64));
  auto intr4 = std::make_shared<const SensorIntrinsics>(make_uniform_intrinsics(4, 64));
  const auto packets = encode_frame(random_scan(rng, intr8, 1), *intr8);
  ScanAssembler assembler(intr4);
  std::vector<LidarScan> out;
  try {
    assembler.push(packets[0], out);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BeamCountMismatch);
  }
}

TEST(Ingest, CompletenessMonotoneInDrops) {
  Rng rng(12);
  auto intr = std::make_shared<const SensorIntrinsics>(make_uniform_intrinsics(2, 256));
  const auto packets = encode_frame(random_scan(rng, intr, 1), *intr);
  double previous = 2.0;
  for (std::size_t drop = 0; drop < packets.size(); ++drop) {
    std::vector<std::vector<std::uint8_t>> kept(packets.begin() + static_cast<long>(drop), packets.end());
    const auto scans = assemble(concat(kept), intr);
    ASSERT_EQ(scans.size(), 1u);
    EXPECT_LE(scans[0].completeness(), previous);
    EXPECT_EQ(scans[0].completeness(), 1.0 - static_cast<double>(16 * drop) / 256.0);
    previous = scans[0].completeness();
  }
}

TEST(Ingest, RangeUnitScalesRawCounts) {
  auto base = make_uniform_intrinsics(2, 16);
  base.range_unit_mm = 2.5;
  auto intr = std::make_shared<const SensorIntrinsics>(base);
  LidarScan scan(1, intr);
  Grid<std::uint32_t> raw(2, 16, 0);
  raw(0, 3) = 1001;
  raw(1, 4) = 4;
  const auto packets = synth::packetize(scan, raw, *intr);
  ScanAssembler assembler(intr);
  std::vector<LidarScan> out;
  for (const auto& p : packets) assembler.push(p, out);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].range_mm(0, 3), 2503u);  // 2502.5 rounds half away from zero
  EXPECT_EQ(out[0].range_mm(1, 4), 10u);
  EXPECT_EQ(out[0].valid(0, 3), 1);
  EXPECT_EQ(out[0].valid(0, 4), 0);
}

TEST(Ingest, BoundedQueueDropsOldest) {
  BoundedQueue<int> q(2);
  q.push(1);
  q.push(2);
  q.push(3);
  EXPECT_EQ(q.dropped(), 1u);
  EXPECT_EQ(q.pop(std::chrono::milliseconds(0)), 2);
  EXPECT_EQ(q.pop(std::chrono::milliseconds(0)), 3);
  EXPECT_EQ(q.pop(std::chrono::milliseconds(1)), std::nullopt);
  q.close();
  EXPECT_TRUE(q.closed_and_empty());
}

TEST(Ingest, UdpLoopbackMatchesOfflineAssembly) {
  Rng rng(13);
  auto intr = staggered(16, 128);
  std::vector<std::vector<std::uint8_t>> all;
  std::vector<LidarScan> sources;
  for (std::uint32_t f = 0; f < 5; ++f) {
    sources.push_back(random_scan(rng, intr, 100 + f));
    auto p = encode_frame(sources.back(), *intr);
    all.insert(all.end(), p.begin(), p.end());
  }
  // A bad datagram in the middle is counted and does not disturb the scans.
  std::vector<std::uint8_t> junk(40, 0xAB);
  all.insert(all.begin() + 11, junk);
  const auto stream = concat(all);
  const auto offline = assemble(stream, intr);

  UdpListener listener(intr, {.port = 0, .queue_capacity = 16});
  ASSERT_NE(listener.bound_port(), 0);
  const auto sent = replay_udp(stream, listener.bound_port(), 0.0);
  EXPECT_EQ(sent, all.size());
  std::vector<LidarScan> online;
  while (online.size() < offline.size()) {
    auto scan = listener.next(std::chrono::milliseconds(2000));
    if (!scan) break;
    online.push_back(std::move(*scan));
  }
  listener.stop();
  ASSERT_EQ(online.size(), offline.size());
  for (std::size_t i = 0; i < online.size(); ++i) {
    EXPECT_EQ(online[i].frame_id, offline[i].frame_id);
    EXPECT_TRUE(online[i].same_data(offline[i]));
    EXPECT_TRUE(online[i].same_data(sources[i]));
  }
  EXPECT_EQ(listener.stats().decode_errors, 1u);
}

TEST(Ingest, BindFailureOnBusyPort) {
  auto intr = std::make_shared<const SensorIntrinsics>(make_uniform_intrinsics(2, 16));
  UdpListener first(intr, {});
  UdpListener::Options options;
  options.port = first.bound_port();
  // SO_REUSEADDR does not allow two unicast UDP binds to share a port on Linux
  // unless both set SO_REUSEPORT, so the second bind must fail.
  try {
    UdpListener second(intr, options);
    FAIL() << "second bind succeeded";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BindFailure);
  }
}
