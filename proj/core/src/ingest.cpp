#include "domescan/ingest.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "byte_io.hpp"
#include "domescan/error.hpp"

namespace domescan {

namespace {

bool newer(std::uint16_t a, std::uint16_t b) {
  return static_cast<std::int16_t>(static_cast<std::uint16_t>(a - b)) > 0;
}

std::uint32_t to_range_mm(std::uint32_t raw, double unit_mm) {
  if (unit_mm == 1.0) return raw;
  const double mm = std::round(raw * unit_mm);
  if (mm >= static_cast<double>(std::numeric_limits<std::uint32_t>::max())) {
    return std::numeric_limits<std::uint32_t>::max();
  }
  return static_cast<std::uint32_t>(mm);
}

}  // namespace

ScanAssembler::ScanAssembler(std::shared_ptr<const SensorIntrinsics> intrinsics)
    : intrinsics_(std::move(intrinsics)) {
  validate(*intrinsics_);
}

void ScanAssembler::push(std::span<const std::uint8_t> datagram, std::vector<LidarScan>& completed) {
  LidarPacket packet;
  try {
    packet = decode_packet(datagram, intrinsics_->scan_width);
  } catch (const Error&) {
    ++stats_.decode_errors;
    return;
  }
  push(packet, completed);
}

void ScanAssembler::push(const LidarPacket& packet, std::vector<LidarScan>& completed) {
  if (packet.beam_count != intrinsics_->beam_count) {
    throw Error(ErrorCode::BeamCountMismatch, "beam_count",
                "packet has " + std::to_string(packet.beam_count) + ", intrinsics " +
                    std::to_string(intrinsics_->beam_count));
  }
  const std::uint16_t frame_id = packet.blocks.front().frame_id;
  const bool stale = last_emitted_ && !newer(frame_id, *last_emitted_);
  const bool is_open = std::any_of(open_.begin(), open_.end(),
                                   [&](const OpenFrame& f) { return f.scan.frame_id == frame_id; });
  if (stale && !is_open) {
    ++stats_.late_packets;
    return;
  }
  if (!is_open && !open_.empty() && !newer(frame_id, static_cast<std::uint16_t>(open_.back().scan.frame_id))) {
    // Older than the newest open frame but never opened: its window passed.
    ++stats_.late_packets;
    return;
  }

  OpenFrame& frame = open_frame(frame_id, completed);
  for (const auto& block : packet.blocks) write_block(frame, block);
  ++stats_.packets_accepted;

  while (!open_.empty() && open_.front().scan.received_columns == intrinsics_->scan_width) {
    emit_front(completed);
  }
}

ScanAssembler::OpenFrame& ScanAssembler::open_frame(std::uint16_t frame_id,
                                                    std::vector<LidarScan>& completed) {
  for (auto& f : open_) {
    if (f.scan.frame_id == frame_id) return f;
  }
  open_.push_back(OpenFrame{LidarScan(frame_id, intrinsics_),
                            std::vector<std::uint8_t>(static_cast<std::size_t>(intrinsics_->scan_width), 0)});
  while (open_.size() > 2) emit_front(completed);
  return open_.back();
}

void ScanAssembler::emit_front(std::vector<LidarScan>& completed) {
  last_emitted_ = static_cast<std::uint16_t>(open_.front().scan.frame_id);
  completed.push_back(std::move(open_.front().scan));
  open_.pop_front();
  ++stats_.scans_emitted;
}

void ScanAssembler::write_block(OpenFrame& frame, const MeasurementBlock& block) {
  const SensorIntrinsics& intr = *intrinsics_;
  LidarScan& scan = frame.scan;
  const int m = block.measurement_id;
  for (int row = 0; row < intr.beam_count; ++row) {
    const BeamRecord& beam = block.beams[static_cast<std::size_t>(row)];
    const int col = destaggered_column(intr, row, m);
    const std::uint32_t range = to_range_mm(beam.range_raw, intr.range_unit_mm);
    scan.range_mm(row, col) = range;
    scan.signal(row, col) = beam.signal;
    scan.reflectivity(row, col) = beam.reflectivity;
    scan.nir(row, col) = beam.nir;
    scan.valid(row, col) = beam.range_raw != 0 ? 1 : 0;
  }
  auto& seen = frame.seen[static_cast<std::size_t>(m)];
  if (!seen) {
    seen = 1;
    ++scan.received_columns;
  }
}

void ScanAssembler::finish(std::vector<LidarScan>& completed) {
  while (!open_.empty()) emit_front(completed);
}

std::vector<LidarScan> assemble(std::span<const std::uint8_t> stream,
                                std::shared_ptr<const SensorIntrinsics> intrinsics,
                                AssemblerStats* stats) {
  ScanAssembler assembler(std::move(intrinsics));
  std::vector<LidarScan> scans;
  PacketStreamReader reader(stream);
  while (auto bytes = reader.next()) assembler.push(*bytes, scans);
  assembler.finish(scans);
  if (stats != nullptr) *stats = assembler.stats();
  return scans;
}

// --- UDP ---------------------------------------------------------------------

UdpListener::UdpListener(std::shared_ptr<const SensorIntrinsics> intrinsics, Options options,
                         bool any_interface)
    : intrinsics_(std::move(intrinsics)), queue_(options.queue_capacity) {
  validate(*intrinsics_);
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw Error(ErrorCode::BindFailure, "socket", std::strerror(errno));

  if (options.receive_buffer_bytes > 0) {
    // The forced variant lifts the rmem_max cap but needs CAP_NET_ADMIN.
    if (::setsockopt(fd_, SOL_SOCKET, SO_RCVBUFFORCE, &options.receive_buffer_bytes,
                     sizeof options.receive_buffer_bytes) != 0) {
      ::setsockopt(fd_, SOL_SOCKET, SO_RCVBUF, &options.receive_buffer_bytes,
                   sizeof options.receive_buffer_bytes);
    }
  }
  timeval tv{};
  tv.tv_usec = 50'000;
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(options.port);
  addr.sin_addr.s_addr = htonl(any_interface ? INADDR_ANY : INADDR_LOOPBACK);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    const std::string reason = std::strerror(errno);
    ::close(fd_);
    throw Error(ErrorCode::BindFailure, "port " + std::to_string(options.port), reason);
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);

  worker_ = std::thread([this] { run(); });
}

UdpListener::~UdpListener() {
  stop();
  if (fd_ >= 0) ::close(fd_);
}

void UdpListener::run() {
  ScanAssembler assembler(intrinsics_);
  std::vector<std::uint8_t> buffer(65536);
  std::vector<LidarScan> completed;
  auto publish = [&] {
    for (auto& scan : completed) {
      queue_.push(std::move(scan));
      ++scans_emitted_;
    }
    completed.clear();
    decode_errors_ = assembler.stats().decode_errors;
    late_packets_ = assembler.stats().late_packets;
  };

  while (!stopping_) {
    const ssize_t n = ::recv(fd_, buffer.data(), buffer.size(), 0);
    if (n < 0) continue;  // timeout or interrupt; re-check the stop flag
    ++datagrams_;
    try {
      assembler.push(std::span<const std::uint8_t>(buffer.data(), static_cast<std::size_t>(n)), completed);
    } catch (const Error&) {
      // BeamCountMismatch: the stream belongs to a different sensor model.
      beam_count_mismatch_ = true;
      break;
    }
    publish();
  }
  // Drain datagrams already queued in the socket before flushing.
  while (!beam_count_mismatch_) {
    const ssize_t n = ::recv(fd_, buffer.data(), buffer.size(), MSG_DONTWAIT);
    if (n < 0) break;
    ++datagrams_;
    try {
      assembler.push(std::span<const std::uint8_t>(buffer.data(), static_cast<std::size_t>(n)), completed);
    } catch (const Error&) {
      beam_count_mismatch_ = true;
    }
  }
  assembler.finish(completed);
  publish();
  queue_.close();
}

std::optional<LidarScan> UdpListener::next(std::chrono::milliseconds timeout) {
  return queue_.pop(timeout);
}

void UdpListener::stop() {
  stopping_ = true;
  if (worker_.joinable()) worker_.join();
}

ListenerStats UdpListener::stats() const {
  ListenerStats s;
  s.datagrams = datagrams_;
  s.decode_errors = decode_errors_;
  s.late_packets = late_packets_;
  s.scans_emitted = scans_emitted_;
  s.queue_drops = queue_.dropped();
  s.beam_count_mismatch = beam_count_mismatch_;
  return s;
}

std::size_t replay_udp(std::span<const std::uint8_t> stream, std::uint16_t port,
                       double frame_rate_hz, std::span<const std::size_t> skip) {
  const int fd = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) throw Error(ErrorCode::IoError, "socket", std::strerror(errno));
  int sndbuf = 4 << 20;
  ::setsockopt(fd, SOL_SOCKET, SO_SNDBUF, &sndbuf, sizeof sndbuf);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);

  using clock = std::chrono::steady_clock;
  const auto period = frame_rate_hz > 0
                          ? std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / frame_rate_hz))
                          : clock::duration::zero();
  auto next_frame_at = clock::now();
  std::optional<std::uint16_t> current_frame;

  PacketStreamReader reader(stream);
  std::size_t index = 0;
  std::size_t sent = 0;
  while (auto bytes = reader.next()) {
    const std::size_t this_index = index++;
    if (bytes->size() >= kPacketHeaderBytes + 4 && period != clock::duration::zero()) {
      const std::uint16_t frame = detail::get_u16(bytes->data() + kPacketHeaderBytes + 2);
      if (current_frame && frame != *current_frame) {
        next_frame_at += period;
        std::this_thread::sleep_until(next_frame_at);
      }
      current_frame = frame;
    }
    if (std::find(skip.begin(), skip.end(), this_index) != skip.end()) continue;
    const ssize_t n = ::sendto(fd, bytes->data(), bytes->size(), 0,
                               reinterpret_cast<const sockaddr*>(&addr), sizeof addr);
    if (n == static_cast<ssize_t>(bytes->size())) ++sent;
  }
  ::close(fd);
  return sent;
}

}  // namespace domescan
