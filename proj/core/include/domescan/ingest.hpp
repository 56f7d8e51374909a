#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "domescan/scan.hpp"
#include "domescan/wire.hpp"

namespace domescan {

struct AssemblerStats {
  std::uint64_t packets_accepted = 0;
  std::uint64_t decode_errors = 0;
  std::uint64_t late_packets = 0;  // belonged to an already emitted frame
  std::uint64_t scans_emitted = 0;
};

/// Turns a quasi-ordered packet sequence into destaggered scans.
///
/// A frame stays open while packets for it may still arrive: at most two
/// frames are open at once, so stragglers from frame k that arrive after the
/// first packets of frame k+1 are still placed. The older frame is emitted
/// as soon as it is complete, when a third frame id shows up, or at finish().
/// Duplicated columns overwrite (last writer wins). Frame ids compare with
/// 16-bit serial arithmetic so the wire counter may wrap.
class ScanAssembler {
 public:
  explicit ScanAssembler(std::shared_ptr<const SensorIntrinsics> intrinsics);

  /// Decode errors are counted and the datagram dropped; a packet whose
  /// beam_count differs from the intrinsics throws BeamCountMismatch.
  void push(std::span<const std::uint8_t> datagram, std::vector<LidarScan>& completed);
  void push(const LidarPacket& packet, std::vector<LidarScan>& completed);

  /// Emits every open frame in frame order.
  void finish(std::vector<LidarScan>& completed);

  const AssemblerStats& stats() const noexcept { return stats_; }
  const SensorIntrinsics& intrinsics() const noexcept { return *intrinsics_; }

 private:
  struct OpenFrame {
    LidarScan scan;
    std::vector<std::uint8_t> seen;  // by measurement id
  };

  OpenFrame& open_frame(std::uint16_t frame_id, std::vector<LidarScan>& completed);
  void emit_front(std::vector<LidarScan>& completed);
  void write_block(OpenFrame& frame, const MeasurementBlock& block);

  std::shared_ptr<const SensorIntrinsics> intrinsics_;
  std::deque<OpenFrame> open_;
  std::optional<std::uint16_t> last_emitted_;
  AssemblerStats stats_;
};

/// Offline assembly of a recorded stream (concatenated packets).
std::vector<LidarScan> assemble(std::span<const std::uint8_t> stream,
                                std::shared_ptr<const SensorIntrinsics> intrinsics,
                                AssemblerStats* stats = nullptr);

/// Bounded hand-over queue. A push into a full queue drops the oldest item
/// and counts the drop.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity = 4) : capacity_(capacity == 0 ? 1 : capacity) {}

  void push(T item) {
    {
      std::lock_guard lock(mutex_);
      if (items_.size() == capacity_) {
        items_.pop_front();
        ++dropped_;
      }
      items_.push_back(std::move(item));
    }
    cv_.notify_one();
  }

  /// Waits up to `timeout`; nullopt on timeout or when closed and drained.
  std::optional<T> pop(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    return item;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  bool closed_and_empty() const {
    std::lock_guard lock(mutex_);
    return closed_ && items_.empty();
  }

  std::uint64_t dropped() const {
    std::lock_guard lock(mutex_);
    return dropped_;
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<T> items_;
  std::uint64_t dropped_ = 0;
  bool closed_ = false;
};

struct ListenerStats {
  std::uint64_t datagrams = 0;
  std::uint64_t decode_errors = 0;
  std::uint64_t late_packets = 0;
  std::uint64_t scans_emitted = 0;
  std::uint64_t queue_drops = 0;
  bool beam_count_mismatch = false;  // fatal; the worker stopped
};

/// UDP scan source: one worker thread owns the socket and the assembler and
/// hands finished scans over a BoundedQueue. One datagram is one packet.
class UdpListener {
 public:
  struct Options {
    std::uint16_t port = 0;  // 0 picks an ephemeral port, see bound_port()
    std::size_t queue_capacity = 4;
    int receive_buffer_bytes = 16 << 20;
  };

  /// Binds on 127.0.0.1 / INADDR_ANY (when `any_interface`); throws BindFailure.
  UdpListener(std::shared_ptr<const SensorIntrinsics> intrinsics, Options options,
              bool any_interface = false);
  ~UdpListener();

  UdpListener(const UdpListener&) = delete;
  UdpListener& operator=(const UdpListener&) = delete;

  std::uint16_t bound_port() const noexcept { return port_; }

  /// Next completed scan; nullopt on timeout or once stopped and drained.
  std::optional<LidarScan> next(std::chrono::milliseconds timeout);

  /// Stops the worker, flushes open frames into the queue, closes it.
  void stop();

  ListenerStats stats() const;

 private:
  void run();

  std::shared_ptr<const SensorIntrinsics> intrinsics_;
  int fd_ = -1;
  std::uint16_t port_ = 0;
  BoundedQueue<LidarScan> queue_;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> datagrams_{0};
  std::atomic<std::uint64_t> decode_errors_{0};
  std::atomic<std::uint64_t> late_packets_{0};
  std::atomic<std::uint64_t> scans_emitted_{0};
  std::atomic<bool> beam_count_mismatch_{false};
  std::thread worker_;
};

/// Sends every packet of a recorded stream to 127.0.0.1:port, pacing whole
/// frames at `frame_rate_hz` (<= 0 sends unpaced). Packets whose index is in
/// `skip` are not sent, to inject loss. Returns the number of datagrams sent.
std::size_t replay_udp(std::span<const std::uint8_t> stream, std::uint16_t port,
                       double frame_rate_hz, std::span<const std::size_t> skip = {});

}  // namespace domescan
