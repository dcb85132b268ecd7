#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <vector>

#include "okv/oram/ring_oram.hpp"
#include "okv/storage/transport.hpp"

namespace okv {

enum class EventKind : std::uint8_t {
  kRead = 0,
  kWrite = 1,
  kLogAppend = 2,
  kLogRead = 3,
  kRollback = 4,
  kGc = 5,
  kReadBucket = 6,
};

/// One storage op as the server sees it. `purpose`, `leaf` and `op` are
/// harness annotations taken from the proxy's read tags; they are not part
/// of the wire message (has_tag says whether they are set).
struct TraceEvent {
  std::uint64_t seq = 0;    // global order of recording
  std::uint64_t msg = 0;    // wire message this op travelled in
  std::uint64_t epoch = 0;  // logical clock at the time of the message
  std::uint64_t tick = 0;
  EventKind kind = EventKind::kRead;
  std::uint32_t bucket = 0;
  std::uint32_t slot = 0;
  std::uint64_t version = 0;
  std::uint64_t payload_len = 0;
  std::uint8_t record_type = 0;  // log events
  std::uint64_t counter = 0;     // log counter, or evict paths for rollback/gc
  std::uint32_t sub = 0;
  bool has_tag = false;
  ReadPurpose purpose = ReadPurpose::kAccess;
  Leaf leaf = 0;
  std::uint64_t op = 0;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

using Trace = std::vector<TraceEvent>;

/// Thread-safe ordered sink. The logical clock is advanced by whoever
/// drives batches; the adversary sees the same cadence.
class TraceRecorder {
 public:
  void set_clock(std::uint64_t epoch, std::uint64_t tick) {
    std::lock_guard lock(mu_);
    epoch_ = epoch;
    tick_ = tick;
  }
  void record_message(std::vector<TraceEvent> events);
  Trace snapshot() const;
  Trace take();
  void clear();
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  Trace events_;
  std::uint64_t epoch_ = 0, tick_ = 0, next_seq_ = 0, next_msg_ = 0;
};

/// Passive tap: forwards bytes unchanged and records what crossed the wire.
class ObservedTransport : public Transport {
 public:
  ObservedTransport(Transport& inner, TraceRecorder& sink) : inner_(inner), sink_(sink) {}
  Bytes roundtrip(const Bytes& request, std::span<const ReadTag> tags = {}) override;

 private:
  Transport& inner_;
  TraceRecorder& sink_;
};

// Tab-separated, one event per line, with a header row.
void export_trace(const Trace& trace, std::ostream& out);
Trace import_trace(std::istream& in);

}  // namespace okv
