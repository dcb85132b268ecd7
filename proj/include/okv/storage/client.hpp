#pragma once

#include <atomic>
#include <optional>
#include <span>
#include <vector>

#include "okv/storage/protocol.hpp"
#include "okv/storage/transport.hpp"

namespace okv {

/// Typed proxy-side view of the storage protocol. Thread-safe as long as the
/// transport is.
class StorageClient {
 public:
  explicit StorageClient(Transport& transport) : transport_(transport) {}

  struct SlotFetch {
    std::uint64_t version = 0;
    Bytes envelope;
  };
  SlotFetch read_slot(BucketId b, SlotIndex s, const ReadTag* tag = nullptr);
  // One BATCH round trip.
  std::vector<SlotFetch> read_slots(std::span<const ReadSlotReq> reads,
                                    std::span<const ReadTag> tags = {});
  void write_bucket(WriteBucketReq w);
  void write_buckets(std::vector<WriteBucketReq> ws);
  std::pair<std::uint64_t, std::vector<Bytes>> read_bucket(BucketId b);

  void rollback(VersionTarget target);
  void gc(VersionTarget keep_from, std::uint64_t log_horizon);
  void log_append(const LogKey& key, Bytes record);
  std::optional<Bytes> log_read(const LogKey& key);

  std::uint64_t round_trips() const { return round_trips_.load(); }

 private:
  std::vector<OpResult> call(std::vector<Op> ops, bool batch, std::span<const ReadTag> tags);
  OpResult call_one(Op op);

  Transport& transport_;
  std::atomic<std::uint64_t> next_id_{1};
  std::atomic<std::uint64_t> round_trips_{0};
};

}  // namespace okv
