#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "okv/crypto/envelope.hpp"
#include "okv/oram/ring_oram.hpp"

namespace okv {

/// One step of the sequential oracle's physical behaviour, as recorded by a
/// planning pass. Coordinates only; no payloads.
struct SeqOp {
  enum class Kind : std::uint8_t { kRead, kRewriteBegin, kWrite };
  Kind kind = Kind::kRead;
  BucketId bucket = 0;
  SlotIndex slot = 0;             // kRead
  std::uint64_t version = 0;      // version read (kRead) or written (kWrite)
  WriteStamp stamp;               // stamp of the version read
  ReadTag tag;
  std::vector<SlotIndex> unread;  // kRewriteBegin: valid slots at that point
};

struct PhysicalOp {
  enum class Kind : std::uint8_t { kSlotRead, kBucketWrite, kMetadataUpdate };
  Kind kind = Kind::kSlotRead;
  BucketId bucket = 0;
  SlotIndex slot = 0;
  std::uint64_t version = 0;
  WriteStamp stamp;
  ReadTag tag;
  std::vector<std::size_t> depends_on;
};

/// The physical work of one round (a read batch or a write phase): every
/// slot to fetch from storage and the last write of every bucket touched.
struct EpochPlan {
  std::vector<PhysicalOp> ops;
  std::vector<std::size_t> reads;   // indices of kSlotRead ops
  std::vector<std::size_t> writes;  // indices of kBucketWrite ops, one per bucket

  // Ops grouped so that every op's dependencies sit in an earlier wave.
  std::vector<std::vector<std::size_t>> waves() const;
};

/// Derives the plan from a sequential trace. Buckets in `buffered` were
/// already rewritten earlier in the epoch and are served locally. Evict and
/// reshuffle read phases on a bucket fetched from storage read every slot
/// not yet read, so the plan depends only on trace coordinates.
EpochPlan plan_epoch(const std::vector<SeqOp>& trace, const std::set<BucketId>& buffered);

}  // namespace okv
