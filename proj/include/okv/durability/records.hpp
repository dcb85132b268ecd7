#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "okv/crypto/envelope.hpp"
#include "okv/oram/ring_oram.hpp"
#include "okv/storage/protocol.hpp"

namespace okv {

// Record types in the recovery unit. The log key is (type, epoch, sub),
// where sub is the batch index for path logs and the write phase for
// checkpoints.
enum class RecordType : std::uint8_t { kPathLog = 1, kCheckpoint = 2 };

inline LogKey path_log_key(std::uint64_t epoch, std::uint32_t batch) {
  return {static_cast<std::uint8_t>(RecordType::kPathLog), epoch, batch};
}
inline LogKey checkpoint_key(std::uint64_t epoch, std::uint8_t phase) {
  return {static_cast<std::uint8_t>(RecordType::kCheckpoint), epoch, phase};
}
inline FreshnessId record_id(const LogKey& k) { return FreshnessId::log(k.type, k.counter, k.sub); }

struct PathLog {
  std::uint64_t epoch = 0;
  std::uint32_t batch = 0;
  std::vector<LoggedAccess> accesses;
};

Bytes seal_path_log(const Sealer& sealer, const PathLog& log, const TreeGeometry& g,
                    std::uint32_t batch_size, const Iv& iv);
// Throws IntegrityError if the record is not the sealed log of (epoch, batch).
PathLog open_path_log(const Sealer& sealer, ByteSpan record, std::uint64_t epoch,
                      std::uint32_t batch, const TreeGeometry& g, std::uint32_t batch_size);

/// Fixed bounds that make every checkpoint of a class the same length.
struct CheckpointLimits {
  TreeGeometry geometry;
  std::uint32_t delta_positions = 0;  // R*b_read + b_write
  std::uint32_t stash_bound = 0;
  std::uint32_t max_epoch_txns = 0;
  std::size_t value_capacity = 0;

  std::uint32_t position_slots(bool full) const {
    return full ? static_cast<std::uint32_t>(geometry.capacity) : delta_positions;
  }
};

/// Proxy metadata at the end of an epoch. Bucket metadata (permutations,
/// valid bitmaps, versions) and the stash are always complete; positions are
/// complete in a full checkpoint and a delta against the previous one
/// otherwise.
struct Checkpoint {
  std::uint64_t epoch = 0;
  std::uint8_t phase = 0;
  bool full = false;
  std::optional<std::pair<std::uint64_t, std::uint8_t>> prev;
  std::uint64_t access_count = 0;
  std::uint64_t op_count = 0;
  std::vector<BucketMeta> buckets;
  std::map<Key, Leaf> positions;
  std::map<Key, StashEntry> stash;
  std::vector<bool> committed;  // indexed by sequence number - 1

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

Bytes seal_checkpoint(const Sealer& sealer, const Checkpoint& c, const CheckpointLimits& lim,
                      const Iv& iv);
Checkpoint open_checkpoint(const Sealer& sealer, ByteSpan record, const LogKey& key,
                           const CheckpointLimits& lim);

}  // namespace okv
