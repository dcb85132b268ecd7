#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "okv/oram/ring_oram.hpp"

namespace okv {

/// Plaintext bucket storage with no crypto and no server. Tracks which
/// slots were read since each bucket's last write on its own, so it doubles
/// as an independent bucket-invariant checker.
class MemoryBucketIo : public BucketIo {
 public:
  explicit MemoryBucketIo(const TreeGeometry& g);

  Bytes read_slot(BucketId b, SlotIndex s, const BucketMeta& meta, const ReadTag& tag) override;
  void write_bucket(BucketId b, const BucketImage& image) override;

  const std::vector<Bytes>& bucket(BucketId b) const { return slots_.at(b); }
  std::uint64_t reads() const { return reads_; }
  std::uint64_t writes() const { return writes_; }
  std::uint64_t writes_of(BucketId b) const { return per_bucket_writes_.at(b); }

 private:
  std::vector<std::vector<Bytes>> slots_;
  std::vector<std::set<SlotIndex>> read_since_write_;
  std::vector<std::uint64_t> per_bucket_writes_;
  std::uint64_t reads_ = 0;
  std::uint64_t writes_ = 0;
};

}  // namespace okv
