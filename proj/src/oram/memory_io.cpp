#include "okv/oram/memory_io.hpp"

#include <stdexcept>
#include <string>

namespace okv {

MemoryBucketIo::MemoryBucketIo(const TreeGeometry& g)
    : slots_(g.bucket_count()),
      read_since_write_(g.bucket_count()),
      per_bucket_writes_(g.bucket_count(), 0) {}

Bytes MemoryBucketIo::read_slot(BucketId b, SlotIndex s, const BucketMeta&, const ReadTag&) {
  if (slots_.at(b).empty()) throw std::logic_error("read of unwritten bucket");
  if (!read_since_write_[b].insert(s).second) {
    throw std::logic_error("slot " + std::to_string(s) + " of bucket " + std::to_string(b) +
                           " read twice between writes");
  }
  ++reads_;
  return slots_[b].at(s);
}

void MemoryBucketIo::write_bucket(BucketId b, const BucketImage& image) {
  slots_.at(b) = image.plaintexts;
  read_since_write_[b].clear();
  ++per_bucket_writes_[b];
  ++writes_;
}

}  // namespace okv
