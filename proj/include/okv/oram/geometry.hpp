#pragma once

#include <cstdint>
#include <vector>

namespace okv {

using Key = std::uint64_t;
using BucketId = std::uint32_t;
using Leaf = std::uint32_t;
using SlotIndex = std::uint16_t;

/// Shape of a Ring ORAM tree. Levels are numbered from the root (0) down to
/// the leaves (`levels`); buckets use heap order, root = 0.
struct TreeGeometry {
  std::uint32_t levels = 7;       // L
  std::uint32_t real_slots = 4;   // Z
  std::uint32_t dummy_slots = 6;  // S
  std::uint32_t evict_rate = 3;   // A
  std::uint64_t capacity = 256;   // N

  std::uint32_t bucket_count() const { return (2u << levels) - 1; }
  std::uint32_t leaf_count() const { return 1u << levels; }
  std::uint32_t slots_per_bucket() const { return real_slots + dummy_slots; }
  std::uint32_t path_length() const { return levels + 1; }

  // Throws ConfigError when the geometry cannot hold `capacity` objects.
  void validate() const;

  BucketId bucket_at(Leaf leaf, std::uint32_t level) const {
    return ((1u << level) - 1) + (leaf >> (levels - level));
  }
  std::vector<BucketId> path(Leaf leaf) const;
  std::uint32_t level_of(BucketId b) const;
  // True when `leaf`'s path passes through bucket `b`.
  bool on_path(BucketId b, Leaf leaf) const;

  friend bool operator==(const TreeGeometry&, const TreeGeometry&) = default;
};

std::uint32_t reverse_bits(std::uint32_t v, std::uint32_t width);

/// Leaf targeted by the `index`-th evict path: bit-reversed counter order.
inline Leaf evict_target(std::uint64_t index, std::uint32_t levels) {
  const auto mask = (std::uint64_t{1} << levels) - 1;
  return reverse_bits(static_cast<std::uint32_t>(index & mask), levels);
}

/// Number of evict paths among the first `evict_paths` that pass through
/// bucket `b`. Together with early reshuffles this fixes every bucket's
/// write version, which is what makes rollback a pure function.
std::uint64_t evictions_touching(BucketId b, std::uint64_t evict_paths);

}  // namespace okv
