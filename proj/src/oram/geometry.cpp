#include "okv/oram/geometry.hpp"

#include <bit>
#include <string>

#include "okv/common/errors.hpp"

namespace okv {

void TreeGeometry::validate() const {
  if (levels == 0 || levels > 24) throw ConfigError("levels must be in [1, 24]");
  if (real_slots == 0) throw ConfigError("Z must be positive");
  if (dummy_slots == 0) throw ConfigError("S must be positive");
  if (evict_rate == 0) throw ConfigError("A must be positive");
  if (slots_per_bucket() > 0xFFFF) throw ConfigError("too many slots per bucket");
  if (capacity == 0) throw ConfigError("N must be positive");
  // Ring ORAM sizing keeps the tree at most half full of real objects.
  const std::uint64_t limit = std::uint64_t{real_slots} * leaf_count();
  if (capacity > limit) {
    throw ConfigError("capacity N=" + std::to_string(capacity) + " exceeds Z*2^L=" +
                      std::to_string(limit));
  }
}

std::vector<BucketId> TreeGeometry::path(Leaf leaf) const {
  std::vector<BucketId> out(path_length());
  for (std::uint32_t d = 0; d <= levels; ++d) out[d] = bucket_at(leaf, d);
  return out;
}

std::uint32_t TreeGeometry::level_of(BucketId b) const {
  return static_cast<std::uint32_t>(std::bit_width(b + 1u)) - 1;
}

bool TreeGeometry::on_path(BucketId b, Leaf leaf) const {
  const auto d = level_of(b);
  return bucket_at(leaf, d) == b;
}

std::uint32_t reverse_bits(std::uint32_t v, std::uint32_t width) {
  std::uint32_t out = 0;
  for (std::uint32_t i = 0; i < width; ++i) {
    out = (out << 1) | (v & 1u);
    v >>= 1;
  }
  return out;
}

std::uint64_t evictions_touching(BucketId b, std::uint64_t evict_paths) {
  const auto d = static_cast<std::uint32_t>(std::bit_width(b + 1u)) - 1;
  const std::uint32_t index_in_level = b - ((1u << d) - 1);
  // Evict g lands on index bitrev_d(g mod 2^d) at level d.
  const std::uint64_t period = std::uint64_t{1} << d;
  const std::uint64_t residue = reverse_bits(index_in_level, d);
  std::uint64_t count = evict_paths / period;
  if (evict_paths % period > residue) ++count;
  return count;
}

}  // namespace okv
