#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "okv/oram/geometry.hpp"

namespace okv {

struct EpochConfig {
  std::uint32_t read_batches = 4;      // R
  std::uint32_t read_batch_size = 16;  // b_read
  std::uint32_t write_batch_size = 16; // b_write
  std::uint64_t delta = 1;             // logical time between batches

  void validate() const;
  std::uint32_t ticks_per_epoch() const { return read_batches + 1; }
};

/// One fired read batch: exactly b_read slots, each a distinct real key or
/// a dummy (nullopt).
struct ReadBatch {
  std::uint32_t index = 0;
  std::vector<std::optional<Key>> slots;

  std::size_t real_count() const;
};

/// Assigns cold reads to the epoch's fixed read batches. Deduplicates keys
/// across the whole epoch and fires batches on a fixed cadence whether or
/// not anything was scheduled.
class BatchManager {
 public:
  explicit BatchManager(EpochConfig cfg);

  // Index of the batch that will fetch `key`, or nullopt when every
  // remaining batch is full.
  std::optional<std::uint32_t> schedule(Key key);
  bool scheduled(Key key) const { return assigned_.contains(key); }

  // Fires the next batch. `cached` reports keys that entered the version
  // cache after they were scheduled; their slots become dummies.
  template <class CachedFn>
  ReadBatch fire(CachedFn&& cached);

  bool reads_done() const { return next_ == cfg_.read_batches; }
  std::uint32_t next_batch() const { return next_; }
  std::uint64_t now() const { return clock_; }
  // Moves the logical clock past the epoch's write batch and starts over.
  void end_epoch();

  const EpochConfig& config() const { return cfg_; }

 private:
  EpochConfig cfg_;
  std::vector<std::vector<Key>> pending_;
  std::map<Key, std::uint32_t> assigned_;
  std::uint32_t next_ = 0;
  std::uint64_t clock_ = 0;
};

template <class CachedFn>
ReadBatch BatchManager::fire(CachedFn&& cached) {
  if (reads_done()) throw std::logic_error("all read batches of the epoch already fired");
  ReadBatch out;
  out.index = next_;
  out.slots.reserve(cfg_.read_batch_size);
  for (Key k : pending_[next_]) {
    if (cached(k)) {
      out.slots.push_back(std::nullopt);
    } else {
      out.slots.push_back(k);
    }
  }
  out.slots.resize(cfg_.read_batch_size, std::nullopt);
  ++next_;
  clock_ += cfg_.delta;
  return out;
}

}  // namespace okv
