#include "okv/oram/ring_oram.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "okv/common/errors.hpp"

namespace okv {
namespace {

Bytes decode_real(ByteSpan plaintext, Key expected) {
  if (plaintext.size() < 8) throw IntegrityError("real slot plaintext too short");
  ByteReader r(plaintext);
  if (r.u64() != expected) throw IntegrityError("slot holds an unexpected key");
  return r.raw_copy(r.remaining());
}

}  // namespace

std::vector<SlotIndex> BucketMeta::valid_slots() const {
  std::vector<SlotIndex> out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].valid) out.push_back(static_cast<SlotIndex>(i));
  }
  return out;
}

std::uint32_t BucketMeta::real_count() const {
  return static_cast<std::uint32_t>(
      std::count_if(slots.begin(), slots.end(), [](const SlotMeta& s) { return s.key != kNoKey; }));
}

RingOram::RingOram(TreeGeometry geometry, std::size_t value_capacity, CryptoRng rng)
    : value_capacity_(value_capacity), rng_(std::move(rng)) {
  geometry.validate();
  state_.geometry = geometry;
  state_.buckets.resize(geometry.bucket_count());
}

RingOram::RingOram(OramState state, std::size_t value_capacity, CryptoRng rng)
    : state_(std::move(state)), value_capacity_(value_capacity), rng_(std::move(rng)) {
  state_.geometry.validate();
  if (state_.buckets.size() != state_.geometry.bucket_count()) {
    throw ConfigError("restored state does not match geometry");
  }
}

Bytes RingOram::encode_real(Key key, ByteSpan value) {
  ByteWriter w(8 + value.size());
  w.u64(key);
  w.raw(value);
  return w.take();
}

const StashEntry* RingOram::stash_lookup(Key key) const {
  auto it = state_.stash.find(key);
  return it == state_.stash.end() ? nullptr : &it->second;
}

void RingOram::check_value(ByteSpan value) const {
  if (value.size() > value_capacity_) {
    throw ConfigError("value of " + std::to_string(value.size()) + " bytes exceeds capacity " +
                      std::to_string(value_capacity_));
  }
}

void RingOram::initialize(BucketIo& io) {
  const auto& g = state_.geometry;
  for (BucketId b = 0; b < g.bucket_count(); ++b) {
    BucketImage img;
    img.meta.slots.resize(g.slots_per_bucket());
    for (std::uint32_t i = 0; i < g.real_slots; ++i) img.meta.slots[i].real_role = true;
    std::shuffle(img.meta.slots.begin(), img.meta.slots.end(), rng_);
    img.meta.version = 0;
    img.meta.stamp = state_.stamp;
    img.plaintexts.assign(g.slots_per_bucket(), Bytes{});
    img.ivs.resize(g.slots_per_bucket());
    for (auto& iv : img.ivs) iv = rng_.iv();
    state_.buckets[b] = img.meta;
    state_.dirty_buckets.insert(b);
    io.write_bucket(b, img);
  }
}

SlotIndex RingOram::random_valid_dummy(const BucketMeta& meta) {
  std::vector<SlotIndex> candidates;
  for (std::size_t i = 0; i < meta.slots.size(); ++i) {
    const auto& s = meta.slots[i];
    if (!s.real_role && s.valid) candidates.push_back(static_cast<SlotIndex>(i));
  }
  if (candidates.empty()) {
    throw std::logic_error("no valid dummy slot; early reshuffle cadence violated");
  }
  return candidates[rng_.uniform(candidates.size())];
}

std::optional<Bytes> RingOram::read_path(BucketIo& io, Leaf leaf, Key target,
                                         const LoggedAccess* forced, bool remap_hits) {
  const auto& g = state_.geometry;
  const auto path = g.path(leaf);
  const ReadTag tag{ReadPurpose::kAccess, leaf, state_.op_count++};
  LoggedAccess record{leaf, {}};
  record.slots.reserve(path.size());
  std::optional<Bytes> found;

  for (std::uint32_t d = 0; d < path.size(); ++d) {
    const BucketId b = path[d];
    auto& meta = state_.buckets[b];
    SlotIndex slot = 0;
    bool chosen = false;
    if (forced != nullptr) {
      // Between rewrites a bucket only sees access reads, and those are the
      // logged ones, so every logged slot is still unread here even where
      // the bucket was re-permuted since.
      slot = forced->slots.at(d);
      if (slot >= meta.slots.size() || !meta.slots[slot].valid) {
        throw IntegrityError("path log names a slot that is not readable");
      }
      chosen = true;
    } else if (target != kNoKey) {
      for (std::size_t i = 0; i < meta.slots.size(); ++i) {
        if (meta.slots[i].key == target && meta.slots[i].valid) {
          slot = static_cast<SlotIndex>(i);
          chosen = true;
          break;
        }
      }
    }
    if (!chosen) slot = random_valid_dummy(meta);

    Bytes plaintext = io.read_slot(b, slot, meta, tag);
    auto& sm = meta.slots[slot];
    sm.valid = false;
    ++meta.reads;
    state_.dirty_buckets.insert(b);
    if (sm.key != kNoKey) {
      const Key occupant = sm.key;
      Bytes value = decode_real(plaintext, occupant);
      sm.key = kNoKey;
      if (occupant == target) {
        found = std::move(value);
      } else if (remap_hits) {
        const Leaf nl = random_leaf();
        state_.position[occupant] = nl;
        state_.dirty_positions.insert(occupant);
        state_.stash[occupant] = StashEntry{nl, std::move(value)};
      } else {
        throw std::logic_error("read a real slot that is not the access target");
      }
    }
    record.slots.push_back(slot);
  }
  if (access_log_ != nullptr) access_log_->push_back(std::move(record));
  return found;
}

void RingOram::reshuffle_exhausted(BucketIo& io, Leaf leaf) {
  for (BucketId b : state_.geometry.path(leaf)) {
    if (state_.buckets[b].reads >= state_.geometry.dummy_slots) early_reshuffle(io, b);
  }
}

void RingOram::finish_access(BucketIo& io) {
  ++state_.access_count;
  if (state_.access_count % state_.geometry.evict_rate == 0) evict_path(io);
  stats_.stash_high_water = std::max(stats_.stash_high_water, state_.stash.size());
}

std::optional<Bytes> RingOram::access(BucketIo& io, Key key, AccessKind kind,
                                      std::optional<Bytes> new_value) {
  if (new_value) check_value(*new_value);
  const bool known = state_.position.contains(key);
  if (!known && kind == AccessKind::kRead) throw NotFound("key not in position map");
  if (!known && state_.position.size() >= state_.geometry.capacity) {
    throw ConfigError("ORAM capacity exhausted");
  }

  const Leaf leaf = known ? state_.position.at(key) : random_leaf();
  auto found = read_path(io, leaf, known ? key : kNoKey, nullptr, false);
  Bytes value;
  if (found) {
    value = std::move(*found);
  } else if (known) {
    auto it = state_.stash.find(key);
    if (it == state_.stash.end()) throw std::logic_error("path invariant violated");
    value = it->second.value;
  }
  std::optional<Bytes> result = value;
  if (kind == AccessKind::kWrite) value = new_value.value_or(Bytes{});

  const Leaf nl = random_leaf();
  state_.position[key] = nl;
  state_.dirty_positions.insert(key);
  state_.stash[key] = StashEntry{nl, std::move(value)};
  reshuffle_exhausted(io, leaf);
  finish_access(io);
  return result;
}

void RingOram::dummy_access(BucketIo& io) {
  const Leaf leaf = random_leaf();
  read_path(io, leaf, kNoKey, nullptr, false);
  reshuffle_exhausted(io, leaf);
  finish_access(io);
}

void RingOram::dummiless_write(BucketIo& io, Key key, Bytes value) {
  check_value(value);
  auto pos = state_.position.find(key);
  if (pos == state_.position.end()) {
    if (state_.position.size() >= state_.geometry.capacity) {
      throw ConfigError("ORAM capacity exhausted");
    }
  } else if (!state_.stash.contains(key)) {
    // The stale copy stays on the server but is forgotten by the metadata;
    // its slot now counts as an empty real slot.
    for (BucketId b : state_.geometry.path(pos->second)) {
      for (auto& s : state_.buckets[b].slots) {
        if (s.key == key) {
          s.key = kNoKey;
          state_.dirty_buckets.insert(b);
        }
      }
    }
  }
  const Leaf nl = random_leaf();
  state_.position[key] = nl;
  state_.dirty_positions.insert(key);
  state_.stash[key] = StashEntry{nl, std::move(value)};
  finish_access(io);
}

void RingOram::dummy_write(BucketIo& io) { finish_access(io); }

void RingOram::reseed(CryptoRng rng) { rng_ = std::move(rng); }

void RingOram::replay_access(BucketIo& io, const LoggedAccess& logged) {
  if (logged.slots.size() != state_.geometry.path_length() ||
      logged.leaf >= state_.geometry.leaf_count()) {
    throw IntegrityError("malformed logged access");
  }
  read_path(io, logged.leaf, kNoKey, &logged, true);
  reshuffle_exhausted(io, logged.leaf);
  finish_access(io);
}

void RingOram::read_for_rewrite(BucketIo& io, BucketId b, const ReadTag& tag) {
  auto& meta = state_.buckets[b];
  io.begin_rewrite(b, meta, tag);
  std::vector<SlotIndex> reals, fillers;
  for (std::size_t i = 0; i < meta.slots.size(); ++i) {
    const auto& s = meta.slots[i];
    if (!s.valid) continue;
    (s.key != kNoKey ? reals : fillers).push_back(static_cast<SlotIndex>(i));
  }
  // Z reads total: every valid real plus random fillers.
  const std::size_t need = state_.geometry.real_slots - std::min<std::size_t>(
                                                            reals.size(), state_.geometry.real_slots);
  std::shuffle(fillers.begin(), fillers.end(), rng_);
  fillers.resize(std::min(need, fillers.size()));
  std::vector<SlotIndex> to_read = reals;
  to_read.insert(to_read.end(), fillers.begin(), fillers.end());
  std::sort(to_read.begin(), to_read.end());

  for (SlotIndex s : to_read) {
    Bytes plaintext = io.read_slot(b, s, meta, tag);
    auto& sm = meta.slots[s];
    sm.valid = false;
    ++meta.reads;
    if (sm.key != kNoKey) {
      const Key k = sm.key;
      state_.stash[k] = StashEntry{state_.position.at(k), decode_real(plaintext, k)};
      sm.key = kNoKey;
    }
  }
}

void RingOram::write_bucket(BucketIo& io, BucketId b) {
  const auto& g = state_.geometry;
  std::vector<Key> chosen;
  for (const auto& [key, entry] : state_.stash) {
    if (chosen.size() == g.real_slots) break;
    if (g.on_path(b, entry.leaf)) chosen.push_back(key);
  }

  BucketImage img;
  img.meta.slots.resize(g.slots_per_bucket());
  for (std::uint32_t i = 0; i < g.real_slots; ++i) img.meta.slots[i].real_role = true;
  std::shuffle(img.meta.slots.begin(), img.meta.slots.end(), rng_);
  img.meta.version = state_.buckets[b].version + 1;
  img.meta.stamp = state_.stamp;
  img.plaintexts.assign(g.slots_per_bucket(), Bytes{});
  img.ivs.resize(g.slots_per_bucket());

  std::size_t next = 0;
  for (std::size_t i = 0; i < img.meta.slots.size() && next < chosen.size(); ++i) {
    auto& s = img.meta.slots[i];
    if (!s.real_role) continue;
    const Key k = chosen[next++];
    s.key = k;
    auto node = state_.stash.extract(k);
    img.plaintexts[i] = encode_real(k, node.mapped().value);
  }
  for (auto& iv : img.ivs) iv = rng_.iv();

  state_.buckets[b] = img.meta;
  state_.dirty_buckets.insert(b);
  io.write_bucket(b, img);
}

void RingOram::evict_path(BucketIo& io) {
  const auto& g = state_.geometry;
  const Leaf target = evict_target(state_.access_count / g.evict_rate - 1, g.levels);
  const ReadTag tag{ReadPurpose::kEvict, target, state_.op_count++};
  const auto path = g.path(target);
  for (BucketId b : path) read_for_rewrite(io, b, tag);
  for (auto it = path.rbegin(); it != path.rend(); ++it) write_bucket(io, *it);
  ++stats_.evictions;
}

void RingOram::early_reshuffle(BucketIo& io, BucketId b) {
  const ReadTag tag{ReadPurpose::kReshuffle, 0, state_.op_count++};
  read_for_rewrite(io, b, tag);
  write_bucket(io, b);
  ++stats_.early_reshuffles;
}

}  // namespace okv
