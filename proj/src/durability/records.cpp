#include "okv/durability/records.hpp"

#include <string>

#include "okv/common/errors.hpp"

namespace okv {
namespace {

void check(bool ok, const char* what) {
  if (!ok) throw IntegrityError(std::string("recovery record: ") + what);
}

}  // namespace

Bytes seal_path_log(const Sealer& sealer, const PathLog& log, const TreeGeometry& g,
                    std::uint32_t batch_size, const Iv& iv) {
  if (log.accesses.size() != batch_size) {
    throw std::logic_error("path log must hold exactly one entry per batch slot");
  }
  ByteWriter ad;
  ad.u64(log.epoch);
  ad.u32(log.batch);
  ByteWriter secret(batch_size * (4 + 2 * g.path_length()));
  for (const auto& a : log.accesses) {
    if (a.slots.size() != g.path_length()) throw std::logic_error("logged path has wrong length");
    secret.u32(a.leaf);
    for (SlotIndex s : a.slots) secret.u16(s);
  }
  return sealer.seal_record(secret.view(), ad.view(), record_id(path_log_key(log.epoch, log.batch)),
                            iv);
}

PathLog open_path_log(const Sealer& sealer, ByteSpan record, std::uint64_t epoch,
                      std::uint32_t batch, const TreeGeometry& g, std::uint32_t batch_size) {
  auto opened = sealer.open_record(record, record_id(path_log_key(epoch, batch)));
  PathLog out;
  try {
    ByteReader ad(opened.associated);
    out.epoch = ad.u64();
    out.batch = ad.u32();
    ad.expect_done();
    check(out.epoch == epoch && out.batch == batch, "path log header mismatch");
    ByteReader r(opened.secret);
    out.accesses.resize(batch_size);
    for (auto& a : out.accesses) {
      a.leaf = r.u32();
      a.slots.resize(g.path_length());
      for (auto& s : a.slots) s = r.u16();
    }
    r.expect_done();
  } catch (const DecodeError&) {
    check(false, "malformed path log");
  }
  return out;
}

Bytes seal_checkpoint(const Sealer& sealer, const Checkpoint& c, const CheckpointLimits& lim,
                      const Iv& iv) {
  const auto& g = lim.geometry;
  if (c.buckets.size() != g.bucket_count()) throw std::logic_error("checkpoint bucket count");
  if (c.positions.size() > lim.position_slots(c.full)) {
    throw std::logic_error("position delta exceeds its padded size");
  }
  if (c.stash.size() > lim.stash_bound) {
    throw std::runtime_error("stash of " + std::to_string(c.stash.size()) +
                             " entries exceeds the configured bound " +
                             std::to_string(lim.stash_bound));
  }
  if (c.committed.size() > lim.max_epoch_txns) throw std::logic_error("too many transactions");

  // Associated data: what the server can already infer from the trace.
  ByteWriter ad;
  ad.u64(c.epoch);
  ad.u8(c.phase);
  ad.u8(c.full ? 1 : 0);
  ad.u8(c.prev ? 1 : 0);
  ad.u64(c.prev ? c.prev->first : 0);
  ad.u8(c.prev ? c.prev->second : 0);
  ad.u64(c.access_count);
  ad.u64(c.op_count);
  for (const auto& b : c.buckets) {
    if (b.slots.size() != g.slots_per_bucket()) throw std::logic_error("bucket slot count");
    ad.u64(b.version);
    ad.u64(b.stamp.epoch);
    ad.u8(b.stamp.phase);
    ad.u32(b.reads);
    std::uint8_t bits = 0;
    for (std::size_t i = 0; i < b.slots.size(); ++i) {
      if (b.slots[i].valid) bits |= static_cast<std::uint8_t>(1u << (i % 8));
      if (i % 8 == 7 || i + 1 == b.slots.size()) {
        ad.u8(bits);
        bits = 0;
      }
    }
  }

  ByteWriter s;
  for (const auto& b : c.buckets) {
    for (const auto& slot : b.slots) {
      s.u8(slot.real_role ? 1 : 0);
      s.u64(slot.key);
    }
  }
  const auto pos_slots = lim.position_slots(c.full);
  s.u32(static_cast<std::uint32_t>(c.positions.size()));
  for (const auto& [k, leaf] : c.positions) {
    s.u64(k);
    s.u32(leaf);
  }
  s.zeros(std::size_t{12} * (pos_slots - c.positions.size()));
  s.u32(static_cast<std::uint32_t>(c.stash.size()));
  const std::size_t entry = 8 + 4 + 4 + lim.value_capacity;
  for (const auto& [k, e] : c.stash) {
    if (e.value.size() > lim.value_capacity) throw std::logic_error("stash value too large");
    s.u64(k);
    s.u32(e.leaf);
    s.u32(static_cast<std::uint32_t>(e.value.size()));
    s.raw(e.value);
    s.zeros(lim.value_capacity - e.value.size());
  }
  s.zeros(entry * (lim.stash_bound - c.stash.size()));
  s.u32(static_cast<std::uint32_t>(c.committed.size()));
  std::vector<std::uint8_t> bitmap((lim.max_epoch_txns + 7) / 8, 0);
  for (std::size_t i = 0; i < c.committed.size(); ++i) {
    if (c.committed[i]) bitmap[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  s.raw(bitmap);
  return sealer.seal_record(s.view(), ad.view(), record_id(checkpoint_key(c.epoch, c.phase)), iv);
}

Checkpoint open_checkpoint(const Sealer& sealer, ByteSpan record, const LogKey& key,
                           const CheckpointLimits& lim) {
  const auto& g = lim.geometry;
  auto opened = sealer.open_record(record, record_id(key));
  Checkpoint c;
  try {
    ByteReader ad(opened.associated);
    c.epoch = ad.u64();
    c.phase = ad.u8();
    c.full = ad.u8() != 0;
    const bool has_prev = ad.u8() != 0;
    const auto pe = ad.u64();
    const auto pp = ad.u8();
    if (has_prev) c.prev = {pe, pp};
    c.access_count = ad.u64();
    c.op_count = ad.u64();
    check(c.epoch == key.counter && c.phase == key.sub, "checkpoint header mismatch");
    c.buckets.resize(g.bucket_count());
    for (auto& b : c.buckets) {
      b.version = ad.u64();
      b.stamp.epoch = ad.u64();
      b.stamp.phase = ad.u8();
      b.reads = ad.u32();
      b.slots.resize(g.slots_per_bucket());
      std::uint8_t bits = 0;
      for (std::size_t i = 0; i < b.slots.size(); ++i) {
        if (i % 8 == 0) bits = ad.u8();
        b.slots[i].valid = (bits >> (i % 8)) & 1u;
      }
    }
    ad.expect_done();

    ByteReader s(opened.secret);
    for (auto& b : c.buckets) {
      for (auto& slot : b.slots) {
        slot.real_role = s.u8() != 0;
        slot.key = s.u64();
      }
    }
    const auto pos_slots = lim.position_slots(c.full);
    const auto npos = s.u32();
    check(npos <= pos_slots, "position count out of range");
    for (std::uint32_t i = 0; i < npos; ++i) {
      const Key k = s.u64();
      c.positions[k] = s.u32();
    }
    s.skip(std::size_t{12} * (pos_slots - npos));
    const auto nstash = s.u32();
    check(nstash <= lim.stash_bound, "stash count out of range");
    const std::size_t entry = 8 + 4 + 4 + lim.value_capacity;
    for (std::uint32_t i = 0; i < nstash; ++i) {
      const Key k = s.u64();
      StashEntry e;
      e.leaf = s.u32();
      const auto len = s.u32();
      check(len <= lim.value_capacity, "stash value length");
      e.value = s.raw_copy(len);
      s.skip(lim.value_capacity - len);
      c.stash[k] = std::move(e);
    }
    s.skip(entry * (lim.stash_bound - nstash));
    const auto ntx = s.u32();
    check(ntx <= lim.max_epoch_txns, "transaction count out of range");
    auto bitmap = s.raw((lim.max_epoch_txns + 7) / 8);
    c.committed.resize(ntx);
    for (std::uint32_t i = 0; i < ntx; ++i) c.committed[i] = (bitmap[i / 8] >> (i % 8)) & 1u;
    s.expect_done();
  } catch (const DecodeError&) {
    check(false, "malformed checkpoint");
  }
  return c;
}

}  // namespace okv
