#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "okv/common/bytes.hpp"
#include "okv/crypto/envelope.hpp"
#include "okv/oram/geometry.hpp"

namespace okv {

inline constexpr Key kNoKey = ~Key{0};

struct SlotMeta {
  Key key = kNoKey;  // occupant, only ever set on real-role slots
  bool real_role = false;
  bool valid = true;

  friend bool operator==(const SlotMeta&, const SlotMeta&) = default;
};

/// Proxy-side view of one bucket: its permutation (slot roles and occupants),
/// valid bitmap, reads since the last write, and write version.
struct BucketMeta {
  std::vector<SlotMeta> slots;
  std::uint32_t reads = 0;
  std::uint64_t version = 0;
  WriteStamp stamp;

  std::vector<SlotIndex> valid_slots() const;
  std::uint32_t real_count() const;

  friend bool operator==(const BucketMeta&, const BucketMeta&) = default;
};

struct StashEntry {
  Leaf leaf = 0;
  Bytes value;
  friend bool operator==(const StashEntry&, const StashEntry&) = default;
};

enum class ReadPurpose : std::uint8_t { kAccess = 0, kEvict = 1, kReshuffle = 2 };

/// Annotation carried alongside a physical read. `op` numbers the logical
/// operation (access or evict) within the engine's lifetime.
struct ReadTag {
  ReadPurpose purpose = ReadPurpose::kAccess;
  Leaf leaf = 0;
  std::uint64_t op = 0;
};

/// Everything needed to write one bucket: new metadata plus per-slot
/// plaintexts and IVs. IVs are drawn by the engine so the ciphertexts are a
/// function of the engine's RNG stream, not of who performs the write.
struct BucketImage {
  BucketMeta meta;
  std::vector<Bytes> plaintexts;
  std::vector<Iv> ivs;
};

/// One logical access as recorded in a path log: the leaf and the slot read
/// in each bucket along the path, root first.
struct LoggedAccess {
  Leaf leaf = 0;
  std::vector<SlotIndex> slots;
  friend bool operator==(const LoggedAccess&, const LoggedAccess&) = default;
};

/// How the engine reaches bucket storage. The sequential oracle talks to the
/// server directly; the parallel executor plans, batches, and buffers.
class BucketIo {
 public:
  virtual ~BucketIo() = default;
  // The read phase of an evict path or early reshuffle on `b` begins.
  virtual void begin_rewrite(BucketId, const BucketMeta&, const ReadTag&) {}
  virtual Bytes read_slot(BucketId b, SlotIndex s, const BucketMeta& meta,
                          const ReadTag& tag) = 0;
  virtual void write_bucket(BucketId b, const BucketImage& image) = 0;
};

/// Complete engine state; copyable.
struct OramState {
  TreeGeometry geometry;
  std::map<Key, Leaf> position;
  std::vector<BucketMeta> buckets;
  std::map<Key, StashEntry> stash;
  std::uint64_t access_count = 0;  // drives the evict cadence
  std::uint64_t op_count = 0;
  WriteStamp stamp;
  // Changes since the last checkpoint.
  std::set<Key> dirty_positions;
  std::set<BucketId> dirty_buckets;

  std::uint64_t evict_paths() const { return access_count / geometry.evict_rate; }
};

struct OramStats {
  std::uint64_t evictions = 0;
  std::uint64_t early_reshuffles = 0;
  std::size_t stash_high_water = 0;
};

/// Sequential Ring ORAM. Control flow depends only on metadata and the RNG,
/// never on slot contents, which is what lets a clone plan an epoch's
/// physical reads before any data arrives.
class RingOram {
 public:
  enum class AccessKind { kRead, kWrite };

  RingOram(TreeGeometry geometry, std::size_t value_capacity, CryptoRng rng);
  RingOram(OramState state, std::size_t value_capacity, CryptoRng rng);

  // Writes every bucket once (version 0) with a fresh permutation.
  void initialize(BucketIo& io);

  // Full Ring ORAM access. Reading an unknown key throws NotFound before any
  // physical operation; writing one inserts it under a random path read.
  std::optional<Bytes> access(BucketIo& io, Key key, AccessKind kind,
                              std::optional<Bytes> new_value = std::nullopt);
  // Random-path access with no logical effect (batch padding).
  void dummy_access(BucketIo& io);
  // Places the value in the stash without reading; still counts toward A.
  void dummiless_write(BucketIo& io, Key key, Bytes value);
  void dummy_write(BucketIo& io);
  // Re-issues a logged access during recovery; real blocks hit are remapped.
  void replay_access(BucketIo& io, const LoggedAccess& logged);

  void evict_path(BucketIo& io);
  void early_reshuffle(BucketIo& io, BucketId b);

  // Appends one LoggedAccess per access while set.
  void set_access_log(std::vector<LoggedAccess>* log) { access_log_ = log; }
  void set_stamp(WriteStamp stamp) { state_.stamp = stamp; }
  void reseed(CryptoRng rng);

  bool contains(Key key) const { return state_.position.contains(key); }
  // Value as currently held (stash or tree) is not knowable without I/O; this
  // only reports stash residency.
  const StashEntry* stash_lookup(Key key) const;

  const TreeGeometry& geometry() const { return state_.geometry; }
  const OramState& state() const { return state_; }
  OramState& mutable_state() { return state_; }
  const OramStats& stats() const { return stats_; }
  const CryptoRng& rng() const { return rng_; }
  std::size_t value_capacity() const { return value_capacity_; }

  static Bytes encode_real(Key key, ByteSpan value);

 private:
  Leaf random_leaf() { return static_cast<Leaf>(rng_.uniform(state_.geometry.leaf_count())); }
  SlotIndex random_valid_dummy(const BucketMeta& meta);
  // Reads the path of `leaf`; returns the target's value when it was found
  // in a bucket. `forced` supplies replay slots.
  std::optional<Bytes> read_path(BucketIo& io, Leaf leaf, Key target,
                                 const LoggedAccess* forced, bool remap_hits);
  void read_for_rewrite(BucketIo& io, BucketId b, const ReadTag& tag);
  void write_bucket(BucketIo& io, BucketId b);
  void reshuffle_exhausted(BucketIo& io, Leaf leaf);
  void finish_access(BucketIo& io);
  void check_value(ByteSpan value) const;

  OramState state_;
  std::size_t value_capacity_;
  CryptoRng rng_;
  OramStats stats_;
  std::vector<LoggedAccess>* access_log_ = nullptr;
};

}  // namespace okv
