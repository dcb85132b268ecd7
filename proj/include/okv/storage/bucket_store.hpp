#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "okv/common/bytes.hpp"
#include "okv/storage/protocol.hpp"

namespace okv {

/// Copy-on-write bucket storage. Every write creates a new version; the
/// current index can be moved back to any retained version.
class VersionedBucketStore {
 public:
  // With a directory, each version is also kept as one file and the store
  // reloads from it on construction.
  explicit VersionedBucketStore(std::optional<std::filesystem::path> dir = std::nullopt);

  struct SlotRead {
    std::uint64_t version;
    Bytes envelope;
  };
  SlotRead read_slot(BucketId b, SlotIndex s) const;
  std::optional<Bytes> read_slot_at(BucketId b, SlotIndex s, std::uint64_t version) const;
  std::pair<std::uint64_t, std::vector<Bytes>> read_bucket(BucketId b) const;
  // Newest retained version strictly below the current one.
  std::optional<std::uint64_t> previous_version(BucketId b) const;

  // Accepts the first write of a bucket at any version, later writes only
  // at versions above the current one.
  void write(BucketId b, std::uint64_t version, std::vector<Bytes> slots);
  // All-or-nothing: fails without changes if any target is missing.
  void rollback(const VersionTarget& target);
  void gc(const VersionTarget& keep_from);

  std::optional<std::uint64_t> current_version(BucketId b) const;
  std::size_t retained_versions() const;
  std::map<BucketId, std::vector<Bytes>> snapshot() const;

 private:
  struct Stored {
    std::map<std::uint64_t, std::vector<Bytes>> versions;
    std::optional<std::uint64_t> current;
  };
  const Stored& get(BucketId b) const;
  std::filesystem::path file_for(BucketId b, std::uint64_t v) const;
  void persist(BucketId b, std::uint64_t v, const std::vector<Bytes>& slots) const;
  void unpersist(BucketId b, std::uint64_t v) const;
  void load();

  std::unordered_map<BucketId, Stored> buckets_;
  std::optional<std::filesystem::path> dir_;
};

/// Append-only log of path logs and checkpoints, keyed by
/// (record type, counter, sub-counter).
class RecoveryUnit {
 public:
  explicit RecoveryUnit(std::optional<std::filesystem::path> file = std::nullopt);

  // Re-appending identical bytes under an existing key is a no-op; different
  // bytes are a protocol error.
  void append(const LogKey& key, Bytes record);
  std::optional<Bytes> read(const LogKey& key) const;
  void gc(std::uint64_t horizon);
  std::size_t size() const { return records_.size(); }
  // Newest key of the given type, if any.
  std::optional<LogKey> newest(std::uint8_t type) const;
  // Any record of `type` other than `key`, preferring the closest older one.
  std::optional<Bytes> other_than(const LogKey& key) const;

 private:
  void rewrite_file() const;
  std::map<LogKey, Bytes> records_;
  std::optional<std::filesystem::path> file_;
};

}  // namespace okv
