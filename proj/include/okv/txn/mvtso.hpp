#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "okv/common/bytes.hpp"
#include "okv/oram/geometry.hpp"

namespace okv {

// A transaction is named by its timestamp: epoch in the high 32 bits, a
// per-epoch sequence number in the low 32. Later epochs order after earlier.
using TxnId = std::uint64_t;
inline constexpr TxnId make_ts(std::uint64_t epoch, std::uint32_t seq) {
  return (epoch << 32) | seq;
}
inline constexpr std::uint64_t epoch_of(TxnId t) { return t >> 32; }

enum class TxnStatus { kActive, kCompleted, kCommitted, kAborted };

struct Transaction {
  TxnId ts = 0;
  TxnStatus status = TxnStatus::kActive;
  std::set<Key> read_set, write_set;
  std::set<TxnId> deps;        // writers of uncommitted versions it read
  std::set<TxnId> dependents;  // readers of its uncommitted versions
};

/// One version of a key. Writer 0 is the committed state the epoch started
/// from (fetched through the ORAM); absent value means the key never existed.
struct Version {
  TxnId writer = 0;
  std::optional<Bytes> value;
  TxnId read_marker = 0;
};

struct MvRead {
  bool needs_base = false;  // no visible version yet: fetch the committed value
  std::optional<Bytes> value;
  TxnId writer = 0;
};

/// Multiversioned timestamp ordering over an epoch's version cache. Writes
/// of uncommitted transactions are visible; readers record dependencies on
/// them and abort in cascade if the writer aborts.
class Mvtso {
 public:
  TxnId begin(std::uint64_t epoch);
  // Latest version below the reader's timestamp, or its own write.
  MvRead read(TxnId t, Key k);
  // False when the write aborted the transaction (a later reader already
  // read the version it would supersede).
  bool write(TxnId t, Key k, Bytes value);
  void complete(TxnId t);
  void abort(TxnId t);

  bool has_base(Key k) const;
  void install_base(Key k, std::optional<Bytes> value);

  /// Epoch end: aborts unfinished transactions and everything that depends
  /// on an abort. If the survivors dirty more than `max_dirty_keys` keys,
  /// the lowest-timestamp writers are aborted until they fit. Returns the
  /// fate of every transaction of the epoch.
  std::map<TxnId, bool> resolve_epoch(std::size_t max_dirty_keys);
  // After resolve: the final committed value of each written key.
  std::map<Key, Bytes> committed_writes() const;
  // Drops the version cache and the transaction table.
  void clear();

  TxnStatus status(TxnId t) const;
  std::optional<Transaction> transaction(TxnId t) const;
  std::size_t size() const;

 private:
  using Chain = std::vector<Version>;  // sorted by writer; base (0) first when fetched
  void abort_locked(TxnId t);
  Transaction& txn(TxnId t);
  static bool has_base_locked(const Chain& c) { return !c.empty() && c.front().writer == 0; }

  mutable std::mutex mu_;
  std::map<TxnId, Transaction> txns_;
  std::map<Key, Chain> chains_;
  std::uint64_t epoch_ = 0;
  std::uint32_t next_seq_ = 1;
};

}  // namespace okv
