#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "okv/oram/geometry.hpp"

namespace okv {

struct HistoryOp {
  enum class Kind : std::uint8_t { kRead, kWrite };
  Kind kind = Kind::kRead;
  Key key = 0;
  std::optional<std::string> value;  // reads: nullopt when the key was absent
};

/// One transaction as its client saw it. Values written by the workload
/// carry their writer's timestamp, which is how reads name their writer.
struct TxnRecord {
  std::uint64_t ts = 0;
  bool committed = false;
  std::vector<HistoryOp> ops;
  std::uint64_t begin_tick = 0;
  std::uint64_t end_tick = 0;
};

struct SerializabilityVerdict {
  bool acyclic = true;
  bool replay_ok = true;
  bool recoverable = true;  // no committed read of an uncommitted writer
  std::vector<std::string> witness;  // a cycle as "t1 -ww-> t2" steps, or the failing read
  bool ok() const { return acyclic && replay_ok && recoverable; }
};

/// Builds the direct serialization graph over committed transactions (wr,
/// ww and rw edges, versions ordered by writer timestamp) and searches it
/// for a cycle; separately replays the committed transactions in timestamp
/// order against a plain map and compares every read.
SerializabilityVerdict check_serializability(const std::vector<TxnRecord>& history);

// Final committed state: committed writes applied in timestamp order.
std::map<Key, std::string> committed_state(const std::vector<TxnRecord>& history);

}  // namespace okv
