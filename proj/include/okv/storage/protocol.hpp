#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "okv/common/bytes.hpp"
#include "okv/oram/geometry.hpp"

namespace okv {

// Wire protocol between proxy and storage. Every frame on a byte stream is a
// u32 little-endian length followed by an encoded Request or Response.
enum class MsgType : std::uint8_t {
  kReadSlot = 1,
  kWriteBucket = 2,
  kRollback = 3,
  kLogAppend = 4,
  kLogRead = 5,
  kGc = 6,
  kReadBucket = 7,
  kBatch = 8,
};

enum class Status : std::uint8_t { kOk = 0, kNotFound = 1, kProtocolError = 2 };

struct LogKey {
  std::uint8_t type = 0;
  std::uint64_t counter = 0;
  std::uint32_t sub = 0;
  auto operator<=>(const LogKey&) const = default;
};

// Names a tree state by the evict-path count plus early reshuffles per
// bucket; the server derives each bucket's version from it.
struct VersionTarget {
  std::uint64_t evict_paths = 0;
  std::vector<std::pair<BucketId, std::uint64_t>> reshuffles;  // sparse, nonzero only
  std::uint64_t version_of(BucketId b) const;
};

struct ReadSlotReq {
  BucketId bucket = 0;
  SlotIndex slot = 0;
};
struct WriteBucketReq {
  BucketId bucket = 0;
  std::uint64_t version = 0;
  std::vector<Bytes> slots;
};
struct RollbackReq {
  VersionTarget target;
};
struct LogAppendReq {
  LogKey key;
  Bytes record;
};
struct LogReadReq {
  LogKey key;
};
struct GcReq {
  VersionTarget keep_from;       // bucket versions below this are dropped
  std::uint64_t log_horizon = 0;  // log records with counter below are dropped
};
struct ReadBucketReq {
  BucketId bucket = 0;
};

using Op = std::variant<ReadSlotReq, WriteBucketReq, RollbackReq, LogAppendReq, LogReadReq,
                        GcReq, ReadBucketReq>;

MsgType op_type(const Op& op);

struct Request {
  std::uint64_t id = 0;
  bool batch = false;  // a non-batch request carries exactly one op
  std::vector<Op> ops;
};

struct OpResult {
  Status status = Status::kOk;
  std::uint64_t version = 0;  // bucket version served, where applicable
  std::vector<Bytes> items;   // envelope(s), log record, or error text
};

struct Response {
  std::uint64_t id = 0;
  std::vector<OpResult> results;
};

Bytes encode_request(const Request& r);
Request decode_request(ByteSpan b);
Bytes encode_response(const Response& r);
Response decode_response(ByteSpan b);

inline constexpr std::uint32_t kMaxFrame = 1u << 28;

}  // namespace okv
