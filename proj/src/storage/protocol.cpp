#include "okv/storage/protocol.hpp"

#include <algorithm>

#include "okv/common/errors.hpp"

namespace okv {
namespace {

void put_target(ByteWriter& w, const VersionTarget& t) {
  w.u64(t.evict_paths);
  w.u32(static_cast<std::uint32_t>(t.reshuffles.size()));
  for (const auto& [b, n] : t.reshuffles) {
    w.u32(b);
    w.u64(n);
  }
}

VersionTarget get_target(ByteReader& r) {
  VersionTarget t;
  t.evict_paths = r.u64();
  const auto n = r.u32();
  if (n > r.remaining() / 12) throw DecodeError("reshuffle table overruns frame");
  t.reshuffles.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const BucketId b = r.u32();
    t.reshuffles.emplace_back(b, r.u64());
  }
  return t;
}

void put_key(ByteWriter& w, const LogKey& k) {
  w.u8(k.type);
  w.u64(k.counter);
  w.u32(k.sub);
}

LogKey get_key(ByteReader& r) {
  LogKey k;
  k.type = r.u8();
  k.counter = r.u64();
  k.sub = r.u32();
  return k;
}

void put_op(ByteWriter& w, const Op& op) {
  w.u8(static_cast<std::uint8_t>(op_type(op)));
  std::visit(
      [&w](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, ReadSlotReq>) {
          w.u32(o.bucket);
          w.u16(o.slot);
        } else if constexpr (std::is_same_v<T, WriteBucketReq>) {
          w.u32(o.bucket);
          w.u64(o.version);
          w.u32(static_cast<std::uint32_t>(o.slots.size()));
          for (const auto& s : o.slots) w.blob(s);
        } else if constexpr (std::is_same_v<T, RollbackReq>) {
          put_target(w, o.target);
        } else if constexpr (std::is_same_v<T, LogAppendReq>) {
          put_key(w, o.key);
          w.blob(o.record);
        } else if constexpr (std::is_same_v<T, LogReadReq>) {
          put_key(w, o.key);
        } else if constexpr (std::is_same_v<T, GcReq>) {
          put_target(w, o.keep_from);
          w.u64(o.log_horizon);
        } else {
          w.u32(o.bucket);
        }
      },
      op);
}

Op get_op(ByteReader& r) {
  switch (static_cast<MsgType>(r.u8())) {
    case MsgType::kReadSlot: {
      ReadSlotReq o;
      o.bucket = r.u32();
      o.slot = r.u16();
      return o;
    }
    case MsgType::kWriteBucket: {
      WriteBucketReq o;
      o.bucket = r.u32();
      o.version = r.u64();
      const auto n = r.u32();
      if (n > r.remaining() / 4) throw DecodeError("slot count overruns frame");
      o.slots.reserve(n);
      for (std::uint32_t i = 0; i < n; ++i) o.slots.push_back(r.blob());
      return o;
    }
    case MsgType::kRollback:
      return RollbackReq{get_target(r)};
    case MsgType::kLogAppend: {
      LogAppendReq o;
      o.key = get_key(r);
      o.record = r.blob();
      return o;
    }
    case MsgType::kLogRead:
      return LogReadReq{get_key(r)};
    case MsgType::kGc: {
      GcReq o;
      o.keep_from = get_target(r);
      o.log_horizon = r.u64();
      return o;
    }
    case MsgType::kReadBucket:
      return ReadBucketReq{r.u32()};
    default:
      throw DecodeError("unknown op type");
  }
}

}  // namespace

std::uint64_t VersionTarget::version_of(BucketId b) const {
  std::uint64_t v = evictions_touching(b, evict_paths);
  auto it = std::lower_bound(reshuffles.begin(), reshuffles.end(), b,
                             [](const auto& e, BucketId x) { return e.first < x; });
  if (it != reshuffles.end() && it->first == b) v += it->second;
  return v;
}

MsgType op_type(const Op& op) {
  static constexpr MsgType kTypes[] = {MsgType::kReadSlot,  MsgType::kWriteBucket,
                                       MsgType::kRollback,  MsgType::kLogAppend,
                                       MsgType::kLogRead,   MsgType::kGc,
                                       MsgType::kReadBucket};
  return kTypes[op.index()];
}

Bytes encode_request(const Request& r) {
  ByteWriter w;
  w.u64(r.id);
  if (r.batch) {
    w.u8(static_cast<std::uint8_t>(MsgType::kBatch));
    w.u32(static_cast<std::uint32_t>(r.ops.size()));
    for (const auto& op : r.ops) put_op(w, op);
  } else {
    if (r.ops.size() != 1) throw ProtocolError("non-batch request must carry one op");
    put_op(w, r.ops.front());
  }
  return w.take();
}

Request decode_request(ByteSpan b) {
  ByteReader r(b);
  Request req;
  req.id = r.u64();
  if (r.remaining() > 0 && b[8] == static_cast<std::uint8_t>(MsgType::kBatch)) {
    r.u8();
    req.batch = true;
    const auto n = r.u32();
    if (n > r.remaining()) throw DecodeError("op count overruns frame");
    req.ops.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) req.ops.push_back(get_op(r));
  } else {
    req.ops.push_back(get_op(r));
  }
  r.expect_done();
  return req;
}

Bytes encode_response(const Response& resp) {
  ByteWriter w;
  w.u64(resp.id);
  w.u32(static_cast<std::uint32_t>(resp.results.size()));
  for (const auto& res : resp.results) {
    w.u8(static_cast<std::uint8_t>(res.status));
    w.u64(res.version);
    w.u32(static_cast<std::uint32_t>(res.items.size()));
    for (const auto& item : res.items) w.blob(item);
  }
  return w.take();
}

Response decode_response(ByteSpan b) {
  ByteReader r(b);
  Response resp;
  resp.id = r.u64();
  const auto n = r.u32();
  if (n > r.remaining()) throw DecodeError("result count overruns frame");
  resp.results.resize(n);
  for (auto& res : resp.results) {
    const auto st = r.u8();
    if (st > static_cast<std::uint8_t>(Status::kProtocolError)) throw DecodeError("bad status");
    res.status = static_cast<Status>(st);
    res.version = r.u64();
    const auto m = r.u32();
    if (m > r.remaining() / 4) throw DecodeError("item count overruns frame");
    res.items.reserve(m);
    for (std::uint32_t i = 0; i < m; ++i) res.items.push_back(r.blob());
  }
  r.expect_done();
  return resp;
}

}  // namespace okv
