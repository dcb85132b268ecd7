#include "okv/storage/client.hpp"

#include "okv/common/errors.hpp"

namespace okv {
namespace {

void check_ok(const OpResult& r) {
  if (r.status == Status::kOk) return;
  const std::string msg = r.items.empty() ? "storage error" : to_string(r.items.front());
  throw ProtocolError(msg);
}

}  // namespace

std::vector<OpResult> StorageClient::call(std::vector<Op> ops, bool batch,
                                          std::span<const ReadTag> tags) {
  Request req;
  req.id = next_id_.fetch_add(1);
  req.batch = batch;
  req.ops = std::move(ops);
  const Bytes reply = transport_.roundtrip(encode_request(req), tags);
  round_trips_.fetch_add(1);
  Response resp;
  try {
    resp = decode_response(reply);
  } catch (const DecodeError& e) {
    throw ProtocolError(std::string("malformed response: ") + e.what());
  }
  if (resp.id != req.id) throw ProtocolError("response correlation id mismatch");
  if (resp.results.size() != req.ops.size()) throw ProtocolError("response op count mismatch");
  return std::move(resp.results);
}

OpResult StorageClient::call_one(Op op) {
  std::vector<Op> ops;
  ops.push_back(std::move(op));
  return std::move(call(std::move(ops), false, {}).front());
}

StorageClient::SlotFetch StorageClient::read_slot(BucketId b, SlotIndex s, const ReadTag* tag) {
  std::vector<Op> ops{ReadSlotReq{b, s}};
  auto tags = tag ? std::span<const ReadTag>(tag, 1) : std::span<const ReadTag>{};
  auto res = std::move(call(std::move(ops), false, tags).front());
  check_ok(res);
  if (res.items.size() != 1) throw ProtocolError("read_slot reply must carry one envelope");
  return {res.version, std::move(res.items.front())};
}

std::vector<StorageClient::SlotFetch> StorageClient::read_slots(
    std::span<const ReadSlotReq> reads, std::span<const ReadTag> tags) {
  std::vector<Op> ops(reads.begin(), reads.end());
  auto results = call(std::move(ops), true, tags);
  std::vector<SlotFetch> out;
  out.reserve(results.size());
  for (auto& r : results) {
    check_ok(r);
    if (r.items.size() != 1) throw ProtocolError("read_slot reply must carry one envelope");
    out.push_back({r.version, std::move(r.items.front())});
  }
  return out;
}

void StorageClient::write_bucket(WriteBucketReq w) { check_ok(call_one(std::move(w))); }

void StorageClient::write_buckets(std::vector<WriteBucketReq> ws) {
  std::vector<Op> ops;
  ops.reserve(ws.size());
  for (auto& w : ws) ops.push_back(std::move(w));
  for (const auto& r : call(std::move(ops), true, {})) check_ok(r);
}

std::pair<std::uint64_t, std::vector<Bytes>> StorageClient::read_bucket(BucketId b) {
  auto r = call_one(ReadBucketReq{b});
  check_ok(r);
  return {r.version, std::move(r.items)};
}

void StorageClient::rollback(VersionTarget target) {
  check_ok(call_one(RollbackReq{std::move(target)}));
}

void StorageClient::gc(VersionTarget keep_from, std::uint64_t log_horizon) {
  check_ok(call_one(GcReq{std::move(keep_from), log_horizon}));
}

void StorageClient::log_append(const LogKey& key, Bytes record) {
  check_ok(call_one(LogAppendReq{key, std::move(record)}));
}

std::optional<Bytes> StorageClient::log_read(const LogKey& key) {
  auto r = call_one(LogReadReq{key});
  if (r.status == Status::kNotFound) return std::nullopt;
  check_ok(r);
  if (r.items.size() != 1) throw ProtocolError("log_read reply must carry one record");
  return std::move(r.items.front());
}

}  // namespace okv
