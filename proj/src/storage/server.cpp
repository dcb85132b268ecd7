#include "okv/storage/server.hpp"

#include <mutex>

#include "okv/common/errors.hpp"

namespace okv {
namespace {

OpResult error(Status s, const std::string& msg) {
  OpResult r;
  r.status = s;
  r.items.push_back(to_bytes(msg));
  return r;
}

}  // namespace

StorageServer::StorageServer(std::optional<std::filesystem::path> dir)
    : buckets_(dir ? std::optional(*dir / "buckets") : std::nullopt),
      log_(dir ? std::optional(*dir / "log") : std::nullopt) {}

OpResult StorageServer::apply(const Op& op) {
  try {
    return std::visit(
        [this](const auto& o) -> OpResult {
          using T = std::decay_t<decltype(o)>;
          OpResult r;
          if constexpr (std::is_same_v<T, ReadSlotReq>) {
            std::shared_lock lock(mu_);
            auto got = buckets_.read_slot(o.bucket, o.slot);
            r.version = got.version;
            r.items.push_back(std::move(got.envelope));
          } else if constexpr (std::is_same_v<T, ReadBucketReq>) {
            std::shared_lock lock(mu_);
            auto [v, slots] = buckets_.read_bucket(o.bucket);
            r.version = v;
            r.items = std::move(slots);
          } else if constexpr (std::is_same_v<T, LogReadReq>) {
            std::shared_lock lock(mu_);
            auto rec = log_.read(o.key);
            if (!rec) return error(Status::kNotFound, "no such log record");
            r.items.push_back(std::move(*rec));
          } else if constexpr (std::is_same_v<T, WriteBucketReq>) {
            std::unique_lock lock(mu_);
            buckets_.write(o.bucket, o.version, o.slots);
            r.version = o.version;
          } else if constexpr (std::is_same_v<T, RollbackReq>) {
            std::unique_lock lock(mu_);
            buckets_.rollback(o.target);
          } else if constexpr (std::is_same_v<T, LogAppendReq>) {
            std::unique_lock lock(mu_);
            log_.append(o.key, o.record);
          } else {
            std::unique_lock lock(mu_);
            buckets_.gc(o.keep_from);
            log_.gc(o.log_horizon);
          }
          return r;
        },
        op);
  } catch (const ProtocolError& e) {
    return error(Status::kProtocolError, e.what());
  }
}

Response StorageServer::handle(const Request& req) {
  Response resp;
  resp.id = req.id;
  resp.results.reserve(req.ops.size());
  for (const auto& op : req.ops) resp.results.push_back(apply(op));
  return resp;
}

}  // namespace okv
