#pragma once

#include <filesystem>
#include <optional>
#include <shared_mutex>

#include "okv/storage/bucket_store.hpp"
#include "okv/storage/protocol.hpp"

namespace okv {

class RequestHandler {
 public:
  virtual ~RequestHandler() = default;
  virtual Response handle(const Request& req) = 0;
};

/// The untrusted storage service. It only ever sees envelopes and sealed
/// records, so nothing it does depends on plaintext.
class StorageServer : public RequestHandler {
 public:
  // With a directory, buckets live under dir/buckets and the log in dir/log.
  explicit StorageServer(std::optional<std::filesystem::path> dir = std::nullopt);

  Response handle(const Request& req) override;
  OpResult apply(const Op& op);

  // Direct access for tests and the malicious layer.
  const VersionedBucketStore& buckets() const { return buckets_; }
  const RecoveryUnit& log() const { return log_; }
  std::shared_mutex& mutex() const { return mu_; }

 private:
  mutable std::shared_mutex mu_;
  VersionedBucketStore buckets_;
  RecoveryUnit log_;
};

}  // namespace okv
