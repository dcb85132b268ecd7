#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "okv/observer/trace.hpp"
#include "okv/proxy/proxy.hpp"
#include "okv/storage/malicious.hpp"
#include "okv/storage/server.hpp"
#include "okv/storage/transport.hpp"

namespace okv {

struct RemoteStorage {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

struct DeploymentOptions {
  ProxyConfig proxy;
  KeyMaterial keys = KeyMaterial::from_seed(1);
  // Server files and the trusted counter live here; in memory when unset.
  std::optional<std::filesystem::path> data_dir;
  std::optional<RemoteStorage> remote;
  std::optional<std::vector<Attack>> attacks;  // set: malicious server
  std::chrono::microseconds latency{0};
};

/// Proxy plus storage plus the adversary's tap, wired the way the CLI and
/// the tests use them. The trace recorder sees every message the server
/// sees, clocked by the proxy's epoch and tick.
class Deployment {
 public:
  explicit Deployment(DeploymentOptions opts);
  ~Deployment();

  // Drops the current proxy (as a crash would) and opens a new one, which
  // bootstraps an empty store or recovers. `hook` is installed before open.
  Proxy& restart(HookFn hook = {});
  Proxy& proxy();
  bool has_proxy() const { return proxy_ != nullptr; }

  TraceRecorder& trace() { return recorder_; }
  TrustedCounter& counter() { return *counter_; }
  StorageServer* server() { return server_.get(); }
  MaliciousServer* malicious() { return malicious_.get(); }
  const DeploymentOptions& options() const { return opts_; }

 private:
  DeploymentOptions opts_;
  std::unique_ptr<StorageServer> server_;
  std::unique_ptr<MaliciousServer> malicious_;
  std::unique_ptr<Transport> base_;
  std::unique_ptr<LatencyTransport> latency_;
  TraceRecorder recorder_;
  std::unique_ptr<ObservedTransport> tap_;
  std::unique_ptr<TrustedCounter> counter_;
  std::unique_ptr<Proxy> proxy_;
};

}  // namespace okv
