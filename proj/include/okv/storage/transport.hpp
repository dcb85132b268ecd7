#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "okv/common/bytes.hpp"
#include "okv/oram/ring_oram.hpp"
#include "okv/storage/server.hpp"

namespace okv {

/// Carries one encoded request frame and returns the encoded response.
/// `tags` annotate the request's ops for a trace tap in tests; they are
/// never put on the wire. Implementations must be thread-safe.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual Bytes roundtrip(const Bytes& request, std::span<const ReadTag> tags = {}) = 0;
};

/// Same message contract as the network path, minus the socket.
class InProcessTransport : public Transport {
 public:
  explicit InProcessTransport(RequestHandler& handler) : handler_(handler) {}
  Bytes roundtrip(const Bytes& request, std::span<const ReadTag> tags = {}) override;

 private:
  RequestHandler& handler_;
};

/// Adds a fixed delay to every round trip, standing in for a WAN link.
class LatencyTransport : public Transport {
 public:
  LatencyTransport(Transport& inner, std::chrono::microseconds delay)
      : inner_(inner), delay_(delay) {}
  Bytes roundtrip(const Bytes& request, std::span<const ReadTag> tags = {}) override;

 private:
  Transport& inner_;
  std::chrono::microseconds delay_;
};

/// Length-prefixed frames over TCP with a pool of connections so that
/// concurrent callers do not serialize on one socket.
class TcpTransport : public Transport {
 public:
  TcpTransport(std::string host, std::uint16_t port);
  ~TcpTransport() override;
  Bytes roundtrip(const Bytes& request, std::span<const ReadTag> tags = {}) override;

 private:
  int acquire();
  void release(int fd);

  std::string host_;
  std::uint16_t port_;
  std::mutex mu_;
  std::vector<int> idle_;
};

class TcpServer {
 public:
  // Port 0 picks a free port; see port().
  TcpServer(RequestHandler& handler, std::string bind_addr, std::uint16_t port);
  ~TcpServer();
  std::uint16_t port() const { return port_; }
  void stop();
  // Blocks until stop() is called from another thread.
  void wait();

 private:
  void accept_loop();
  void serve(int fd);

  RequestHandler& handler_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::thread acceptor_;
  std::mutex mu_;
  std::vector<int> conns_;
  std::vector<std::thread> workers_;
};

void write_frame(int fd, ByteSpan payload);
// Returns false on clean EOF before any byte of the frame.
bool read_frame(int fd, Bytes& out);

}  // namespace okv
