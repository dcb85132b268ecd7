#include "okv/storage/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "okv/common/errors.hpp"

namespace okv {
namespace {

void write_all(int fd, const std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    const auto w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("socket write failed: ") + std::strerror(errno));
    }
    p += w;
    n -= static_cast<std::size_t>(w);
  }
}

// Returns bytes read; short only at EOF.
std::size_t read_all(int fd, std::uint8_t* p, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const auto r = ::recv(fd, p + got, n - got, 0);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("socket read failed: ") + std::strerror(errno));
    }
    if (r == 0) break;
    got += static_cast<std::size_t>(r);
  }
  return got;
}

}  // namespace

void write_frame(int fd, ByteSpan payload) {
  ByteWriter w(4 + payload.size());
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.raw(payload);
  write_all(fd, w.view().data(), w.size());
}

bool read_frame(int fd, Bytes& out) {
  std::uint8_t hdr[4];
  const auto n = read_all(fd, hdr, 4);
  if (n == 0) return false;
  if (n < 4) throw ProtocolError("truncated frame header");
  ByteReader r(ByteSpan(hdr, 4));
  const auto len = r.u32();
  if (len > kMaxFrame) throw ProtocolError("frame too large");
  out.resize(len);
  if (read_all(fd, out.data(), len) != len) throw ProtocolError("truncated frame");
  return true;
}

Bytes InProcessTransport::roundtrip(const Bytes& request, std::span<const ReadTag>) {
  return encode_response(handler_.handle(decode_request(request)));
}

Bytes LatencyTransport::roundtrip(const Bytes& request, std::span<const ReadTag> tags) {
  std::this_thread::sleep_for(delay_);
  return inner_.roundtrip(request, tags);
}

TcpTransport::TcpTransport(std::string host, std::uint16_t port)
    : host_(std::move(host)), port_(port) {
  release(acquire());  // fail fast on a bad address
}

TcpTransport::~TcpTransport() {
  for (int fd : idle_) ::close(fd);
}

int TcpTransport::acquire() {
  {
    std::lock_guard lock(mu_);
    if (!idle_.empty()) {
      int fd = idle_.back();
      idle_.pop_back();
      return fd;
    }
  }
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const auto port = std::to_string(port_);
  if (::getaddrinfo(host_.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr) {
    throw ProtocolError("cannot resolve " + host_);
  }
  int fd = -1;
  for (auto* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw ProtocolError("cannot connect to " + host_ + ":" + port);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return fd;
}

void TcpTransport::release(int fd) {
  std::lock_guard lock(mu_);
  idle_.push_back(fd);
}

Bytes TcpTransport::roundtrip(const Bytes& request, std::span<const ReadTag>) {
  const int fd = acquire();
  try {
    write_frame(fd, request);
    Bytes out;
    if (!read_frame(fd, out)) throw ProtocolError("server closed the connection");
    release(fd);
    return out;
  } catch (...) {
    ::close(fd);
    throw;
  }
}

TcpServer::TcpServer(RequestHandler& handler, std::string bind_addr, std::uint16_t port)
    : handler_(handler) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw ProtocolError("socket() failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, bind_addr.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    throw ConfigError("bad listen address " + bind_addr);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(listen_fd_, 64) != 0) {
    ::close(listen_fd_);
    throw ProtocolError(std::string("cannot listen: ") + std::strerror(errno));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

TcpServer::~TcpServer() { stop(); }

void TcpServer::accept_loop() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (stopping_) break;
      if (errno == EINTR || errno == ECONNABORTED) continue;
      break;
    }
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(mu_);
    conns_.push_back(fd);
    workers_.emplace_back([this, fd] { serve(fd); });
  }
}

void TcpServer::serve(int fd) {
  try {
    Bytes frame;
    while (!stopping_ && read_frame(fd, frame)) {
      Bytes reply = encode_response(handler_.handle(decode_request(frame)));
      write_frame(fd, reply);
    }
  } catch (const std::exception&) {
    // A malformed frame or dropped peer ends this connection only.
  }
  ::shutdown(fd, SHUT_RDWR);
}

void TcpServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mu_);
    for (int fd : conns_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  for (int fd : conns_) ::close(fd);
  conns_.clear();
}

void TcpServer::wait() {
  if (acceptor_.joinable()) acceptor_.join();
}

}  // namespace okv
