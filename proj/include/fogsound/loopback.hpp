#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "fogsound/errors.hpp"
#include "fogsound/wire.hpp"

namespace fogsound::loopback {

inline constexpr std::uint16_t kDefaultPort = 7470;

namespace detail {

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      close_fd();
      fd_ = o.fd_;
      o.fd_ = -1;
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close_fd(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void close_fd() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_ = -1;
};

inline void send_all(int fd, const std::uint8_t* data, std::size_t len) {
  std::size_t sent = 0;
  while (sent < len) {
    const ssize_t n = ::send(fd, data + sent, len - sent, MSG_NOSIGNAL);
    if (n <= 0) fail(errc::io_failure, "send failed");
    sent += static_cast<std::size_t>(n);
  }
}

inline bool recv_all(int fd, std::uint8_t* data, std::size_t len) {
  std::size_t got = 0;
  while (got < len) {
    const ssize_t n = ::recv(fd, data + got, len - got, 0);
    if (n == 0) return false;  // peer closed
    if (n < 0) fail(errc::io_failure, "recv failed");
    got += static_cast<std::size_t>(n);
  }
  return true;
}

}  // namespace detail

struct ReceivedRecord {
  std::uint32_t node_id = 0;
  std::size_t bytes = 0;       // encoded message size
  double latency_ms = 0.0;     // first byte to last byte, server clock
};

/// TCP server on localhost enforcing round-robin admission: connections from
/// nodes that are not next in registry order are parked until their turn.
/// One message per connection; the reply closes the exchange.
class LoopbackServer {
 public:
  using Handler = std::function<wire::ServerReply(const wire::WireMessage&)>;

  LoopbackServer(const wire::NodeRegistry& registry, Handler handler,
                 std::uint16_t port = kDefaultPort)
      : registry_(registry), handler_(std::move(handler)) {
    if (registry_.empty()) fail(errc::invalid_config, "empty registry");
    listen_ = detail::Socket(::socket(AF_INET, SOCK_STREAM, 0));
    if (!listen_.valid()) fail(errc::bind_failure, "socket() failed");
    int one = 1;
    ::setsockopt(listen_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    if (::bind(listen_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
      fail(errc::bind_failure, "bind to port " + std::to_string(port) + " failed");
    if (::listen(listen_.fd(), 64) != 0)
      fail(errc::bind_failure, "listen failed");
    socklen_t len = sizeof(addr);
    ::getsockname(listen_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  std::uint16_t port() const { return port_; }

  /// Serves exactly expected_messages messages, then returns. Run on its own
  /// thread for concurrent clients.
  void serve(std::size_t expected_messages) {
    std::map<std::uint32_t, Parked> parked;
    wire::RoundRobinScheduler sched(registry_);
    std::size_t handled = 0;
    while (handled < expected_messages) {
      const std::uint32_t turn = sched.current_turn();
      auto it = parked.find(turn);
      if (it != parked.end()) {
        process(it->second);
        parked.erase(it);
        sched.next_grant();
        ++handled;
        continue;
      }
      Parked p = read_one();
      if (p.msg.node_id == turn) {
        process(p);
        sched.next_grant();
        ++handled;
      } else {
        registry_.index_of(p.msg.node_id);  // reject unknown senders
        parked[p.msg.node_id] = std::move(p);
      }
    }
  }

  const std::vector<ReceivedRecord>& received() const { return received_; }
  std::size_t total_bytes() const { return total_bytes_; }
  const std::vector<std::uint32_t>& grant_order() const { return grant_order_; }

 private:
  struct Parked {
    detail::Socket sock;
    wire::WireMessage msg;
    double latency_ms = 0.0;
  };

  Parked read_one() {
    Parked p;
    p.sock = detail::Socket(::accept(listen_.fd(), nullptr, nullptr));
    if (!p.sock.valid()) fail(errc::io_failure, "accept failed");
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::uint8_t> bytes(wire::kHeaderBytes);
    if (!detail::recv_all(p.sock.fd(), bytes.data(), bytes.size()))
      fail(errc::truncated, "connection closed mid-header");
    const std::uint32_t len = wire::detail::rd_u32be(&bytes[5]);
    if (len > wire::kMaxPayloadBytes)
      fail(errc::length_mismatch, "declared payload exceeds cap");
    bytes.resize(wire::kHeaderBytes + len);
    if (len > 0 && !detail::recv_all(p.sock.fd(), bytes.data() + wire::kHeaderBytes, len))
      fail(errc::truncated, "connection closed mid-payload");
    const auto t1 = std::chrono::steady_clock::now();
    p.latency_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    p.msg = wire::decode(bytes);
    return p;
  }

  void process(Parked& p) {
    const wire::ServerReply reply = handler_(p.msg);
    const auto out = wire::encode_reply(reply);
    detail::send_all(p.sock.fd(), out.data(), out.size());
    received_.push_back({p.msg.node_id, p.msg.encoded_size(), p.latency_ms});
    total_bytes_ += p.msg.encoded_size();
    grant_order_.push_back(p.msg.node_id);
  }

  wire::NodeRegistry registry_;
  Handler handler_;
  detail::Socket listen_;
  std::uint16_t port_ = 0;
  std::vector<ReceivedRecord> received_;
  std::size_t total_bytes_ = 0;
  std::vector<std::uint32_t> grant_order_;
};

/// Sends one message and waits for the reply. A fresh connection per message
/// keeps the exchange aligned with the server's one-at-a-time admission.
inline wire::ServerReply send_message(const std::string& host,
                                      std::uint16_t port,
                                      const wire::WireMessage& msg,
                                      int timeout_ms = 30000) {
  detail::Socket sock(::socket(AF_INET, SOCK_STREAM, 0));
  if (!sock.valid()) fail(errc::connect_failure, "socket() failed");
  timeval tv{timeout_ms / 1000, (timeout_ms % 1000) * 1000};
  ::setsockopt(sock.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    fail(errc::connect_failure, "bad address: " + host);
  if (::connect(sock.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    fail(errc::connect_failure, "connect to " + host + ":" + std::to_string(port) + " failed");
  const auto bytes = wire::encode(msg);
  detail::send_all(sock.fd(), bytes.data(), bytes.size());
  std::vector<std::uint8_t> reply(wire::kReplyBytes);
  if (!detail::recv_all(sock.fd(), reply.data(), reply.size()))
    fail(errc::timeout, "no reply before the connection closed");
  return wire::decode_reply(reply);
}

}  // namespace fogsound::loopback
