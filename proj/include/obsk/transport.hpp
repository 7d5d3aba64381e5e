#pragma once

// Framed message transport between the two servers and between client and
// servers. Wire format (little-endian):
//
//   u32 length   -- payload byte count (the 13 header bytes that follow are
//                   not included)
//   u8  msg_type
//   u64 session_id
//   u32 round
//   payload[length]
//
// Two interchangeable implementations: a TCP stream and an in-process
// channel pair with configurable artificial latency and byte counters.

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "obsk/ring.hpp"

namespace obsk {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MsgType : std::uint8_t {
  handshake = 1,
  corr_sync = 2,      // correlation-sync check at session start
  engine_round = 3,   // mask openings inside engine primitives (Beaver/AND e,f)
  shuffle_z2 = 4,
  shuffle_z1 = 5,
  open_batch = 6,     // protocol-level openings (delta-hat, Phi bits, results)
  client_upload = 7,
  client_query = 8,
  client_result = 9,
  error = 10,
};

inline bool known_msg_type(std::uint8_t t) { return t >= 1 && t <= 10; }

struct Frame {
  MsgType type = MsgType::error;
  std::uint64_t session_id = 0;
  std::uint32_t round = 0;
  std::vector<std::uint8_t> payload;

  static constexpr std::size_t kHeaderBytes = 13;  // type + session + round
  std::size_t wire_size() const { return 4 + kHeaderBytes + payload.size(); }
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send_frame(const Frame& f) = 0;
  virtual Frame recv_frame() = 0;
  virtual std::uint64_t bytes_sent() const = 0;
  virtual std::uint64_t bytes_received() const = 0;
};

namespace detail {

inline void encode_frame(const Frame& f, std::vector<std::uint8_t>& out) {
  out.clear();
  out.reserve(f.wire_size());
  put_u32(out, static_cast<std::uint32_t>(f.payload.size()));
  out.push_back(static_cast<std::uint8_t>(f.type));
  put_u64(out, f.session_id);
  put_u32(out, f.round);
  out.insert(out.end(), f.payload.begin(), f.payload.end());
}

inline Frame decode_header(const std::uint8_t* hdr, std::uint32_t payload_len) {
  Frame f;
  if (!known_msg_type(hdr[0])) throw ProtocolError("unknown msg_type on wire");
  f.type = static_cast<MsgType>(hdr[0]);
  f.session_id = get_u64(hdr + 1);
  f.round = get_u32(hdr + 9);
  f.payload.resize(payload_len);
  return f;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// In-process transport pair. Frames become visible to the receiver `delay`
// after being sent, which reproduces a one-way link delay; a lock-step
// request/response exchange therefore costs twice the delay.

class InMemTransport : public Transport {
  struct Channel {
    std::mutex mu;
    std::condition_variable cv;
    struct Item {
      Frame frame;
      std::chrono::steady_clock::time_point ready_at;
    };
    std::deque<Item> q;
    bool closed = false;
  };

 public:
  static std::pair<std::unique_ptr<InMemTransport>, std::unique_ptr<InMemTransport>>
  make_pair(std::chrono::microseconds delay = std::chrono::microseconds(0)) {
    auto a_to_b = std::make_shared<Channel>();
    auto b_to_a = std::make_shared<Channel>();
    auto a = std::unique_ptr<InMemTransport>(new InMemTransport(a_to_b, b_to_a, delay));
    auto b = std::unique_ptr<InMemTransport>(new InMemTransport(b_to_a, a_to_b, delay));
    return {std::move(a), std::move(b)};
  }

  ~InMemTransport() override { close(); }

  void send_frame(const Frame& f) override {
    auto ready = std::chrono::steady_clock::now() + delay_;
    {
      std::lock_guard<std::mutex> lk(tx_->mu);
      if (tx_->closed) throw TransportError("channel closed");
      tx_->q.push_back({f, ready});
    }
    tx_->cv.notify_one();
    bytes_sent_ += f.wire_size();
  }

  Frame recv_frame() override {
    Channel::Item item;
    {
      std::unique_lock<std::mutex> lk(rx_->mu);
      rx_->cv.wait(lk, [&] { return !rx_->q.empty() || rx_->closed; });
      if (rx_->q.empty()) throw TransportError("channel closed by peer");
      item = std::move(rx_->q.front());
      rx_->q.pop_front();
    }
    std::this_thread::sleep_until(item.ready_at);
    bytes_received_ += item.frame.wire_size();
    return std::move(item.frame);
  }

  void close() {
    for (auto* ch : {tx_.get(), rx_.get()}) {
      {
        std::lock_guard<std::mutex> lk(ch->mu);
        ch->closed = true;
      }
      ch->cv.notify_all();
    }
  }

  std::uint64_t bytes_sent() const override { return bytes_sent_; }
  std::uint64_t bytes_received() const override { return bytes_received_; }

 private:
  InMemTransport(std::shared_ptr<Channel> tx, std::shared_ptr<Channel> rx,
                 std::chrono::microseconds delay)
      : tx_(std::move(tx)), rx_(std::move(rx)), delay_(delay) {}

  std::shared_ptr<Channel> tx_, rx_;
  std::chrono::microseconds delay_;
  std::uint64_t bytes_sent_ = 0;
  std::uint64_t bytes_received_ = 0;
};

// ---------------------------------------------------------------------------
// TCP transport.

class SocketTransport : public Transport {
 public:
  explicit SocketTransport(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }

  SocketTransport(const SocketTransport&) = delete;
  SocketTransport& operator=(const SocketTransport&) = delete;

  ~SocketTransport() override {
    if (fd_ >= 0) ::close(fd_);
  }

  static std::unique_ptr<SocketTransport> connect_to(const std::string& host,
                                                     std::uint16_t port,
                                                     int timeout_ms = 5000) {
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
      throw TransportError("cannot resolve " + host);
    int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0) {
      ::freeaddrinfo(res);
      throw TransportError("socket() failed");
    }
    timeval tv{timeout_ms / 1000, (timeout_ms % 1000) * 1000};
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
    ::freeaddrinfo(res);
    if (rc != 0) {
      ::close(fd);
      throw TransportError("cannot connect to " + host + ":" + std::to_string(port));
    }
    // Protocol waits can legitimately be long; only connect is bounded.
    timeval no_to{0, 0};
    ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &no_to, sizeof(no_to));
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &no_to, sizeof(no_to));
    return std::make_unique<SocketTransport>(fd);
  }

  void set_recv_timeout(int timeout_ms) {
    timeval tv{timeout_ms / 1000, (timeout_ms % 1000) * 1000};
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  }

  void send_frame(const Frame& f) override {
    detail::encode_frame(f, scratch_);
    write_all(scratch_.data(), scratch_.size());
    bytes_sent_ += scratch_.size();
  }

  Frame recv_frame() override {
    std::uint8_t head[4 + Frame::kHeaderBytes];
    read_all(head, sizeof(head));
    std::uint32_t len = get_u32(head);
    Frame f = detail::decode_header(head + 4, len);
    if (len > 0) read_all(f.payload.data(), len);
    bytes_received_ += f.wire_size();
    return f;
  }

  std::uint64_t bytes_sent() const override { return bytes_sent_; }
  std::uint64_t bytes_received() const override { return bytes_received_; }

 private:
  void write_all(const std::uint8_t* p, std::size_t n) {
    while (n > 0) {
      ssize_t w = ::send(fd_, p, n, MSG_NOSIGNAL);
      if (w <= 0) throw TransportError("send failed: connection lost");
      p += w;
      n -= static_cast<std::size_t>(w);
    }
  }

  void read_all(std::uint8_t* p, std::size_t n) {
    while (n > 0) {
      ssize_t r = ::recv(fd_, p, n, 0);
      if (r == 0) throw TransportError("connection closed mid-frame");
      if (r < 0) throw TransportError("recv failed");
      p += r;
      n -= static_cast<std::size_t>(r);
    }
  }

  int fd_ = -1;
  std::uint64_t bytes_sent_ = 0;
  std::uint64_t bytes_received_ = 0;
  std::vector<std::uint8_t> scratch_;
};

// Listening socket helper used by the server daemon and tests.
class Listener {
 public:
  explicit Listener(std::uint16_t port, const std::string& bind_addr = "0.0.0.0") {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw TransportError("socket() failed");
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, bind_addr.c_str(), &addr.sin_addr) != 1)
      throw TransportError("bad bind address: " + bind_addr);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      ::close(fd_);
      throw TransportError("cannot bind port " + std::to_string(port));
    }
    if (::listen(fd_, 16) != 0) {
      ::close(fd_);
      throw TransportError("listen() failed");
    }
  }

  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;
  ~Listener() {
    if (fd_ >= 0) ::close(fd_);
  }

  std::uint16_t port() const {
    sockaddr_in addr{};
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    return ntohs(addr.sin_port);
  }

  // Returns nullptr on timeout.
  std::unique_ptr<SocketTransport> accept(int timeout_ms) {
    timeval tv{timeout_ms / 1000, (timeout_ms % 1000) * 1000};
    fd_set set;
    FD_ZERO(&set);
    FD_SET(fd_, &set);
    int rc = ::select(fd_ + 1, &set, nullptr, nullptr, &tv);
    if (rc == 0) return nullptr;
    if (rc < 0) throw TransportError("select() failed");
    int cfd = ::accept(fd_, nullptr, nullptr);
    if (cfd < 0) throw TransportError("accept() failed");
    return std::make_unique<SocketTransport>(cfd);
  }

 private:
  int fd_ = -1;
};

}  // namespace obsk
