#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cstdint>
#include <thread>

#include "obsk/transport.hpp"

using namespace obsk;

namespace {

Frame make_frame(MsgType t, std::uint32_t round, std::vector<std::uint8_t> payload) {
  return Frame{t, 0x1122334455667788ull, round, std::move(payload)};
}

void roundtrip_frames(Transport& a, Transport& b) {
  // Zero-byte payload.
  a.send_frame(make_frame(MsgType::handshake, 0, {}));
  Frame f = b.recv_frame();
  CHECK(f.type == MsgType::handshake);
  CHECK(f.session_id == 0x1122334455667788ull);
  CHECK(f.round == 0);
  CHECK(f.payload.empty());

  // 8 MB payload, bit-identical.
  std::vector<std::uint8_t> big(8u << 20);
  for (std::size_t i = 0; i < big.size(); ++i)
    big[i] = static_cast<std::uint8_t>(i * 2654435761u >> 24);
  b.send_frame(make_frame(MsgType::open_batch, 7, big));
  Frame g = a.recv_frame();
  CHECK(g.round == 7);
  CHECK(g.payload == big);
}

}  // namespace

TEST_CASE("in-memory transport round trips frames", "[transport]") {
  auto [a, b] = InMemTransport::make_pair();
  roundtrip_frames(*a, *b);
}

TEST_CASE("socket transport round trips frames", "[transport]") {
  Listener listener(0, "127.0.0.1");
  std::unique_ptr<SocketTransport> server_side;
  std::thread t([&] { server_side = listener.accept(2000); });
  auto client_side = SocketTransport::connect_to("127.0.0.1", listener.port());
  t.join();
  REQUIRE(server_side);
  roundtrip_frames(*client_side, *server_side);
}

TEST_CASE("byte counters equal the sum of frame sizes", "[transport]") {
  auto [a, b] = InMemTransport::make_pair();
  std::uint64_t expect = 0;
  for (std::uint32_t i = 0; i < 5; ++i) {
    Frame f = make_frame(MsgType::engine_round, i, std::vector<std::uint8_t>(i * 3, 1));
    expect += f.wire_size();
    a->send_frame(f);
    b->recv_frame();
  }
  CHECK(a->bytes_sent() == expect);
  CHECK(b->bytes_received() == expect);
  CHECK(a->bytes_received() == 0);
}

TEST_CASE("truncated socket stream raises an error, not a hang", "[transport]") {
  Listener listener(0, "127.0.0.1");
  std::unique_ptr<SocketTransport> server_side;
  std::thread t([&] { server_side = listener.accept(2000); });

  // Raw client: write part of a frame, then close.
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(listener.port());
  inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
  t.join();
  REQUIRE(server_side);

  Frame f = make_frame(MsgType::client_query, 1, {1, 2, 3, 4});
  std::vector<std::uint8_t> enc;
  detail::encode_frame(f, enc);
  REQUIRE(::send(fd, enc.data(), 9, 0) == 9);
  ::close(fd);
  CHECK_THROWS_AS(server_side->recv_frame(), TransportError);
}

TEST_CASE("closed in-memory channel raises on both ends", "[transport]") {
  auto [a, b] = InMemTransport::make_pair();
  a->close();
  CHECK_THROWS_AS(b->recv_frame(), TransportError);
  CHECK_THROWS_AS(a->send_frame(make_frame(MsgType::error, 0, {})), TransportError);
}

TEST_CASE("unknown msg_type on the wire is rejected", "[transport]") {
  Listener listener(0, "127.0.0.1");
  std::unique_ptr<SocketTransport> server_side;
  std::thread t([&] { server_side = listener.accept(2000); });
  auto client_side = SocketTransport::connect_to("127.0.0.1", listener.port());
  t.join();

  Frame f = make_frame(MsgType::handshake, 0, {});
  std::vector<std::uint8_t> enc;
  detail::encode_frame(f, enc);
  enc[4] = 0xee;  // corrupt msg_type byte
  // Push the raw bytes as the payload of nothing: write them via a one-off
  // socket pair is overkill; instead decode directly.
  CHECK_THROWS_AS(detail::decode_header(enc.data() + 4, 0), ProtocolError);
}

TEST_CASE("injected delay is measurable", "[transport]") {
  using namespace std::chrono;
  auto [a, b] = InMemTransport::make_pair(milliseconds(5));
  auto start = steady_clock::now();
  a->send_frame(make_frame(MsgType::handshake, 0, {}));
  b->recv_frame();
  auto took = duration_cast<microseconds>(steady_clock::now() - start);
  CHECK(took.count() >= 4800);
  CHECK(took.count() < 50000);
}

TEST_CASE("connecting to a dead endpoint fails fast", "[transport]") {
  // Port 1 on localhost is almost certainly closed.
  CHECK_THROWS_AS(SocketTransport::connect_to("127.0.0.1", 1, 500), TransportError);
}
