#include <gtest/gtest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <set>
#include <thread>

#include "brickstage/live_session.hpp"
#include "brickstage/project_io.hpp"
#include "brickstage/session_server.hpp"
#include "generators.hpp"
#include "json.hpp"
#include "stream_capture.hpp"

namespace brickstage {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Json = nlohmann::json;

class RunningServer {
 public:
  RunningServer() : server_(ServerOptions{test::fixture_dir(), "127.0.0.1", 0, 2}), thread_([this] { server_.run(); }) {}
  ~RunningServer() {
    server_.stop();
    thread_.join();
  }
  std::uint16_t port() const { return server_.port(); }

 private:
  SessionServer server_;
  std::thread thread_;
};

class Client {
 public:
  explicit Client(std::uint16_t port) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    beast::get_lowest_layer(ws_).expires_after(std::chrono::seconds(10));
    beast::get_lowest_layer(ws_).connect(*resolver.resolve("127.0.0.1", std::to_string(port)).begin());
    beast::get_lowest_layer(ws_).expires_never();
    ws_.set_option(websocket::stream_base::timeout{std::chrono::seconds(10), std::chrono::seconds(20), false});
    ws_.handshake("127.0.0.1:" + std::to_string(port), "/");
  }

  void send(const std::string& text) { ws_.write(asio::buffer(text)); }

  Json read() {
    beast::flat_buffer buffer;
    ws_.read(buffer);
    const std::string text = beast::buffers_to_string(buffer.data());
    capture.consume(text);
    return Json::parse(text);
  }

  // Reads until a message satisfies pred, returning it.
  template <class Pred>
  Json read_until(Pred pred) {
    for (;;) {
      Json j = read();
      if (pred(j)) return j;
    }
  }

  Json read_type(const std::string& type) {
    return read_until([&](const Json& j) { return j.at("type") == type; });
  }

  void close() { ws_.close(websocket::close_code::normal); }

  test::StreamCapture capture;

 private:
  asio::io_context ioc_;
  websocket::stream<beast::tcp_stream> ws_;
};

struct HttpResult {
  unsigned status;
  std::string body;
};

HttpResult http_get(std::uint16_t port, const std::string& target) {
  asio::io_context ioc;
  beast::tcp_stream stream(ioc);
  tcp::resolver resolver(ioc);
  stream.expires_after(std::chrono::seconds(10));
  stream.connect(*resolver.resolve("127.0.0.1", std::to_string(port)).begin());
  http::request<http::empty_body> req{http::verb::get, target, 11};
  req.set(http::field::host, "127.0.0.1");
  http::write(stream, req);
  beast::flat_buffer buffer;
  http::response<http::string_body> res;
  http::read(stream, buffer, res);
  return {res.result_int(), res.body()};
}

// The scripted session: load, start, tap once mid-run, stop, save the log.
PlayLog play_once(Client& client, const std::string& project, std::uint64_t seed, double tap_x, double tap_y) {
  client.send(Json{{"type", "load"}, {"project_name", project}}.dump());
  EXPECT_EQ(client.read_type("loaded").at("project_digest"), project_digest(*ProjectLibrary(test::fixture_dir()).load(project)));
  client.send(Json{{"type", "start"}, {"seed", seed}}.dump());
  client.read_until([](const Json& j) { return j.at("type") == "frame" && j.at("tick") >= 4; });
  client.send(Json{{"type", "tap"}, {"x", tap_x}, {"y", tap_y}}.dump());
  client.read_until([](const Json& j) { return j.at("type") == "frame" && j.at("tick") >= 12; });
  client.send(R"({"type":"stop"})");
  client.read_type("ended");
  client.send(R"({"type":"save_log"})");
  return parse_play_log(client.read_type("log").at("playlog").get<std::string>());
}

void expect_live_equals_replay(const Client& client, const std::string& project, const PlayLog& log) {
  ASSERT_TRUE(client.capture.ended_tick().has_value());
  EXPECT_EQ(*client.capture.ended_tick(), log.end_tick);
  EXPECT_FALSE(client.capture.frame_after_end());
  const Trace offline = replay(*ProjectLibrary(test::fixture_dir()).load(project), log);
  EXPECT_EQ(trace_digest(offline), trace_digest(client.capture.trace()));
  EXPECT_EQ(offline, client.capture.trace());
  std::int64_t expected_tick = 0;
  for (std::int64_t t : client.capture.frame_ticks()) EXPECT_EQ(t, expected_tick++);
}

TEST(SessionServer, HandshakeAnnouncesProtocolAndProjects) {
  RunningServer server;
  Client client(server.port());
  const Json hello = client.read();
  EXPECT_EQ(hello.at("type"), "hello");
  EXPECT_EQ(hello.at("protocol_version"), 1);
  EXPECT_EQ(hello.at("projects"), (Json{"flipnote", "golden", "hello_world", "red_square"}));
  client.close();
}

TEST(SessionServer, RecordedSessionReplaysToTheStreamedDigest) {
  RunningServer server;
  Client client(server.port());
  client.read_type("hello");
  const PlayLog log = play_once(client, "golden", 7, -30, 0);
  EXPECT_EQ(log.seed, 7u);
  ASSERT_EQ(log.events.size(), 2u);
  EXPECT_TRUE(std::holds_alternative<Tap>(log.events[0].event));
  EXPECT_EQ(std::get<Tap>(log.events[0].event), (Tap{-30, 0}));
  EXPECT_GE(log.events[0].tick, 5);
  EXPECT_TRUE(std::holds_alternative<Stop>(log.events[1].event));
  expect_live_equals_replay(client, "golden", log);
  EXPECT_TRUE(client.capture.errors().empty());
  client.close();
}

TEST(SessionServer, ProtocolErrorsKeepTheConnectionOpen) {
  RunningServer server;
  Client client(server.port());
  client.read_type("hello");
  client.send(R"({"type":"tap","x":0,"y":0})");
  EXPECT_EQ(client.read().at("type"), "error");
  client.send("{{{");
  EXPECT_EQ(client.read().at("type"), "error");
  client.send(R"({"type":"load","project_name":"nope"})");
  EXPECT_EQ(client.read().at("message"), "unknown project \"nope\"");
  client.send(R"({"type":"save_log"})");
  EXPECT_EQ(client.read().at("type"), "error");
  const PlayLog log = play_once(client, "red_square", 3, 0, 0);
  expect_live_equals_replay(client, "red_square", log);
  client.close();
}

TEST(SessionServer, ConcurrentClientsAreIsolated) {
  RunningServer server;
  struct Outcome {
    PlayLog log;
    std::set<std::string> sprites;
  };
  auto session = [&](const std::string& project, std::uint64_t seed, Outcome& outcome, Client*& keep) {
    keep = new Client(server.port());
    keep->read_type("hello");
    outcome.log = play_once(*keep, project, seed, -30, 0);
    for (const auto& rec : keep->capture.trace().records) {
      for (const auto& e : rec.scene.entries) outcome.sprites.insert(e.sprite_name);
    }
  };
  Outcome golden, flip;
  Client* a = nullptr;
  Client* b = nullptr;
  std::thread ta([&] { session("golden", 11, golden, a); });
  std::thread tb([&] { session("flipnote", 12, flip, b); });
  ta.join();
  tb.join();
  std::unique_ptr<Client> own_a(a), own_b(b);
  EXPECT_EQ(golden.sprites, (std::set<std::string>{"Backdrop", "Cat", "Ball"}));
  EXPECT_EQ(flip.sprites, (std::set<std::string>{"Background"}));
  EXPECT_EQ(golden.log.seed, 11u);
  EXPECT_EQ(flip.log.seed, 12u);
  expect_live_equals_replay(*own_a, "golden", golden.log);
  expect_live_equals_replay(*own_b, "flipnote", flip.log);
  own_a->close();
  own_b->close();
}

TEST(SessionServer, ServesCostumeAssets) {
  RunningServer server;
  const std::string png = test::read_file(test::fixture("assets/red2x2.png"));
  const HttpResult plain = http_get(server.port(), "/assets/Red/red");
  EXPECT_EQ(plain.status, 200u);
  EXPECT_EQ(plain.body, png);
  const HttpResult scoped = http_get(server.port(), "/assets/Red/red?project=red_square");
  EXPECT_EQ(scoped.status, 200u);
  EXPECT_EQ(scoped.body, png);
  EXPECT_EQ(http_get(server.port(), "/assets/Red/red?project=golden").status, 404u);
  EXPECT_EQ(http_get(server.port(), "/assets/Red/missing").status, 404u);
  EXPECT_EQ(http_get(server.port(), "/assets/../red_square.catproj.json").status, 404u);
  EXPECT_EQ(http_get(server.port(), "/").status, 404u);
}

TEST(SessionServer, StartupFailures) {
  EXPECT_THROW(SessionServer(ServerOptions{test::fixture_dir() / "nope", "127.0.0.1", 0, 1}), std::invalid_argument);
  RunningServer running;
  EXPECT_THROW(SessionServer(ServerOptions{test::fixture_dir(), "127.0.0.1", running.port(), 1}), std::system_error);
}

}  // namespace
}  // namespace brickstage
