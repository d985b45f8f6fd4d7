#include <gtest/gtest.h>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "admc/bridge_net.hpp"
#include "admc/error.hpp"
#include "admc/protocol.hpp"
#include "admc/session_server.hpp"
#include "support.hpp"

namespace admc {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;
using namespace std::chrono_literals;

template <typename Pred>
bool wait_for(Pred pred, std::chrono::milliseconds timeout = 5000ms) {
  const auto end = std::chrono::steady_clock::now() + timeout;
  while (std::chrono::steady_clock::now() < end) {
    if (pred()) return true;
    std::this_thread::sleep_for(5ms);
  }
  return pred();
}

struct HttpResult {
  unsigned status = 0;
  std::string body;
  std::string content_type;
};

HttpResult http_request(std::uint16_t port, http::verb verb, const std::string& target) {
  asio::io_context io;
  beast::tcp_stream stream(io);
  stream.connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), port));
  http::request<http::empty_body> req(verb, target, 11);
  req.set(http::field::host, "127.0.0.1");
  http::write(stream, req);
  beast::flat_buffer buf;
  http::response_parser<http::string_body> parser;
  if (verb == http::verb::head) parser.skip(true);
  http::read(stream, buf, parser);
  const auto& res = parser.get();
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return {res.result_int(), res.body(), std::string(res[http::field::content_type])};
}

class WsClient {
 public:
  explicit WsClient(std::uint16_t port) : ws_(io_) {
    auto& sock = beast::get_lowest_layer(ws_);
    sock.connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), port));
    ws_.handshake("127.0.0.1", "/ws");
  }
  ~WsClient() {
    beast::error_code ec;
    ws_.close(websocket::close_code::normal, ec);
  }

  json read() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }
  /// Next message of the given type, skipping others.
  json read_type(const std::string& type, int max_skip = 500) {
    for (int i = 0; i < max_skip; ++i) {
      json j = read();
      if (j["type"] == type) return j;
    }
    throw std::runtime_error("no '" + type + "' message");
  }
  void send(const std::string& text) {
    ws_.text(true);
    ws_.write(asio::buffer(text));
  }

 private:
  asio::io_context io_;
  websocket::stream<beast::tcp_stream> ws_;
};

TEST(Static, ResolveRejectsEscapes) {
  const std::filesystem::path root = "/srv/ui";
  EXPECT_EQ(resolve_static(root, "/"), root / "index.html");
  EXPECT_EQ(resolve_static(root, "/js/app.js?v=2"), root / "js" / "app.js");
  EXPECT_EQ(resolve_static(root, "/a/./b.css"), root / "a" / "b.css");
  EXPECT_TRUE(resolve_static(root, "/../etc/passwd").empty());
  EXPECT_TRUE(resolve_static(root, "/a/../../x").empty());
  EXPECT_TRUE(resolve_static(root, "/%2e%2e/x").empty());
  EXPECT_TRUE(resolve_static(root, "/a\\b").empty());
  EXPECT_TRUE(resolve_static(root, "relative").empty());
  EXPECT_TRUE(resolve_static({}, "/index.html").empty());
  EXPECT_EQ(mime_type("x/app.js"), "application/javascript");
  EXPECT_EQ(mime_type("index.html"), "text/html");
  EXPECT_EQ(mime_type("blob"), "application/octet-stream");
}

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::ofstream(dir_.path() / "index.html") << "<html>cockpit</html>";
    std::filesystem::create_directories(dir_.path() / "js");
    std::ofstream(dir_.path() / "js" / "app.js") << "console.log(1);";
    std::ofstream(dir_.path().parent_path() / "admc_secret.txt") << "secret";
    ServerOptions opts;
    opts.port = 0;
    opts.static_root = dir_.path();
    SessionConfig cfg;
    cfg.seed = 3;
    server_ = std::make_unique<SessionServer>(opts, std::make_unique<Session>(cfg));
    server_->start();
  }
  void TearDown() override {
    server_->stop();
    std::filesystem::remove(dir_.path().parent_path() / "admc_secret.txt");
  }

  test::TempDir dir_{"www"};
  std::unique_ptr<SessionServer> server_;
};

TEST_F(ServerTest, ServesStaticFiles) {
  const auto root = http_request(server_->port(), http::verb::get, "/");
  EXPECT_EQ(root.status, 200u);
  EXPECT_EQ(root.body, "<html>cockpit</html>");
  EXPECT_EQ(root.content_type, "text/html");
  const auto js = http_request(server_->port(), http::verb::get, "/js/app.js");
  EXPECT_EQ(js.status, 200u);
  EXPECT_EQ(js.content_type, "application/javascript");
  EXPECT_EQ(http_request(server_->port(), http::verb::head, "/index.html").status, 200u);
  EXPECT_EQ(http_request(server_->port(), http::verb::get, "/healthz").body, "ok\n");
}

TEST_F(ServerTest, RejectsMissingAndEscapingPaths) {
  EXPECT_EQ(http_request(server_->port(), http::verb::get, "/nope.html").status, 404u);
  EXPECT_EQ(http_request(server_->port(), http::verb::get, "/../admc_secret.txt").status, 404u);
  EXPECT_EQ(http_request(server_->port(), http::verb::get, "/%2e%2e/admc_secret.txt").status, 404u);
  EXPECT_EQ(http_request(server_->port(), http::verb::post, "/index.html").status, 405u);
}

TEST_F(ServerTest, WebSocketHelloThenStates) {
  WsClient c(server_->port());
  const json hello = c.read();
  EXPECT_EQ(hello["type"], "hello");
  EXPECT_EQ(hello["mode"], "live");
  EXPECT_EQ(hello["protocol"], kSessionProtocolVersion);
  const json s1 = c.read_type("state");
  const json s2 = c.read_type("state");
  EXPECT_GT(s2["tick"].get<int>(), s1["tick"].get<int>());
  EXPECT_EQ(s2["labels"].size(), 5u);
  EXPECT_TRUE(wait_for([&] { return server_->client_count() == 1; }));
}

TEST_F(ServerTest, InputChangesStateWithinTwoTicks) {
  WsClient c(server_->port());
  c.read_type("hello");
  const json before = c.read_type("state");
  EXPECT_EQ(before["metrics"]["mode_switches"], 0);
  c.send(encode_input({AcceptSuggestion{}, "test", before["tick"].get<std::int64_t>()}));
  std::int64_t sent_at = before["tick"].get<std::int64_t>();
  for (int i = 0; i < 200; ++i) {
    const json s = c.read_type("state");
    if (s["metrics"]["mode_switches"] == 1) {
      EXPECT_EQ(s["active"]["label"], "Optimal");
      // loose bound: the server tick and the socket read race by a tick or two
      EXPECT_LE(s["tick"].get<std::int64_t>() - sent_at, 10);
      return;
    }
  }
  FAIL() << "acceptance never showed up";
}

TEST_F(ServerTest, MalformedInputGetsErrorAndConnectionSurvives) {
  WsClient c(server_->port());
  c.read_type("hello");
  c.send("{broken\n");
  const json err = c.read_type("error");
  EXPECT_FALSE(err["message"].get<std::string>().empty());
  c.send(encode_input({AxisInput{{2.0, 0.0}}, "test", 0}));
  EXPECT_EQ(c.read_type("error")["type"], "error");
  c.send(encode_input({AxisInput{{1.0, 0.0}}, "test", 0}));
  EXPECT_EQ(c.read_type("state")["type"], "state");
}

TEST_F(ServerTest, UnknownUpgradeTargetIsRejected) {
  asio::io_context io;
  websocket::stream<beast::tcp_stream> ws(io);
  beast::get_lowest_layer(ws).connect(
      tcp::endpoint(asio::ip::make_address("127.0.0.1"), server_->port()));
  EXPECT_THROW(ws.handshake("127.0.0.1", "/other"), beast::system_error);
}

TEST_F(ServerTest, SlowClientDoesNotStallOthers) {
  WsClient slow(server_->port());
  WsClient fast(server_->port());
  fast.read_type("hello");
  const auto t0 = fast.read_type("state")["tick"].get<int>();
  std::this_thread::sleep_for(300ms);
  int t1 = t0;
  for (int i = 0; i < 100 && t1 < t0 + 10; ++i) t1 = fast.read_type("state")["tick"].get<int>();
  EXPECT_GE(t1, t0 + 10);
  EXPECT_EQ(slow.read_type("hello")["type"], "hello");
  EXPECT_EQ(server_->client_count(), 2u);
}

TEST(ReplayServer, StreamsFramesInLoop) {
  Recording rec;
  rec.header.tick_rate = 200;
  rec.header.set("scheme", "Classic");
  rec.header.registry.push_back({kViewId, "camera", {1, 1, 1}, {}});
  rec.header.registry.push_back({kArmId, "gripper", {1, 1, 1}, {}});
  for (int i = 0; i < 3; ++i) {
    FrameRecord f;
    f.tick = i;
    f.active_subset = {0, 1};
    rec.frames.push_back(f);
  }
  ServerOptions opts;
  opts.port = 0;
  SessionServer server(opts, rec);
  server.start();
  WsClient c(server.port());
  const json hello = c.read_type("hello");
  EXPECT_EQ(hello["mode"], "replay");
  EXPECT_EQ(hello["scheme"], "Classic");
  std::vector<int> idx;
  for (int i = 0; i < 7; ++i) {
    const json f = c.read_type("frame");
    EXPECT_EQ(f["total"], 3);
    idx.push_back(f["index"].get<int>());
  }
  for (std::size_t i = 1; i < idx.size(); ++i) EXPECT_EQ(idx[i], (idx[i - 1] + 1) % 3);
  c.send(encode_input({AcceptSuggestion{}, "test", 0}));
  EXPECT_EQ(c.read_type("error")["type"], "error");
  server.stop();
}

TEST(Endpoint, Parse) {
  EXPECT_EQ(parse_endpoint("127.0.0.1:9090"), (std::pair<std::string, std::uint16_t>{"127.0.0.1", 9090}));
  EXPECT_THROW(parse_endpoint("localhost"), Error);
  EXPECT_THROW(parse_endpoint("h:99999"), Error);
  EXPECT_THROW(parse_endpoint("h:x"), Error);
}

TEST(BridgeNet, HandshakeCommandsAndReconnect) {
  FakeExternalArm arm({{{0.0, 0.0, 0.3}, {}, Frame::World}, 1.0}, {0.5, 1.0, 1.0});
  FakeArmServer server("127.0.0.1:0", arm, 0.02);
  server.start();
  BridgeLink link("127.0.0.1:" + std::to_string(server.port()), 50ms);

  bool hello = false;
  bool limits = false;
  bool pose = false;
  ASSERT_TRUE(wait_for([&] {
    for (const auto& m : link.poll()) {
      hello = hello || std::holds_alternative<HelloMsg>(m);
      if (const auto* l = std::get_if<LimitsMsg>(&m)) {
        limits = true;
        EXPECT_EQ(l->limits, (VelocityLimits{0.5, 1.0, 1.0}));
      }
      pose = pose || std::holds_alternative<PoseMsg>(m);
    }
    return hello && limits && pose;
  }));
  EXPECT_TRUE(link.connected());
  EXPECT_EQ(link.connections(), 1);

  link.send(CmdMsg{to_wire({{0.1, 0.0, 0.3}, {}, Frame::World}, 1.0)});
  EXPECT_TRUE(wait_for([&] {
    link.poll();
    return std::abs(server.state().pose.position.x - 0.1) < 1e-9;
  }));

  server.kick();
  EXPECT_TRUE(wait_for([&] {
    link.poll();
    return link.connections() == 2 && link.connected();
  }));
  server.stop();
  EXPECT_TRUE(wait_for([&] {
    link.poll();
    return !link.connected();
  }));
}

TEST(BridgeNet, SendWhileDisconnectedIsDropped) {
  BridgeLink link("127.0.0.1:1", 50ms);
  EXPECT_FALSE(link.connected());
  EXPECT_NO_THROW(link.send(CmdMsg{}));
  EXPECT_TRUE(link.poll().empty());
}

TEST(BridgeNet, SessionDrivesFakeArmOverTcp) {
  FakeExternalArm arm({{{0.0, -0.2, 0.25}, {}, Frame::World}, 1.0}, {0.2, 1.0, 1.0});
  FakeArmServer server("127.0.0.1:0", arm, 0.02);
  server.start();
  SessionConfig cfg;
  cfg.scheme = ControlScheme::Classic;
  cfg.bridge = BridgeConfig{};
  cfg.bridge->role = BridgeRole::PhysicalTwin;
  cfg.bridge->sync_period = 0.02;
  cfg.bridge->endpoint = "127.0.0.1:" + std::to_string(server.port());
  Session s(cfg, std::make_unique<BridgeLink>(cfg.bridge->endpoint, 50ms));
  for (int i = 0; i < 100; ++i) {
    s.submit({AxisInput{{1.0, 0.0}}, "test", i});
    s.tick();
    std::this_thread::sleep_for(10ms);
  }
  EXPECT_TRUE(s.snapshot_state().bridge_connected);
  EXPECT_GT(server.state().pose.position.x, 0.05);
  EXPECT_LE(server.state().pose.position.x, s.arm().end_effector.position.x + 1e-9);
  server.stop();
}

}  // namespace
}  // namespace admc
