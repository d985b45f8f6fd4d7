#include "admc/bridge_net.hpp"

#include <atomic>
#include <boost/asio.hpp>
#include <deque>
#include <mutex>
#include <thread>

#include "admc/error.hpp"

namespace admc {

namespace asio = boost::asio;
using asio::ip::tcp;

std::pair<std::string, std::uint16_t> parse_endpoint(const std::string& endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos || colon == 0) {
    throw Error(ErrorCode::kInvalidConfig, "endpoint must be host:port, got '" + endpoint + "'");
  }
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(endpoint.substr(colon + 1), &used);
    if (used != endpoint.size() - colon - 1) port = -1;
  } catch (const std::exception&) {
    port = -1;
  }
  if (port < 0 || port > 65535) {
    throw Error(ErrorCode::kInvalidConfig, "bad port in endpoint '" + endpoint + "'");
  }
  return {endpoint.substr(0, colon), static_cast<std::uint16_t>(port)};
}

namespace {

/// One framed duplex connection driven on an io_context thread.
class Connection : public std::enable_shared_from_this<Connection> {
 public:
  using OnMessage = std::function<void(WireMessage)>;
  using OnClose = std::function<void()>;

  Connection(tcp::socket socket, OnMessage on_message, OnClose on_close)
      : socket_(std::move(socket)),
        on_message_(std::move(on_message)),
        on_close_(std::move(on_close)) {}

  void start() { read(); }

  void write(const WireMessage& msg) {
    if (closed_) return;
    out_.push_back(encode(msg));
    if (out_.size() == 1) flush();
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    boost::system::error_code ignored;
    socket_.shutdown(tcp::socket::shutdown_both, ignored);
    socket_.close(ignored);
    if (on_close_) on_close_();
  }

  bool closed() const { return closed_; }

 private:
  void read() {
    auto self = shared_from_this();
    socket_.async_read_some(asio::buffer(buf_), [self](boost::system::error_code ec, std::size_t n) {
      if (ec) {
        self->close();
        return;
      }
      try {
        self->decoder_.feed({self->buf_.data(), n});
        while (auto msg = self->decoder_.next()) self->on_message_(std::move(*msg));
      } catch (const Error&) {
        self->close();
        return;
      }
      if (!self->closed_) self->read();
    });
  }

  void flush() {
    auto self = shared_from_this();
    asio::async_write(socket_, asio::buffer(out_.front()),
                      [self](boost::system::error_code ec, std::size_t) {
                        if (ec) {
                          self->close();
                          return;
                        }
                        self->out_.pop_front();
                        if (!self->out_.empty()) self->flush();
                      });
  }

  tcp::socket socket_;
  OnMessage on_message_;
  OnClose on_close_;
  std::array<char, 4096> buf_{};
  WireDecoder decoder_;
  std::deque<std::string> out_;
  bool closed_ = false;
};

}  // namespace

struct BridgeLink::Impl {
  asio::io_context io;
  asio::executor_work_guard<asio::io_context::executor_type> work{io.get_executor()};
  asio::steady_timer retry_timer{io};
  std::string host;
  std::uint16_t port = 0;
  std::chrono::milliseconds retry;
  std::shared_ptr<Connection> conn;
  std::atomic<bool> connected{false};
  std::atomic<int> connections{0};

  std::mutex inbox_mutex;
  std::vector<WireMessage> inbox;
  std::thread thread;

  void connect() {
    auto socket = std::make_shared<tcp::socket>(io);
    tcp::resolver resolver(io);
    boost::system::error_code ec;
    auto endpoints = resolver.resolve(host, std::to_string(port), ec);
    if (ec) {
      schedule_retry();
      return;
    }
    asio::async_connect(*socket, endpoints,
                        [this, socket](boost::system::error_code cec, const tcp::endpoint&) {
                          if (cec) {
                            schedule_retry();
                            return;
                          }
                          on_connected(std::move(*socket));
                        });
  }

  void on_connected(tcp::socket socket) {
    socket.set_option(tcp::no_delay(true));
    conn = std::make_shared<Connection>(
        std::move(socket),
        [this](WireMessage msg) {
          std::lock_guard lock(inbox_mutex);
          inbox.push_back(std::move(msg));
        },
        [this] {
          connected = false;
          schedule_retry();
        });
    connected = true;
    ++connections;
    conn->start();
    conn->write(HelloMsg{"sim", kWireProtocolVersion});
  }

  void schedule_retry() {
    retry_timer.expires_after(retry);
    retry_timer.async_wait([this](boost::system::error_code ec) {
      if (!ec) connect();
    });
  }
};

BridgeLink::BridgeLink(const std::string& endpoint, std::chrono::milliseconds retry)
    : impl_(std::make_unique<Impl>()) {
  auto [host, port] = parse_endpoint(endpoint);
  impl_->host = host;
  impl_->port = port;
  impl_->retry = retry;
  asio::post(impl_->io, [this] { impl_->connect(); });
  impl_->thread = std::thread([this] { impl_->io.run(); });
}

BridgeLink::~BridgeLink() {
  asio::post(impl_->io, [this] {
    impl_->retry_timer.cancel();
    if (impl_->conn) {
      auto conn = impl_->conn;
      impl_->conn.reset();
      conn->close();
    }
    impl_->retry_timer.cancel();
    impl_->work.reset();
    impl_->io.stop();
  });
  if (impl_->thread.joinable()) impl_->thread.join();
}

void BridgeLink::send(const WireMessage& msg) {
  if (!impl_->connected) return;
  asio::post(impl_->io, [this, msg] {
    if (impl_->conn && !impl_->conn->closed()) impl_->conn->write(msg);
  });
}

std::vector<WireMessage> BridgeLink::poll() {
  std::lock_guard lock(impl_->inbox_mutex);
  std::vector<WireMessage> out;
  out.swap(impl_->inbox);
  return out;
}

bool BridgeLink::connected() const { return impl_->connected; }

int BridgeLink::connections() const { return impl_->connections; }

struct FakeArmServer::Impl {
  asio::io_context io;
  tcp::acceptor acceptor{io};
  asio::steady_timer timer{io};
  double period;
  mutable std::mutex arm_mutex;
  FakeExternalArm arm;
  std::shared_ptr<Connection> conn;
  bool greeted = false;
  std::thread thread;

  Impl(FakeExternalArm a, double p) : period(p), arm(std::move(a)) {}

  void accept() {
    acceptor.async_accept([this](boost::system::error_code ec, tcp::socket socket) {
      if (ec) return;
      if (conn && !conn->closed()) {
        boost::system::error_code ignored;
        socket.close(ignored);  // one client at a time
        accept();
        return;
      }
      socket.set_option(tcp::no_delay(true));
      greeted = false;
      conn = std::make_shared<Connection>(
          std::move(socket), [this](WireMessage msg) { on_message(std::move(msg)); },
          [this] { greeted = false; });
      conn->start();
      accept();
    });
  }

  void on_message(WireMessage msg) {
    if (std::holds_alternative<HelloMsg>(msg)) {
      greeted = true;
      conn->write(HelloMsg{"external", kWireProtocolVersion});
      std::lock_guard lock(arm_mutex);
      conn->write(LimitsMsg{arm.limits()});
      conn->write(PoseMsg{arm.report()});
    } else if (const auto* c = std::get_if<CmdMsg>(&msg)) {
      std::lock_guard lock(arm_mutex);
      arm.command(c->target);
    }
  }

  void tick() {
    timer.expires_after(std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(period)));
    timer.async_wait([this](boost::system::error_code ec) {
      if (ec) return;
      ExternalState report;
      {
        std::lock_guard lock(arm_mutex);
        arm.advance(period);
        report = arm.report();
      }
      if (conn && greeted && !conn->closed()) conn->write(PoseMsg{report});
      tick();
    });
  }
};

FakeArmServer::FakeArmServer(const std::string& endpoint, FakeExternalArm arm, double period)
    : impl_(std::make_unique<Impl>(std::move(arm), period)) {
  if (!(period > 0.0)) throw Error(ErrorCode::kInvalidConfig, "period must be positive");
  auto [host, port] = parse_endpoint(endpoint);
  const tcp::endpoint ep(asio::ip::make_address(host), port);
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(tcp::acceptor::reuse_address(true));
  impl_->acceptor.bind(ep);
  impl_->acceptor.listen();
  impl_->accept();
  impl_->tick();
}

FakeArmServer::~FakeArmServer() { stop(); }

std::uint16_t FakeArmServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void FakeArmServer::start() {
  impl_->thread = std::thread([this] { impl_->io.run(); });
}

void FakeArmServer::run() { impl_->io.run(); }

void FakeArmServer::stop() {
  asio::post(impl_->io, [this] {
    boost::system::error_code ignored;
    impl_->acceptor.close(ignored);
    impl_->timer.cancel();
    if (impl_->conn) impl_->conn->close();
    impl_->io.stop();
  });
  if (impl_->thread.joinable()) impl_->thread.join();
}

ArmPose FakeArmServer::state() const {
  std::lock_guard lock(impl_->arm_mutex);
  return impl_->arm.state();
}

void FakeArmServer::kick() {
  asio::post(impl_->io, [this] {
    if (impl_->conn) impl_->conn->close();
  });
}

}  // namespace admc
