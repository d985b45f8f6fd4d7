#include "admc/session_server.hpp"

#include <atomic>
#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>
#include <vector>

#include "admc/error.hpp"
#include "admc/protocol.hpp"

namespace admc {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

std::string_view mime_type(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".wasm") return "application/wasm";
  if (ext == ".ico") return "image/x-icon";
  if (ext == ".txt" || ext == ".csv") return "text/plain";
  return "application/octet-stream";
}

std::filesystem::path resolve_static(const std::filesystem::path& root, std::string_view target) {
  if (root.empty()) return {};
  const auto q = target.find_first_of("?#");
  std::string rel(target.substr(0, q));
  if (rel.empty() || rel.front() != '/') return {};
  if (rel.find_first_of(std::string_view("\\%\0", 3)) != std::string::npos) return {};
  if (rel.back() == '/') rel += "index.html";
  std::filesystem::path out = root;
  std::size_t start = 1;
  while (start <= rel.size()) {
    std::size_t end = rel.find('/', start);
    if (end == std::string::npos) end = rel.size();
    const std::string seg = rel.substr(start, end - start);
    if (seg == "..") return {};
    if (!seg.empty() && seg != ".") out /= seg;
    start = end + 1;
  }
  return out;
}

namespace {

class WsClient;

/// Fan-out registry shared by the tick thread and the connections.
class Hub {
 public:
  void join(const std::shared_ptr<WsClient>& c) {
    std::lock_guard lock(mutex_);
    clients_.push_back(c);
  }
  void leave(const WsClient* c) {
    std::lock_guard lock(mutex_);
    std::erase_if(clients_, [c](const std::weak_ptr<WsClient>& w) {
      auto s = w.lock();
      return !s || s.get() == c;
    });
  }
  std::vector<std::shared_ptr<WsClient>> snapshot() {
    std::lock_guard lock(mutex_);
    std::vector<std::shared_ptr<WsClient>> out;
    for (auto& w : clients_) {
      if (auto s = w.lock()) out.push_back(std::move(s));
    }
    return out;
  }
  std::size_t size() {
    std::lock_guard lock(mutex_);
    return clients_.size();
  }

 private:
  std::mutex mutex_;
  std::vector<std::weak_ptr<WsClient>> clients_;
};

struct Shared {
  Hub hub;
  ServerOptions options;
  Session* session = nullptr;  ///< null in replay mode
  std::string hello;
  std::mutex last_mutex;
  std::shared_ptr<const std::string> last_state;

  std::shared_ptr<const std::string> latest() {
    std::lock_guard lock(last_mutex);
    return last_state;
  }
};

class WsClient : public std::enable_shared_from_this<WsClient> {
 public:
  WsClient(tcp::socket&& socket, Shared& shared) : ws_(std::move(socket)), shared_(shared) {}

  void accept(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&WsClient::on_accept, shared_from_this()));
  }

  void send(std::shared_ptr<const std::string> msg) {
    asio::post(ws_.get_executor(), [self = shared_from_this(), msg = std::move(msg)] {
      self->enqueue(msg);
    });
  }

  /// Must run on the io thread.
  void close() {
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().close(ignored);
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    shared_.hub.join(shared_from_this());
    enqueue(std::make_shared<const std::string>(shared_.hello));
    if (auto last = shared_.latest()) enqueue(last);
    read();
  }

  void read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WsClient::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      shared_.hub.leave(this);
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    for (const auto& line : split_lines(text)) {
      try {
        if (!shared_.session) throw Error(ErrorCode::kProtocol, "replay sessions take no input");
        shared_.session->submit(decode_input(line));
      } catch (const Error& e) {
        enqueue(std::make_shared<const std::string>(encode_error(e.what())));
      }
    }
    read();
  }

  void enqueue(std::shared_ptr<const std::string> msg) {
    queue_.push_back(std::move(msg));
    // drop the oldest waiting message, never the one being written
    const std::size_t limit = std::max<std::size_t>(shared_.options.client_queue, 1) + (writing_ ? 1 : 0);
    while (queue_.size() > limit) queue_.erase(queue_.begin() + (writing_ ? 1 : 0));
    if (!writing_) write();
  }

  void write() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(asio::buffer(*queue_.front()),
                    beast::bind_front_handler(&WsClient::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    writing_ = false;
    if (ec) {
      shared_.hub.leave(this);
      return;
    }
    queue_.pop_front();
    if (!queue_.empty()) write();
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  Shared& shared_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool writing_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, Shared& shared) : stream_(std::move(socket)), shared_(shared) {}

  void run() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/ws") {
        stream_.expires_never();
        std::make_shared<WsClient>(stream_.release_socket(), shared_)->accept(std::move(req_));
        return;
      }
      reply_text(http::status::not_found, "no such endpoint\n");
      return;
    }
    if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
      reply_text(http::status::method_not_allowed, "only GET and HEAD\n");
      return;
    }
    if (req_.target() == "/healthz") {
      reply_text(http::status::ok, "ok\n");
      return;
    }
    const auto path = resolve_static(shared_.options.static_root,
                                     std::string_view(req_.target().data(), req_.target().size()));
    beast::error_code fec;
    http::file_body::value_type file;
    if (!path.empty()) file.open(path.c_str(), beast::file_mode::scan, fec);
    if (path.empty() || fec) {
      reply_text(http::status::not_found, "not found\n");
      return;
    }
    const auto size = file.size();
    if (req_.method() == http::verb::head) {
      auto res = std::make_shared<http::response<http::empty_body>>(http::status::ok, req_.version());
      res->set(http::field::content_type, std::string(mime_type(path)));
      res->content_length(size);
      res->keep_alive(req_.keep_alive());
      send(res);
      return;
    }
    auto res = std::make_shared<http::response<http::file_body>>(
        std::piecewise_construct, std::make_tuple(std::move(file)),
        std::make_tuple(http::status::ok, req_.version()));
    res->set(http::field::content_type, std::string(mime_type(path)));
    res->content_length(size);
    res->keep_alive(req_.keep_alive());
    send(res);
  }

  void reply_text(http::status status, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::content_type, "text/plain");
    res->body() = std::move(body);
    res->prepare_payload();
    res->keep_alive(req_.keep_alive());
    send(res);
  }

  template <typename Response>
  void send(std::shared_ptr<Response> res) {
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
                        if (ec) return;
                        if (!res->keep_alive()) {
                          beast::error_code ignored;
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                          return;
                        }
                        self->read();
                      });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  Shared& shared_;
};

}  // namespace

struct SessionServer::Impl {
  asio::io_context io{1};
  tcp::acceptor acceptor{io};
  Shared shared;
  std::unique_ptr<Session> session;
  std::optional<Recording> recording;
  double tick_rate = 50.0;

  std::thread io_thread;
  std::thread tick_thread;
  std::atomic<bool> stopping{false};
  std::mutex stop_mutex;
  std::condition_variable stop_cv;
  std::atomic<std::int64_t> ticks{0};

  void open(const ServerOptions& options) {
    shared.options = options;
    const tcp::endpoint ep(asio::ip::make_address(options.host), options.port);
    acceptor.open(ep.protocol());
    acceptor.set_option(asio::socket_base::reuse_address(true));
    acceptor.bind(ep);
    acceptor.listen(asio::socket_base::max_listen_connections);
  }

  void accept() {
    acceptor.async_accept(asio::make_strand(io), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpSession>(std::move(socket), shared)->run();
      accept();
    });
  }

  void publish(std::string text) {
    auto msg = std::make_shared<const std::string>(std::move(text));
    {
      std::lock_guard lock(shared.last_mutex);
      shared.last_state = msg;
    }
    for (auto& c : shared.hub.snapshot()) c->send(msg);
  }

  void tick_loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(1.0 / tick_rate));
    auto next = clock::now();
    std::size_t cursor = 0;
    while (!stopping) {
      if (session) {
        publish(encode_state(session->tick()));
      } else if (recording && !recording->frames.empty()) {
        const auto n = recording->frames.size();
        publish(encode_frame(recording->frames[cursor % n], cursor % n, n));
        ++cursor;
      }
      ++ticks;
      next += period;
      const auto now = clock::now();
      if (now - next > std::chrono::seconds(1)) next = now;  // fell far behind; do not burst
      std::unique_lock lock(stop_mutex);
      stop_cv.wait_until(lock, next, [this] { return stopping.load(); });
    }
  }
};

SessionServer::SessionServer(ServerOptions options, std::unique_ptr<Session> session)
    : impl_(std::make_unique<Impl>()) {
  if (!session) throw Error(ErrorCode::kInvalidConfig, "server needs a session");
  impl_->session = std::move(session);
  impl_->shared.session = impl_->session.get();
  impl_->tick_rate = impl_->session->config().tick_rate;
  impl_->shared.hello = encode_hello(impl_->session->config(), "live");
  impl_->open(options);
}

SessionServer::SessionServer(ServerOptions options, Recording recording)
    : impl_(std::make_unique<Impl>()) {
  impl_->tick_rate = recording.header.tick_rate;
  SessionConfig cfg;
  cfg.tick_rate = recording.header.tick_rate;
  if (auto s = recording.header.get("scheme")) {
    if (auto scheme = parse_scheme(*s)) cfg.scheme = *scheme;
  }
  impl_->shared.hello = encode_hello(cfg, "replay");
  impl_->recording = std::move(recording);
  impl_->open(options);
}

SessionServer::~SessionServer() { stop(); }

std::uint16_t SessionServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void SessionServer::start() {
  impl_->accept();
  impl_->io_thread = std::thread([this] { impl_->io.run(); });
  impl_->tick_thread = std::thread([this] { impl_->tick_loop(); });
}

void SessionServer::run() {
  start();
  if (impl_->io_thread.joinable()) impl_->io_thread.join();
}

void SessionServer::stop() {
  {
    std::lock_guard lock(impl_->stop_mutex);
    if (impl_->stopping.exchange(true) && !impl_->tick_thread.joinable() &&
        !impl_->io_thread.joinable()) {
      return;
    }
  }
  impl_->stop_cv.notify_all();
  if (impl_->tick_thread.joinable()) impl_->tick_thread.join();
  asio::post(impl_->io, [this] {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
    for (auto& c : impl_->shared.hub.snapshot()) c->close();
    impl_->io.stop();
  });
  if (impl_->io_thread.joinable() && impl_->io_thread.get_id() != std::this_thread::get_id()) {
    impl_->io_thread.join();
  }
  if (impl_->session) impl_->session->finish();
}

std::size_t SessionServer::client_count() const { return impl_->shared.hub.size(); }

std::int64_t SessionServer::ticks() const { return impl_->ticks; }

}  // namespace admc
