#include "brickstage/session_server.hpp"

#include <boost/asio/bind_executor.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <deque>
#include <fstream>
#include <iostream>
#include <sstream>
#include <system_error>
#include <thread>
#include <vector>

#include "brickstage/live_session.hpp"

namespace brickstage {
namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

std::string percent_decode(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '%' && i + 2 < text.size()) {
      auto hex = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
      };
      const int hi = hex(text[i + 1]);
      const int lo = hex(text[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out += static_cast<char>(hi * 16 + lo);
        i += 2;
        continue;
      }
    }
    out += text[i];
  }
  return out;
}

class WebSocketConnection : public std::enable_shared_from_this<WebSocketConnection> {
 public:
  WebSocketConnection(tcp::socket&& socket, const ProjectLibrary& library)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), live_(library) {}

  void start(http::request<http::string_body> request) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(request, beast::bind_front_handler(&WebSocketConnection::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    enqueue(live_.hello());
    read();
  }

  void read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&WebSocketConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      closed_ = true;
      timer_.cancel();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    enqueue(live_.handle(text, SteadyClock::now()));
    schedule();
    read();
  }

  void schedule() {
    const auto deadline = live_.next_deadline();
    if (!deadline || closed_) return;
    if (timer_armed_ && timer_.expiry() == *deadline) return;
    timer_.expires_at(*deadline);
    timer_armed_ = true;
    timer_.async_wait(beast::bind_front_handler(&WebSocketConnection::on_timer, shared_from_this()));
  }

  void on_timer(beast::error_code ec) {
    if (ec == asio::error::operation_aborted) return;
    timer_armed_ = false;
    if (closed_) return;
    enqueue(live_.advance(SteadyClock::now()));
    schedule();
  }

  void enqueue(std::vector<std::string> messages) {
    for (auto& m : messages) outbox_.push_back(std::move(m));
    if (!writing_) write_next();
  }

  void write_next() {
    if (outbox_.empty() || closed_) {
      writing_ = false;
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(asio::buffer(outbox_.front()),
                    beast::bind_front_handler(&WebSocketConnection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) {
      closed_ = true;
      writing_ = false;
      timer_.cancel();
      return;
    }
    outbox_.pop_front();
    write_next();
  }

  websocket::stream<beast::tcp_stream> ws_;
  asio::steady_timer timer_;
  beast::flat_buffer buffer_;
  std::deque<std::string> outbox_;
  LiveSession live_;
  bool writing_ = false;
  bool closed_ = false;
  bool timer_armed_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, const ProjectLibrary& library)
      : stream_(std::move(socket)), library_(library) {}

  void start() {
    asio::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpConnection::read, shared_from_this()));
  }

 private:
  void read() {
    request_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, request_,
                     beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return;
    if (websocket::is_upgrade(request_)) {
      stream_.expires_never();
      std::make_shared<WebSocketConnection>(stream_.release_socket(), library_)->start(std::move(request_));
      return;
    }
    respond();
  }

  void respond() {
    auto response = std::make_shared<http::response<http::string_body>>();
    response->version(request_.version());
    response->keep_alive(false);
    response->set(http::field::server, "brickstage");

    const std::string target(request_.target());
    const std::string path = target.substr(0, target.find('?'));
    std::optional<std::string> project;
    if (const auto q = target.find("?project="); q != std::string::npos) {
      project = percent_decode(std::string_view(target).substr(q + 9));
    }

    constexpr std::string_view kPrefix = "/assets/";
    std::optional<std::filesystem::path> file;
    if (request_.method() == http::verb::get && path.starts_with(kPrefix)) {
      const std::string rest = path.substr(kPrefix.size());
      const auto slash = rest.find('/');
      if (slash != std::string::npos && rest.find('/', slash + 1) == std::string::npos) {
        file = library_.costume_file(percent_decode(rest.substr(0, slash)), percent_decode(rest.substr(slash + 1)),
                                     project ? std::optional<std::string_view>(*project) : std::nullopt);
      }
    }

    std::string body;
    bool ok = false;
    if (file) {
      std::ifstream in(*file, std::ios::binary);
      if (in) {
        std::ostringstream buffer;
        buffer << in.rdbuf();
        body = buffer.str();
        ok = true;
      }
    }
    if (ok) {
      response->result(http::status::ok);
      response->set(http::field::content_type, "image/png");
      response->set(http::field::access_control_allow_origin, "*");
      response->body() = std::move(body);
    } else {
      response->result(http::status::not_found);
      response->set(http::field::content_type, "text/plain");
      response->body() = "not found\n";
    }
    response->prepare_payload();
    http::async_write(stream_, *response,
                      [self = shared_from_this(), response](beast::error_code, std::size_t) {
                        beast::error_code ignored;
                        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                      });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
  const ProjectLibrary& library_;
};

}  // namespace

struct SessionServer::Impl {
  ServerOptions options;
  ProjectLibrary library;
  asio::io_context ioc;
  tcp::acceptor acceptor;

  explicit Impl(ServerOptions opts)
      : options(std::move(opts)), library(options.project_dir), ioc(static_cast<int>(std::max(1u, options.threads))),
        acceptor(asio::make_strand(ioc)) {
    const tcp::endpoint endpoint(asio::ip::make_address(options.address), options.port);
    acceptor.open(endpoint.protocol());
    acceptor.set_option(asio::socket_base::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen(asio::socket_base::max_listen_connections);
  }

  void accept() {
    acceptor.async_accept(asio::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == asio::error::operation_aborted) return;
      } else {
        std::make_shared<HttpConnection>(std::move(socket), library)->start();
      }
      accept();
    });
  }
};

SessionServer::SessionServer(ServerOptions options) {
  try {
    impl_ = std::make_unique<Impl>(std::move(options));
  } catch (const boost::system::system_error& e) {
    // Boost's error type is not a std::system_error in every release; callers only see the std one.
    throw std::system_error(std::error_code(e.code().value(), std::system_category()), e.what());
  }
}

SessionServer::~SessionServer() { stop(); }

std::uint16_t SessionServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void SessionServer::run(bool handle_signals) {
  std::optional<asio::signal_set> signals;
  if (handle_signals) {
    signals.emplace(impl_->ioc, SIGINT, SIGTERM);
    signals->async_wait([this](beast::error_code ec, int) {
      if (!ec) stop();
    });
  }
  impl_->accept();
  std::vector<std::thread> workers;
  for (unsigned i = 1; i < std::max(1u, impl_->options.threads); ++i) {
    workers.emplace_back([this] { impl_->ioc.run(); });
  }
  impl_->ioc.run();
  for (auto& t : workers) t.join();
}

void SessionServer::stop() { impl_->ioc.stop(); }

}  // namespace brickstage
