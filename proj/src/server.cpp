#include "rctf/server.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <list>
#include <thread>

#include <boost/asio.hpp>

#include "rctf/error.hpp"

namespace rctf::server {

namespace asio = boost::asio;
using asio::ip::tcp;

namespace {

constexpr std::size_t kMaxLineBytes = 1 << 20;
constexpr std::size_t kMaxQueuedLines = 1 << 14;

// Owns one socket. The reader runs handle_line; the writer drains the queue.
class Connection : public std::enable_shared_from_this<Connection> {
 public:
  explicit Connection(tcp::socket socket) : socket_(std::move(socket)) {}

  void start(gateway::Gateway& gw) {
    std::weak_ptr<Connection> weak = shared_from_this();
    client_ = gw.connect([weak](const std::string& line) {
      if (auto self = weak.lock()) self->enqueue(line);
    });
    auto self = shared_from_this();
    writer_ = std::thread([self] { self->write_loop(); });
    reader_ = std::thread([self] { self->read_loop(); });
  }

  void stop() {
    {
      std::lock_guard lock(mu_);
      stopping_ = true;
    }
    cv_.notify_all();
    boost::system::error_code ec;
    socket_.shutdown(tcp::socket::shutdown_both, ec);
  }

  void join() {
    if (reader_.joinable()) reader_.join();
    if (writer_.joinable()) writer_.join();
    if (client_) client_->close();
    boost::system::error_code ec;
    socket_.close(ec);
  }

  bool finished() const { return done_.load(); }

 private:
  void enqueue(const std::string& line) {
    {
      std::lock_guard lock(mu_);
      if (stopping_) return;
      if (queue_.size() >= kMaxQueuedLines) {
        stopping_ = true;  // slow consumer
      } else {
        queue_.push_back(line + "\n");
      }
    }
    cv_.notify_all();
  }

  void read_loop() {
    asio::streambuf buffer(kMaxLineBytes);
    boost::system::error_code ec;
    while (true) {
      std::size_t n = asio::read_until(socket_, buffer, '\n', ec);
      if (ec) break;
      std::string line(asio::buffers_begin(buffer.data()), asio::buffers_begin(buffer.data()) + static_cast<std::ptrdiff_t>(n));
      buffer.consume(n);
      line.pop_back();
      client_->handle_line(line);
    }
    client_->close();
    stop();
    done_ = true;
  }

  void write_loop() {
    while (true) {
      std::string line;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
        if (queue_.empty()) break;
        line = std::move(queue_.front());
        queue_.pop_front();
      }
      boost::system::error_code ec;
      asio::write(socket_, asio::buffer(line), ec);
      if (ec) break;
    }
    stop();
  }

  tcp::socket socket_;
  std::shared_ptr<gateway::Client> client_;
  std::thread reader_, writer_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> queue_;
  bool stopping_ = false;
  std::atomic<bool> done_{false};
};

}  // namespace

std::pair<std::string, std::uint16_t> parse_listen(const std::string& address) {
  auto colon = address.rfind(':');
  if (colon == std::string::npos || colon + 1 == address.size())
    throw Error(ErrorCode::configuration, "listen address must be host:port, got '" + address + "'");
  std::string host = address.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    port = std::stoul(address.substr(colon + 1), &used);
    if (used != address.size() - colon - 1) throw std::invalid_argument("port");
  } catch (const std::exception&) {
    throw Error(ErrorCode::configuration, "invalid port in '" + address + "'");
  }
  if (port > 65535) throw Error(ErrorCode::configuration, "port out of range in '" + address + "'");
  return {host.empty() ? "0.0.0.0" : host, static_cast<std::uint16_t>(port)};
}

struct Server::Impl {
  ServerConfig config;
  std::unique_ptr<gateway::Gateway> gw;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  asio::signal_set signals{io};
  std::mutex mu;
  std::list<std::shared_ptr<Connection>> connections;
  std::thread ticker;
  std::mutex tick_mu;
  std::condition_variable tick_cv;
  bool stopping = false;
  std::atomic<bool> stopped{false};

  void accept() {
    acceptor.async_accept([this](boost::system::error_code ec, tcp::socket socket) {
      if (ec) return;
      auto conn = std::make_shared<Connection>(std::move(socket));
      {
        std::lock_guard lock(mu);
        connections.remove_if([](const auto& c) {
          if (!c->finished()) return false;
          c->join();
          return true;
        });
        connections.push_back(conn);
      }
      conn->start(*gw);
      accept();
    });
  }

  void tick_loop() {
    auto period = std::chrono::microseconds(1000000 / config.tick_hz);
    auto next_reap = std::chrono::steady_clock::now() + std::chrono::milliseconds(config.reap_interval_ms);
    std::unique_lock lock(tick_mu);
    while (!tick_cv.wait_for(lock, period, [&] { return stopping; })) {
      lock.unlock();
      gw->tick(1);
      if (std::chrono::steady_clock::now() >= next_reap) {
        gw->reap_idle();
        next_reap = std::chrono::steady_clock::now() + std::chrono::milliseconds(config.reap_interval_ms);
      }
      lock.lock();
    }
  }
};

Server::Server(ServerConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  auto& c = impl_->config;
  auto [host, port] = parse_listen(c.listen);
  auto catalog =
      std::make_shared<const registry::Catalog>(registry::load_catalog(registry::read_catalog_dir(c.scenarios_dir), c.seed));
  auto log = c.log_path.empty() ? progression::EventLog() : progression::EventLog::open_file(c.log_path);
  auto store = std::make_unique<progression::Store>(catalog, std::move(log));
  c.gateway.manual_tick = c.tick_hz == 0;
  impl_->gw = std::make_unique<gateway::Gateway>(catalog, std::move(store), c.gateway);

  boost::system::error_code ec;
  auto address = asio::ip::make_address(host, ec);
  if (ec) throw Error(ErrorCode::configuration, "invalid listen host '" + host + "'");
  tcp::endpoint endpoint(address, port);
  impl_->acceptor.open(endpoint.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(tcp::acceptor::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(endpoint, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) throw Error(ErrorCode::io, "cannot bind " + c.listen + ": " + ec.message());
}

Server::~Server() { stop(); }

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

gateway::Gateway& Server::gateway() { return *impl_->gw; }

void Server::run(bool handle_signals) {
  if (handle_signals) {
    impl_->signals.add(SIGINT);
    impl_->signals.add(SIGTERM);
    impl_->signals.async_wait([this](boost::system::error_code ec, int) {
      if (!ec) impl_->io.stop();
    });
  }
  if (impl_->config.tick_hz > 0) impl_->ticker = std::thread([this] { impl_->tick_loop(); });
  impl_->accept();
  impl_->io.run();
  stop();
}

void Server::stop() {
  if (impl_->stopped.exchange(true)) return;
  impl_->io.stop();
  boost::system::error_code ec;
  impl_->acceptor.close(ec);
  {
    std::lock_guard lock(impl_->tick_mu);
    impl_->stopping = true;
  }
  impl_->tick_cv.notify_all();
  if (impl_->ticker.joinable()) impl_->ticker.join();
  std::list<std::shared_ptr<Connection>> connections;
  {
    std::lock_guard lock(impl_->mu);
    connections.swap(impl_->connections);
  }
  for (auto& c : connections) c->stop();
  for (auto& c : connections) c->join();
  impl_->gw->shutdown();
}

}  // namespace rctf::server
