#pragma once

// TCP front end for the gateway: newline-delimited JSON over plain sockets,
// one reader and one writer thread per connection, plus a background ticker.

#include <cstdint>
#include <memory>
#include <string>

#include "rctf/gateway.hpp"

namespace rctf::server {

struct ServerConfig {
  std::string listen = "127.0.0.1:7878";
  std::string scenarios_dir;
  std::string log_path;  // empty: memory only
  std::uint64_t seed = 0;
  unsigned tick_hz = 10;  // 0 disables the background ticker
  std::int64_t reap_interval_ms = 60 * 1000;
  gateway::Config gateway;
};

// "host:port"; throws Error(configuration).
std::pair<std::string, std::uint16_t> parse_listen(const std::string& address);

class Server {
 public:
  // Loads the catalog, opens the log and binds. Any failure throws before
  // a single client is accepted.
  explicit Server(ServerConfig config);
  ~Server();

  std::uint16_t port() const;
  gateway::Gateway& gateway();

  // Serves until stop() (or SIGINT/SIGTERM when handle_signals is set).
  void run(bool handle_signals = false);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rctf::server
