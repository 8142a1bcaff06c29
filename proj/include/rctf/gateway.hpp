#pragma once

// Transport-independent gateway core. A transport feeds each received line
// to Client::handle_line and delivers the lines passed to the client's sink.
// One client connection multiplexes the api, term and sim channels.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rctf/progression.hpp"
#include "rctf/registry.hpp"
#include "rctf/sandbox.hpp"
#include "rctf/shell.hpp"
#include "rctf/tokens.hpp"
#include "rctf/wire.hpp"

namespace rctf::gateway {

struct Config {
  std::size_t instance_cap = sandbox::kDefaultInstanceCap;
  std::int64_t idle_timeout_ms = 30 * 60 * 1000;
  std::size_t submit_limit = 10;
  std::int64_t submit_window_ms = 60 * 1000;
  bool manual_tick = true;  // expose the `tick` op
};

class Gateway;

class Client : public std::enable_shared_from_this<Client> {
 public:
  using Sink = std::function<void(const std::string& line)>;

  Client(Gateway& gateway, Sink sink) : gateway_(gateway), sink_(std::move(sink)) {}

  // Handles one received line. Replies (if any) go to the sink before this
  // returns, in order.
  void handle_line(std::string_view line);

  void send(const std::string& line);
  void close();
  bool closed() const;

 private:
  Gateway& gateway_;
  mutable std::mutex mu_;
  Sink sink_;
  bool closed_ = false;
};

class Gateway {
 public:
  Gateway(std::shared_ptr<const registry::Catalog> catalog, std::unique_ptr<progression::Store> store,
          Config config = {}, std::shared_ptr<Clock> clock = std::make_shared<SystemClock>(),
          std::shared_ptr<TokenSource> tokens = std::make_shared<RandomTokenSource>());
  ~Gateway();

  std::shared_ptr<Client> connect(Client::Sink sink);

  wire::ApiResponse handle_api(const wire::ApiRequest& request, const std::shared_ptr<Client>& client = nullptr);
  void handle_term(const wire::TermFrame& frame, const std::shared_ptr<Client>& client);

  // Advances every live instance by n ticks, pushing SimFrames to attached
  // viewers.
  void tick(std::uint64_t n = 1);

  // Tears down instances idle longer than the configured timeout.
  std::size_t reap_idle();

  void disconnect(const Client& client);
  void shutdown();

  nlohmann::json catalog_view() const;
  progression::Store& store() { return *store_; }
  sandbox::InProcessBackend& backend() { return backend_; }
  const registry::Catalog& catalog() const { return *catalog_; }
  std::size_t live_instances() const;

 private:
  struct Live;
  using Key = std::pair<std::string, progression::ScenarioId>;

  nlohmann::json dispatch(const wire::ApiRequest& request, const std::shared_ptr<Client>& client);
  std::string require_session(const wire::ApiRequest& request) const;
  nlohmann::json op_spawn(const std::string& session, progression::ScenarioId id);
  nlohmann::json op_submit(const std::string& session, const nlohmann::json& args);
  nlohmann::json op_session_state(const std::string& session);
  nlohmann::json op_attach_terminal(const std::string& endpoint, const std::shared_ptr<Client>& client);
  nlohmann::json op_attach_sim(const std::string& endpoint, const std::shared_ptr<Client>& client);

  std::shared_ptr<Live> find_terminal(const std::string& endpoint) const;
  std::shared_ptr<Live> find_sim(const std::string& endpoint) const;
  void retire(const std::shared_ptr<Live>& live, const std::string& reason);
  std::vector<std::shared_ptr<Live>> snapshot_live() const;

  std::shared_ptr<const registry::Catalog> catalog_;
  std::unique_ptr<progression::Store> store_;
  const Config config_;
  std::shared_ptr<Clock> clock_;
  sandbox::InProcessBackend backend_;
  std::map<progression::ScenarioId, std::shared_ptr<const sandbox::BaseImage>> bases_;

  mutable std::mutex mu_;
  std::map<Key, std::shared_ptr<Live>> live_;
  std::map<std::string, std::shared_ptr<Live>> by_terminal_;
  std::map<std::string, std::shared_ptr<Live>> by_sim_;
  std::map<std::string, std::deque<std::int64_t>> submissions_;  // session -> recent submit times
};

// Builds a SimFrame for the instance's current state. Caller holds the
// instance lock.
wire::SimFrame make_sim_frame(const sandbox::Instance& instance, const std::vector<challenges::Event>& events);

}  // namespace rctf::gateway
