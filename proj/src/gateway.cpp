#include "rctf/gateway.hpp"

#include <algorithm>

#include "rctf/error.hpp"

namespace rctf::gateway {

using nlohmann::json;
using progression::ScenarioId;

struct Gateway::Live {
  Key key;
  std::shared_ptr<sandbox::Instance> instance;

  std::mutex shell_mu;  // serializes terminal input
  std::unique_ptr<shell::ShellContext> shell;

  std::mutex mu;  // guards the fields below; taken after the instance lock
  std::weak_ptr<Client> term_client;
  std::weak_ptr<Client> sim_client;
  std::optional<world::WorldState> last_world;
  std::int64_t last_activity = 0;
  bool retired = false;
};

namespace {

wire::TermFrame close_term(const std::string& endpoint, const std::string& reason) {
  return wire::TermFrame{endpoint, wire::Direction::output, "", reason};
}

wire::SimFrame close_sim(const std::string& endpoint, std::uint64_t tick, const std::string& reason) {
  wire::SimFrame f;
  f.endpoint = endpoint;
  f.tick = tick;
  f.closed = reason;
  return f;
}

ScenarioId scenario_arg(const json& args) {
  if (!args.contains("scenario_id") || !args["scenario_id"].is_number_unsigned())
    throw Error(ErrorCode::bad_request, "args.scenario_id must be a positive integer");
  return args["scenario_id"].get<ScenarioId>();
}

std::string string_arg(const json& args, const char* key) {
  if (!args.contains(key) || !args[key].is_string())
    throw Error(ErrorCode::bad_request, std::string("args.") + key + " must be a string");
  return args[key].get<std::string>();
}

}  // namespace

wire::SimFrame make_sim_frame(const sandbox::Instance& instance, const std::vector<challenges::Event>& events) {
  const auto& runtime = instance.runtime();
  wire::SimFrame f;
  f.endpoint = instance.endpoints().simulation;
  f.tick = runtime.tick();
  if (runtime.has_world()) {
    f.world = runtime.world();
    f.radius = challenges::safety_config(runtime.image()).collision_radius;
  }
  for (const auto& e : events) {
    switch (e.kind) {
      case challenges::EventKind::frame:
        f.events.push_back("frame " + e.topic + " " + std::to_string(e.wire.size()) + " bytes");
        break;
      case challenges::EventKind::world:
        break;
      case challenges::EventKind::flag:
        f.flag_event = "flag released on " + e.topic + " (" + e.detail + ")";
        break;
    }
  }
  return f;
}

void Client::handle_line(std::string_view line) {
  if (line.empty() || line == "\r") return;
  wire::Message message;
  try {
    message = wire::decode_message(line);
  } catch (const Error& e) {
    wire::ApiResponse r{0, false, json::object(), wire::ApiError{std::string(to_string(e.code())), e.what()}};
    send(wire::encode(wire::ApiEnvelope{r}));
    return;
  }
  auto self = shared_from_this();
  switch (message.channel) {
    case wire::Channel::api: {
      wire::ApiResponse response;
      try {
        auto envelope = wire::api_from_json(message.body);
        const auto* request = std::get_if<wire::ApiRequest>(&envelope);
        if (!request) throw Error(ErrorCode::bad_request, "clients send requests, not responses");
        response = gateway_.handle_api(*request, self);
      } catch (const Error& e) {
        response = wire::ApiResponse{0, false, json::object(),
                                     wire::ApiError{std::string(to_string(e.code())), e.what()}};
      }
      send(wire::encode(wire::ApiEnvelope{response}));
      break;
    }
    case wire::Channel::term: {
      wire::TermFrame frame;
      try {
        frame = wire::term_from_json(message.body);
      } catch (const Error& e) {
        send(wire::encode(close_term("", std::string(to_string(e.code())) + ": " + e.what())));
        return;
      }
      gateway_.handle_term(frame, self);
      break;
    }
    case wire::Channel::sim:
      send(wire::encode(close_sim("", 0, "bad_request: the sim channel is server-push only")));
      break;
  }
}

void Client::send(const std::string& line) {
  std::lock_guard lock(mu_);
  if (!closed_ && sink_) sink_(line);
}

void Client::close() {
  {
    std::lock_guard lock(mu_);
    if (closed_) return;
    closed_ = true;
  }
  gateway_.disconnect(*this);
}

bool Client::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

Gateway::Gateway(std::shared_ptr<const registry::Catalog> catalog, std::unique_ptr<progression::Store> store,
                 Config config, std::shared_ptr<Clock> clock, std::shared_ptr<TokenSource> tokens)
    : catalog_(std::move(catalog)),
      store_(std::move(store)),
      config_(config),
      clock_(std::move(clock)),
      backend_(config.instance_cap, std::move(tokens)) {
  for (const auto& m : catalog_->manifests()) bases_[m.id] = backend_.build_base(m, catalog_->seed());
}

Gateway::~Gateway() { shutdown(); }

std::shared_ptr<Client> Gateway::connect(Client::Sink sink) {
  return std::make_shared<Client>(*this, std::move(sink));
}

json Gateway::catalog_view() const {
  json list = json::array();
  for (const auto& m : catalog_->manifests()) {
    list.push_back({{"id", m.id},
                    {"title", m.title},
                    {"goal", m.goal},
                    {"cwe", m.cwe ? json(*m.cwe) : json(nullptr)},
                    {"network_profile", registry::to_string(m.network_profile)}});
  }
  return {{"scenarios", list}};
}

std::string Gateway::require_session(const wire::ApiRequest& request) const {
  if (!request.auth || !store_->has_session(*request.auth))
    throw Error(ErrorCode::auth, "missing or unknown session token");
  return *request.auth;
}

wire::ApiResponse Gateway::handle_api(const wire::ApiRequest& request, const std::shared_ptr<Client>& client) {
  wire::ApiResponse response;
  response.id = request.id;
  try {
    response.body = dispatch(request, client);
  } catch (const Error& e) {
    response.ok = false;
    response.error = wire::ApiError{std::string(to_string(e.code())), e.what()};
  } catch (const std::exception& e) {
    response.ok = false;
    response.error = wire::ApiError{"internal", e.what()};
  }
  return response;
}

json Gateway::dispatch(const wire::ApiRequest& r, const std::shared_ptr<Client>& client) {
  const auto& op = r.op;
  if (op == "catalog") return catalog_view();
  if (op == "leaderboard") {
    json rows = json::array();
    for (const auto& row : store_->leaderboard())
      rows.push_back({{"rank", row.rank},
                      {"handle", row.handle},
                      {"score", row.score},
                      {"solved", row.solved_count},
                      {"total_time_ms", row.total_time_ms}});
    return {{"rows", rows}};
  }
  if (op == "create_session") {
    auto s = store_->create_session(string_arg(r.args, "handle"));
    return {{"session", s.session_id}, {"handle", s.handle}};
  }
  if (op == "session_state") return op_session_state(require_session(r));
  if (op == "spawn") return op_spawn(require_session(r), scenario_arg(r.args));
  if (op == "submit_flag") return op_submit(require_session(r), r.args);
  if (op == "redeem") {
    auto session = require_session(r);
    auto verdict = store_->redeem_password(session, scenario_arg(r.args), string_arg(r.args, "password"));
    return {{"verdict", progression::to_string(verdict)}};
  }
  if (op == "attach_terminal") return op_attach_terminal(string_arg(r.args, "endpoint"), client);
  if (op == "attach_sim") return op_attach_sim(string_arg(r.args, "endpoint"), client);
  if (op == "tick" && config_.manual_tick) {
    std::uint64_t n = 1;
    if (r.args.contains("n")) {
      if (!r.args["n"].is_number_unsigned()) throw Error(ErrorCode::bad_request, "args.n must be a count");
      n = std::min<std::uint64_t>(r.args["n"].get<std::uint64_t>(), 10000);
    }
    tick(n);
    return {{"ticked", n}};
  }
  throw Error(ErrorCode::unknown_op, "unknown op '" + op + "'");
}

json Gateway::op_session_state(const std::string& session) {
  auto s = store_->session(session);
  json solved = json::object();
  for (const auto& [id, ts] : s.solved) solved[std::to_string(id)] = ts;
  json wrong = json::object();
  for (const auto& [id, n] : s.wrong_submissions) wrong[std::to_string(id)] = n;
  json instances = json::array();
  {
    std::lock_guard lock(mu_);
    for (const auto& [key, live] : live_) {
      if (key.first != session) continue;
      instances.push_back({{"scenario_id", key.second},
                           {"instance_id", live->instance->id()},
                           {"terminal", live->instance->endpoints().terminal},
                           {"simulation", live->instance->endpoints().simulation}});
    }
  }
  return {{"handle", s.handle},
          {"unlocked", s.unlocked},
          {"solved", solved},
          {"wrong_submissions", wrong},
          {"score", progression::compute_score(s)},
          {"instances", instances}};
}

json Gateway::op_spawn(const std::string& session, ScenarioId id) {
  auto base = bases_.find(id);
  if (base == bases_.end()) throw Error(ErrorCode::unknown_scenario, "no scenario " + std::to_string(id));
  if (!store_->session(session).unlocked.contains(id))
    throw Error(ErrorCode::locked, "scenario " + std::to_string(id) + " is locked");

  std::shared_ptr<Live> old;
  {
    std::lock_guard lock(mu_);
    if (auto it = live_.find({session, id}); it != live_.end()) old = it->second;
  }
  if (old) retire(old, "torn_down: instance respawned");

  auto live = std::make_shared<Live>();
  live->key = {session, id};
  live->instance = backend_.spawn_instance(base->second);
  live->shell = std::make_unique<shell::ShellContext>(live->instance);
  live->last_activity = clock_->now_ms();
  std::weak_ptr<Live> weak = live;
  {
    auto ilock = live->instance->lock();
    if (live->instance->runtime().has_world()) {
      live->last_world = live->instance->runtime().world();
      live->last_world->tick = 0;
    }
    live->instance->set_tick_observer([weak](std::uint64_t, const std::vector<challenges::Event>& events) {
      auto l = weak.lock();
      if (!l) return;
      std::shared_ptr<Client> viewer;
      std::optional<world::WorldState> current;
      if (l->instance->runtime().has_world()) {
        current = l->instance->runtime().world();
        current->tick = 0;  // the step counter alone is not a visible change
      }
      {
        std::lock_guard lock(l->mu);
        bool changed = !events.empty() || current != l->last_world;
        l->last_world = current;
        if (!changed) return;
        viewer = l->sim_client.lock();
      }
      if (viewer) viewer->send(wire::encode(make_sim_frame(*l->instance, events)));
    });
  }
  {
    std::lock_guard lock(mu_);
    live_[live->key] = live;
    by_terminal_[live->instance->endpoints().terminal] = live;
    by_sim_[live->instance->endpoints().simulation] = live;
  }
  store_->record_spawn(session, id);
  return {{"instance_id", live->instance->id()},
          {"terminal", live->instance->endpoints().terminal},
          {"simulation", live->instance->endpoints().simulation}};
}

json Gateway::op_submit(const std::string& session, const json& args) {
  auto id = scenario_arg(args);
  auto flag = string_arg(args, "flag");
  if (!catalog_->contains(id)) throw Error(ErrorCode::unknown_scenario, "no scenario " + std::to_string(id));
  {
    std::lock_guard lock(mu_);
    auto now = clock_->now_ms();
    auto& recent = submissions_[session];
    while (!recent.empty() && now - recent.front() >= config_.submit_window_ms) recent.pop_front();
    if (recent.size() >= config_.submit_limit)
      throw Error(ErrorCode::rate_limited, "at most " + std::to_string(config_.submit_limit) +
                                               " flag submissions per minute");
    recent.push_back(now);
  }
  auto result = store_->submit_flag(session, id, flag);
  json body{{"verdict", progression::to_string(result.verdict)}};
  if (result.password) body["password"] = *result.password;
  return body;
}

std::shared_ptr<Gateway::Live> Gateway::find_terminal(const std::string& endpoint) const {
  std::lock_guard lock(mu_);
  auto it = by_terminal_.find(endpoint);
  if (it == by_terminal_.end()) throw Error(ErrorCode::stale_endpoint, "stale terminal endpoint");
  return it->second;
}

std::shared_ptr<Gateway::Live> Gateway::find_sim(const std::string& endpoint) const {
  std::lock_guard lock(mu_);
  auto it = by_sim_.find(endpoint);
  if (it == by_sim_.end()) throw Error(ErrorCode::stale_endpoint, "stale simulation endpoint");
  return it->second;
}

json Gateway::op_attach_terminal(const std::string& endpoint, const std::shared_ptr<Client>& client) {
  if (!client) throw Error(ErrorCode::bad_request, "attach requires a connection");
  auto live = find_terminal(endpoint);
  std::shared_ptr<Client> evicted;
  {
    std::lock_guard lock(live->mu);
    evicted = live->term_client.lock();
    live->term_client = client;
    live->last_activity = clock_->now_ms();
  }
  if (evicted && evicted != client)
    evicted->send(wire::encode(close_term(endpoint, "evicted: terminal attached from another connection")));
  return {{"endpoint", endpoint}, {"scenario_id", live->key.second}};
}

json Gateway::op_attach_sim(const std::string& endpoint, const std::shared_ptr<Client>& client) {
  if (!client) throw Error(ErrorCode::bad_request, "attach requires a connection");
  auto live = find_sim(endpoint);
  std::shared_ptr<Client> evicted;
  wire::SimFrame snapshot;
  {
    auto ilock = live->instance->lock();
    live->instance->require_running();
    snapshot = make_sim_frame(*live->instance, {});
    std::lock_guard lock(live->mu);
    evicted = live->sim_client.lock();
    live->sim_client = client;
    live->last_activity = clock_->now_ms();
    if (evicted && evicted != client)
      evicted->send(wire::encode(close_sim(endpoint, snapshot.tick, "evicted: viewer attached from another connection")));
    // Queued while the instance lock is held so no tick frame can overtake it.
    client->send(wire::encode(snapshot));
  }
  return {{"endpoint", endpoint}, {"scenario_id", live->key.second}, {"tick", snapshot.tick}};
}

void Gateway::handle_term(const wire::TermFrame& frame, const std::shared_ptr<Client>& client) {
  if (frame.direction != wire::Direction::input) {
    client->send(wire::encode(close_term(frame.endpoint, "bad_request: clients send input frames")));
    return;
  }
  std::shared_ptr<Live> live;
  try {
    live = find_terminal(frame.endpoint);
  } catch (const Error&) {
    client->send(wire::encode(close_term(frame.endpoint, "stale_endpoint")));
    return;
  }
  {
    std::lock_guard lock(live->mu);
    if (live->term_client.lock() != client) {
      client->send(wire::encode(close_term(frame.endpoint, "not_attached: attach_terminal first")));
      return;
    }
    live->last_activity = clock_->now_ms();
  }
  std::lock_guard shell_lock(live->shell_mu);
  std::string output;
  try {
    output = live->shell->exec(frame.data);
  } catch (const Error& e) {
    client->send(wire::encode(close_term(frame.endpoint, std::string(to_string(e.code())))));
    return;
  }
  client->send(wire::encode(wire::TermFrame{frame.endpoint, wire::Direction::output, output, std::nullopt}));
}

std::vector<std::shared_ptr<Gateway::Live>> Gateway::snapshot_live() const {
  std::lock_guard lock(mu_);
  std::vector<std::shared_ptr<Live>> out;
  for (const auto& [key, live] : live_) out.push_back(live);
  return out;
}

void Gateway::tick(std::uint64_t n) {
  for (const auto& live : snapshot_live()) {
    auto ilock = live->instance->lock();
    if (live->instance->status() != sandbox::Status::running) continue;
    live->instance->advance(n);
  }
}

void Gateway::retire(const std::shared_ptr<Live>& live, const std::string& reason) {
  {
    std::lock_guard lock(mu_);
    if (auto it = live_.find(live->key); it != live_.end() && it->second == live) live_.erase(it);
    by_terminal_.erase(live->instance->endpoints().terminal);
    by_sim_.erase(live->instance->endpoints().simulation);
  }
  std::uint64_t tick = 0;
  {
    auto ilock = live->instance->lock();
    tick = live->instance->tick();
  }
  try {
    backend_.teardown(*live->instance);
  } catch (const Error&) {
  }
  std::shared_ptr<Client> term, sim;
  {
    std::lock_guard lock(live->mu);
    if (live->retired) return;
    live->retired = true;
    term = live->term_client.lock();
    sim = live->sim_client.lock();
    live->term_client.reset();
    live->sim_client.reset();
  }
  if (term) term->send(wire::encode(close_term(live->instance->endpoints().terminal, reason)));
  if (sim) sim->send(wire::encode(close_sim(live->instance->endpoints().simulation, tick, reason)));
}

std::size_t Gateway::reap_idle() {
  auto now = clock_->now_ms();
  std::size_t reaped = 0;
  for (const auto& live : snapshot_live()) {
    std::int64_t last;
    {
      std::lock_guard lock(live->mu);
      last = live->last_activity;
    }
    if (now - last > config_.idle_timeout_ms) {
      retire(live, "torn_down: idle timeout");
      ++reaped;
    }
  }
  return reaped;
}

void Gateway::disconnect(const Client& client) {
  for (const auto& live : snapshot_live()) {
    std::lock_guard lock(live->mu);
    if (live->term_client.lock().get() == &client) live->term_client.reset();
    if (live->sim_client.lock().get() == &client) live->sim_client.reset();
  }
}

void Gateway::shutdown() {
  for (const auto& live : snapshot_live()) retire(live, "torn_down: server shutting down");
  if (store_) store_->flush();
}

std::size_t Gateway::live_instances() const {
  std::lock_guard lock(mu_);
  return live_.size();
}

}  // namespace rctf::gateway
