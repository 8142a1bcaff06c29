#include <doctest.h>

#include <atomic>
#include <thread>

#include "rctf/error.hpp"
#include "rctf/gateway.hpp"
#include "support.hpp"

using namespace rctf;
using namespace rctf::gateway;
using nlohmann::json;
using support::contains;

namespace {

struct Peer {
  std::shared_ptr<Client> client;
  std::vector<std::string> lines;
  std::mutex mu;

  std::vector<std::string> take() {
    std::lock_guard lock(mu);
    return std::exchange(lines, {});
  }
};

struct Harness {
  explicit Harness(registry::Catalog c = support::shipped(), Config config = {})
      : catalog(std::make_shared<const registry::Catalog>(std::move(c))),
        clock(std::make_shared<ManualClock>(0)) {
    auto store = std::make_unique<progression::Store>(catalog, progression::EventLog(), clock,
                                                      std::make_shared<SequentialTokenSource>(1));
    gw = std::make_unique<Gateway>(catalog, std::move(store), config, clock, std::make_shared<SequentialTokenSource>(2));
  }

  std::unique_ptr<Peer> connect() {
    auto p = std::make_unique<Peer>();
    auto* raw = p.get();
    p->client = gw->connect([raw](const std::string& line) {
      std::lock_guard lock(raw->mu);
      raw->lines.push_back(line);
    });
    return p;
  }

  // Sends one API request; returns its response and leaves any other lines
  // in the peer's buffer.
  wire::ApiResponse call(Peer& p, const std::string& op, json args = json::object(),
                         std::optional<std::string> auth = std::nullopt) {
    wire::ApiRequest r{++next_id, op, std::move(args), std::move(auth)};
    p.client->handle_line(wire::encode(wire::ApiEnvelope{r}));
    std::lock_guard lock(p.mu);
    for (auto it = p.lines.begin(); it != p.lines.end(); ++it) {
      auto m = wire::decode_message(*it);
      if (m.channel != wire::Channel::api) continue;
      auto resp = std::get<wire::ApiResponse>(wire::api_from_json(m.body));
      p.lines.erase(it);
      REQUIRE(resp.id == r.id);
      return resp;
    }
    FAIL("no response");
    return {};
  }

  json ok(Peer& p, const std::string& op, json args = json::object(), std::optional<std::string> auth = std::nullopt) {
    auto r = call(p, op, std::move(args), std::move(auth));
    INFO(op << ": " << (r.error ? r.error->message : ""));
    REQUIRE(r.ok);
    return r.body;
  }

  std::string error(Peer& p, const std::string& op, json args = json::object(),
                    std::optional<std::string> auth = std::nullopt) {
    auto r = call(p, op, std::move(args), std::move(auth));
    REQUIRE_FALSE(r.ok);
    REQUIRE(r.error.has_value());
    return r.error->code;
  }

  std::string session(Peer& p, const std::string& handle) { return ok(p, "create_session", {{"handle", handle}})["session"]; }

  std::vector<wire::TermFrame> term(Peer& p, const std::string& endpoint, const std::string& line) {
    p.client->handle_line(wire::encode(wire::TermFrame{endpoint, wire::Direction::input, line, std::nullopt}));
    std::vector<wire::TermFrame> out;
    for (const auto& l : p.take()) {
      auto m = wire::decode_message(l);
      if (m.channel == wire::Channel::term) out.push_back(wire::term_from_json(m.body));
    }
    return out;
  }

  static std::vector<wire::SimFrame> sims(const std::vector<std::string>& lines) {
    std::vector<wire::SimFrame> out;
    for (const auto& l : lines) {
      auto m = wire::decode_message(l);
      if (m.channel == wire::Channel::sim) out.push_back(wire::sim_from_json(m.body));
    }
    return out;
  }

  std::shared_ptr<const registry::Catalog> catalog;
  std::shared_ptr<ManualClock> clock;
  std::unique_ptr<Gateway> gw;
  std::atomic<std::uint64_t> next_id{0};
};

}  // namespace

TEST_CASE("catalog lists eight scenarios without secrets") {
  Harness h;
  auto p = h.connect();
  auto body = h.ok(*p, "catalog");
  auto dump = body.dump();
  REQUIRE(body["scenarios"].size() == 8);
  for (const auto& s : body["scenarios"]) {
    CHECK(s.contains("title"));
    CHECK(s.contains("goal"));
    CHECK(s.contains("cwe"));
    CHECK_FALSE(s.contains("params"));
  }
  for (const auto& m : h.catalog->manifests()) {
    CHECK_FALSE(contains(dump, m.flag));
    CHECK_FALSE(contains(dump, m.unlock_password));
    for (const auto& [k, v] : m.params)
      if (k == "trigger_word" || k == "credential" || k == "guard_constant") CHECK_FALSE(contains(dump, v));
  }
}

TEST_CASE("auth, unknown ops and malformed input") {
  Harness h;
  auto p = h.connect();
  CHECK(h.error(*p, "submit_flag", {{"scenario_id", 1}, {"flag", "x"}}, "deadbeef") == "auth");
  CHECK(h.error(*p, "session_state") == "auth");
  CHECK(h.error(*p, "teleport") == "unknown_op");
  auto token = h.session(*p, "neo");
  CHECK(h.error(*p, "create_session", {{"handle", "neo"}}) == "duplicate_handle");
  CHECK(h.error(*p, "spawn", {{"scenario_id", "one"}}, token) == "bad_request");
  CHECK(h.error(*p, "spawn", {{"scenario_id", 42}}, token) == "unknown_scenario");

  p->client->handle_line("this is not json");
  auto lines = p->take();
  REQUIRE(lines.size() == 1);
  auto resp = std::get<wire::ApiResponse>(wire::decode_api(lines[0]));
  CHECK_FALSE(resp.ok);
  CHECK(resp.error->code == "bad_request");
}

TEST_CASE("spawn, locked scenarios and respawn") {
  Harness h;
  auto p = h.connect();
  auto token = h.session(*p, "neo");
  CHECK(h.error(*p, "spawn", {{"scenario_id", 2}}, token) == "locked");
  auto first = h.ok(*p, "spawn", {{"scenario_id", 1}}, token);
  CHECK(first["terminal"].get<std::string>().size() == 32);
  CHECK(first["terminal"] != first["simulation"]);
  CHECK(h.gw->live_instances() == 1);

  auto second = h.ok(*p, "spawn", {{"scenario_id", 1}}, token);
  CHECK(h.gw->live_instances() == 1);
  CHECK(h.error(*p, "attach_terminal", {{"endpoint", first["terminal"]}}) == "stale_endpoint");
  CHECK(h.error(*p, "attach_sim", {{"endpoint", first["simulation"]}}) == "stale_endpoint");
  CHECK(h.ok(*p, "attach_terminal", {{"endpoint", second["terminal"]}})["scenario_id"] == 1);

  auto state = h.ok(*p, "session_state", json::object(), token);
  REQUIRE(state["instances"].size() == 1);
  CHECK(state["instances"][0]["terminal"] == second["terminal"]);
}

TEST_CASE("terminal round trip, ordering and eviction") {
  Harness h;
  auto a = h.connect();
  auto b = h.connect();
  auto token = h.session(*a, "neo");
  auto ep = h.ok(*a, "spawn", {{"scenario_id", 1}}, token)["terminal"].get<std::string>();

  auto unattached = h.term(*a, ep, "topics");
  REQUIRE(unattached.size() == 1);
  CHECK(unattached[0].closed.has_value());

  h.ok(*a, "attach_terminal", {{"endpoint", ep}});
  auto out = h.term(*a, ep, "topics");
  REQUIRE(out.size() == 1);
  CHECK(out[0].direction == wire::Direction::output);
  CHECK(contains(out[0].data, "/chatter"));

  for (int i = 0; i < 5; ++i) a->client->handle_line(wire::encode(wire::TermFrame{ep, wire::Direction::input, "help", {}}));
  a->client->handle_line(wire::encode(wire::TermFrame{ep, wire::Direction::input, "nope", {}}));
  auto frames = a->take();
  REQUIRE(frames.size() == 6);
  CHECK(contains(wire::decode_term(frames.back()).data, "nope: command not found"));

  h.ok(*b, "attach_terminal", {{"endpoint", ep}});
  auto notice = a->take();
  REQUIRE(notice.size() == 1);
  auto closed = wire::decode_term(notice[0]);
  CHECK(closed.closed.has_value());
  CHECK(contains(*closed.closed, "evicted"));
  CHECK(h.term(*a, ep, "topics")[0].closed.has_value());
  CHECK(contains(h.term(*b, ep, "topics")[0].data, "/chatter"));

  auto stale = h.term(*a, "0123456789abcdef0123456789abcdef", "topics");
  REQUIRE(stale.size() == 1);
  CHECK(stale[0].closed == std::optional<std::string>("stale_endpoint"));
}

TEST_CASE("sim stream follows the kinematics") {
  auto docs = registry::read_catalog_dir(RCTF_SCENARIO_DIR);
  auto catalog = registry::load_catalog(docs, 42);
  auto manifests = catalog.manifests();
  auto& safety = manifests.at(3);
  REQUIRE(safety.kind == registry::ScenarioKind::safety_sim);
  safety.params["max_speed"] = "1.0";
  safety.params["human_x"] = "1.0";
  safety.params["human_y"] = "0";
  std::vector<std::string> edited;
  for (const auto& m : manifests) edited.push_back(registry::serialize_manifest(m));
  Harness h(registry::load_catalog(edited, 42));

  auto p = h.connect();
  auto token = h.session(*p, "neo");
  // Unlock through scenario 4 the honest way.
  for (progression::ScenarioId id = 1; id < 4; ++id) {
    auto pw = h.ok(*p, "submit_flag", {{"scenario_id", id}, {"flag", h.catalog->at(id).flag}}, token)["password"];
    h.ok(*p, "redeem", {{"scenario_id", id + 1}, {"password", pw}}, token);
  }
  auto spawned = h.ok(*p, "spawn", {{"scenario_id", 4}}, token);
  h.ok(*p, "attach_terminal", {{"endpoint", spawned["terminal"]}});
  h.ok(*p, "attach_sim", {{"endpoint", spawned["simulation"]}});
  auto snapshot = Harness::sims(p->take());
  REQUIRE(snapshot.size() == 1);
  REQUIRE(snapshot[0].world.has_value());
  CHECK(snapshot[0].world->ee_x == 0.0);
  CHECK(snapshot[0].radius == std::optional<double>(0.15));

  // Idle ticks change nothing observable: no frames.
  h.gw->tick(3);
  CHECK(Harness::sims(p->take()).empty());

  h.term(*p, spawned["terminal"], "drive 1 0");
  std::vector<wire::SimFrame> frames;
  for (int i = 0; i < 12; ++i) {
    h.gw->tick(1);
    for (auto& f : Harness::sims(p->take())) frames.push_back(f);
  }
  REQUIRE(frames.size() >= 9);
  for (std::size_t i = 0; i < 9; ++i) {
    REQUIRE(frames[i].world.has_value());
    CHECK(frames[i].world->ee_x == doctest::Approx(0.1 * static_cast<double>(i + 1)).epsilon(1e-12));
    if (i > 0) CHECK(frames[i].tick > frames[i - 1].tick);
  }
  CHECK(frames[8].world->collision);
  CHECK(frames[8].flag_event.has_value());
  CHECK_FALSE(frames[7].world->collision);
  for (const auto& f : frames) {
    auto line = wire::encode(f);
    for (const auto& m : h.catalog->manifests()) {
      CHECK_FALSE(contains(line, m.flag));
      CHECK_FALSE(contains(line, m.unlock_password));
    }
  }
}

TEST_CASE("submit rate limit") {
  Harness h;
  auto p = h.connect();
  auto token = h.session(*p, "neo");
  for (int i = 0; i < 10; ++i)
    CHECK(h.ok(*p, "submit_flag", {{"scenario_id", 1}, {"flag", "RCTF{0000000000000000}"}}, token)["verdict"] == "wrong");
  CHECK(h.error(*p, "submit_flag", {{"scenario_id", 1}, {"flag", h.catalog->at(1).flag}}, token) == "rate_limited");
  h.clock->advance_ms(60 * 1000);
  CHECK(h.ok(*p, "submit_flag", {{"scenario_id", 1}, {"flag", h.catalog->at(1).flag}}, token)["verdict"] == "correct");
  CHECK(h.ok(*p, "session_state", json::object(), token)["score"] == 50);
}

TEST_CASE("leaderboard delegation is exact") {
  Harness h;
  auto p = h.connect();
  auto a = h.session(*p, "alice");
  auto b = h.session(*p, "bob");
  h.clock->advance_ms(5000);
  h.ok(*p, "submit_flag", {{"scenario_id", 1}, {"flag", h.catalog->at(1).flag}}, b);
  h.clock->advance_ms(5000);
  h.ok(*p, "submit_flag", {{"scenario_id", 1}, {"flag", h.catalog->at(1).flag}}, a);
  auto rows = h.ok(*p, "leaderboard")["rows"];
  auto expected = h.gw->store().leaderboard();
  REQUIRE(rows.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(rows[i]["rank"] == expected[i].rank);
    CHECK(rows[i]["handle"] == expected[i].handle);
    CHECK(rows[i]["score"] == expected[i].score);
    CHECK(rows[i]["solved"] == expected[i].solved_count);
    CHECK(rows[i]["total_time_ms"] == expected[i].total_time_ms);
  }
  CHECK(rows[0]["handle"] == "bob");
}

TEST_CASE("idle instances are reaped and their streams closed") {
  Config cfg;
  cfg.idle_timeout_ms = 1000;
  Harness h(support::shipped(), cfg);
  auto p = h.connect();
  auto token = h.session(*p, "neo");
  auto spawned = h.ok(*p, "spawn", {{"scenario_id", 1}}, token);
  h.ok(*p, "attach_terminal", {{"endpoint", spawned["terminal"]}});
  h.clock->advance_ms(500);
  CHECK(h.gw->reap_idle() == 0);
  h.clock->advance_ms(1500);
  CHECK(h.gw->reap_idle() == 1);
  CHECK(h.gw->live_instances() == 0);
  auto lines = p->take();
  REQUIRE(lines.size() == 1);
  CHECK(contains(*wire::decode_term(lines[0]).closed, "idle"));
  CHECK(h.gw->backend().live_instances() == 0);
}

TEST_CASE("disconnected clients leave instances intact") {
  Harness h;
  auto p = h.connect();
  auto token = h.session(*p, "neo");
  auto spawned = h.ok(*p, "spawn", {{"scenario_id", 1}}, token);
  h.ok(*p, "attach_sim", {{"endpoint", spawned["simulation"]}});
  p->client->close();
  CHECK_NOTHROW(h.gw->tick(20));
  auto q = h.connect();
  h.ok(*q, "attach_terminal", {{"endpoint", spawned["terminal"]}});
  CHECK(contains(h.term(*q, spawned["terminal"], "echo-topic /chatter")[0].data, h.catalog->at(1).flag));
}

TEST_CASE("concurrent sessions stay isolated") {
  Harness h;
  std::vector<std::thread> threads;
  std::atomic<int> correct{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      auto p = h.connect();
      auto token = h.session(*p, "player" + std::to_string(t));
      auto spawned = h.ok(*p, "spawn", {{"scenario_id", 1}}, token);
      h.ok(*p, "attach_terminal", {{"endpoint", spawned["terminal"]}});
      auto out = h.term(*p, spawned["terminal"], "echo-topic /chatter");
      auto flag = out.at(0).data.substr(out.at(0).data.find("RCTF{"), 22);
      if (h.ok(*p, "submit_flag", {{"scenario_id", 1}, {"flag", flag}}, token)["verdict"] == "correct") ++correct;
    });
  }
  for (auto& t : threads) t.join();
  CHECK(correct == 8);
  CHECK(h.gw->live_instances() == 8);
}
