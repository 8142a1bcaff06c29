#include <doctest.h>

#include <algorithm>
#include <random>

#include "rctf/error.hpp"
#include "rctf/progression.hpp"
#include "support.hpp"

using namespace rctf;
using namespace rctf::progression;

namespace {

struct Env {
  Env()
      : catalog(std::make_shared<const registry::Catalog>(support::shipped())),
        clock(std::make_shared<ManualClock>(1000)),
        store(catalog, EventLog(), clock, std::make_shared<SequentialTokenSource>()) {}

  const std::string& flag(ScenarioId id) const { return catalog->at(id).flag; }
  const std::string& password(ScenarioId id) const { return catalog->at(id).unlock_password; }

  std::shared_ptr<const registry::Catalog> catalog;
  std::shared_ptr<ManualClock> clock;
  Store store;
};

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::io;
}

LogEvent ev(std::uint64_t seq, std::int64_t ts, std::string kind, nlohmann::json body) {
  return LogEvent{seq, ts, std::move(kind), std::move(body)};
}

}  // namespace

TEST_CASE("create_session") {
  Env env;
  auto s = env.store.create_session("neo");
  CHECK(s.unlocked == std::set<ScenarioId>{1});
  CHECK(s.solved.empty());
  CHECK(s.session_id.size() == 32);
  CHECK(code_of([&] { env.store.create_session("neo"); }) == ErrorCode::duplicate_handle);
  CHECK(code_of([&] { env.store.create_session(std::string(33, 'a')); }) == ErrorCode::invalid_handle);
  CHECK(code_of([&] { env.store.create_session(""); }) == ErrorCode::invalid_handle);
  CHECK_NOTHROW(env.store.create_session(std::string(32, 'b')));
}

TEST_CASE("submit_flag contract") {
  Env env;
  auto id = env.store.create_session("neo").session_id;

  auto locked = env.store.submit_flag(id, 3, env.flag(3));
  CHECK(locked.verdict == Verdict::locked);
  CHECK_FALSE(locked.password.has_value());

  auto wrong = env.store.submit_flag(id, 1, "RCTF{0000000000000000}");
  CHECK(wrong.verdict == Verdict::wrong);
  CHECK(env.store.session(id).wrong_submissions.at(1) == 1);

  auto right = env.store.submit_flag(id, 1, env.flag(1));
  CHECK(right.verdict == Verdict::correct);
  CHECK(right.password == env.password(1));
  CHECK(compute_score(env.store.session(id)) == 95);

  auto again = env.store.submit_flag(id, 1, env.flag(1));
  CHECK(again.verdict == Verdict::already_solved);
  auto again_wrong = env.store.submit_flag(id, 1, "nope");
  CHECK(again_wrong.verdict == Verdict::already_solved);
  CHECK(compute_score(env.store.session(id)) == 95);

  CHECK(code_of([&] { env.store.submit_flag(id, 99, "x"); }) == ErrorCode::unknown_scenario);
  CHECK(code_of([&] { env.store.submit_flag("bogus", 1, "x"); }) == ErrorCode::auth);
}

TEST_CASE("redeem_password") {
  Env env;
  auto id = env.store.create_session("neo").session_id;
  CHECK(code_of([&] { env.store.redeem_password(id, 2, env.password(1)); }) == ErrorCode::out_of_order);
  env.store.submit_flag(id, 1, env.flag(1));
  CHECK(code_of([&] { env.store.redeem_password(id, 3, env.password(2)); }) == ErrorCode::out_of_order);
  CHECK(env.store.redeem_password(id, 2, "wrong") == RedeemVerdict::wrong);
  CHECK(env.store.session(id).unlocked == std::set<ScenarioId>{1});
  CHECK(env.store.redeem_password(id, 2, env.password(1)) == RedeemVerdict::unlocked);
  CHECK(env.store.session(id).unlocked == std::set<ScenarioId>{1, 2});
  CHECK(env.store.redeem_password(id, 2, env.password(1)) == RedeemVerdict::already_unlocked);
  CHECK(code_of([&] { env.store.redeem_password(id, 9, "x"); }) == ErrorCode::unknown_scenario);
}

TEST_CASE("score formula") {
  CHECK(scenario_points(0) == 100);
  CHECK(scenario_points(3) == 85);
  CHECK(scenario_points(18) == 10);
  CHECK(scenario_points(30) == 10);
  Session s;
  s.solved = {{1, 0}, {2, 0}};
  s.wrong_submissions = {{1, 3}, {3, 40}};
  CHECK(compute_score(s) == 185);
}

TEST_CASE("leaderboard ordering") {
  CHECK(leaderboard(ProgressionState{}).empty());
  ProgressionState st;
  std::uint64_t seq = 0;
  for (auto [sid, handle] : {std::pair{"a", "A"}, std::pair{"b", "B"}})
    st.apply(ev(++seq, 0, "session_created", {{"session_id", sid}, {"handle", handle}}));
  // Both solve 1 and 2; A takes 300 s in total, B 120 s.
  st.apply(ev(++seq, 100000, "flag_submitted", {{"session_id", "a"}, {"scenario_id", 1}, {"verdict", "correct"}}));
  st.apply(ev(++seq, 100000, "password_redeemed", {{"session_id", "a"}, {"scenario_id", 2}}));
  st.apply(ev(++seq, 300000, "flag_submitted", {{"session_id", "a"}, {"scenario_id", 2}, {"verdict", "correct"}}));
  st.apply(ev(++seq, 60000, "flag_submitted", {{"session_id", "b"}, {"scenario_id", 1}, {"verdict", "correct"}}));
  st.apply(ev(++seq, 60000, "password_redeemed", {{"session_id", "b"}, {"scenario_id", 2}}));
  st.apply(ev(++seq, 120000, "flag_submitted", {{"session_id", "b"}, {"scenario_id", 2}, {"verdict", "correct"}}));
  auto rows = leaderboard(st);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].handle == "B");
  CHECK(rows[0].rank == 1);
  CHECK(rows[0].score == 200);
  CHECK(rows[0].total_time_seconds() == doctest::Approx(120.0));
  CHECK(rows[1].total_time_seconds() == doctest::Approx(300.0));
}

TEST_CASE("leaderboard equals a brute-force fold over the log") {
  Env env;
  std::mt19937_64 rng(5);
  std::vector<std::string> ids;
  for (int i = 0; i < 50; ++i) ids.push_back(env.store.create_session("player" + std::to_string(i)).session_id);
  for (int step = 0; step < 2000; ++step) {
    env.clock->advance_ms(static_cast<std::int64_t>(rng() % 5000));
    const auto& id = ids[rng() % ids.size()];
    auto s = env.store.session(id);
    ScenarioId target = static_cast<ScenarioId>(1 + rng() % 8);
    switch (rng() % 4) {
      case 0: env.store.submit_flag(id, target, env.flag(target)); break;
      case 1: env.store.submit_flag(id, target, "RCTF{ffffffffffffffff}"); break;
      case 2: env.store.record_spawn(id, target); break;
      case 3:
        if (target > 1 && s.solved.contains(target - 1))
          env.store.redeem_password(id, target, rng() % 3 ? env.password(target - 1) : "nope");
        break;
    }
  }

  // Brute force: fold the raw log lines into per-handle rows independently.
  struct Row {
    std::string handle;
    std::int64_t created = 0;
    std::map<ScenarioId, std::int64_t> unlocked_at, spawn, solved;
    std::map<ScenarioId, int> wrong;
  };
  std::map<std::string, Row> rows;
  for (const auto& e : parse_log(env.store.log_text())) {
    auto sid = e.body["session_id"].get<std::string>();
    if (e.kind == "session_created") {
      rows[sid] = Row{e.body["handle"].get<std::string>(), e.ts, {{1, e.ts}}, {}, {}, {}};
      continue;
    }
    auto& r = rows[sid];
    auto scen = e.body["scenario_id"].get<ScenarioId>();
    if (e.kind == "instance_spawned" && !r.spawn.contains(scen)) r.spawn[scen] = e.ts;
    if (e.kind == "password_redeemed" && !r.unlocked_at.contains(scen)) r.unlocked_at[scen] = e.ts;
    if (e.kind == "flag_submitted") {
      if (e.body["verdict"] == "correct") r.solved[scen] = e.ts;
      if (e.body["verdict"] == "wrong") ++r.wrong[scen];
    }
  }
  std::vector<LeaderboardRow> expected;
  for (auto& [sid, r] : rows) {
    LeaderboardRow row;
    row.handle = r.handle;
    for (auto [scen, ts] : r.solved) {
      row.score += static_cast<std::uint64_t>(std::max(100 - 5 * r.wrong[scen], 10));
      std::int64_t start = r.spawn.contains(scen) ? r.spawn[scen] : r.unlocked_at[scen];
      row.total_time_ms += std::max<std::int64_t>(0, ts - start);
    }
    row.solved_count = r.solved.size();
    expected.push_back(row);
  }
  std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
    return std::tie(b.score, a.total_time_ms, a.handle) < std::tie(a.score, b.total_time_ms, b.handle);
  });
  for (std::size_t i = 0; i < expected.size(); ++i) expected[i].rank = i + 1;

  CHECK(env.store.leaderboard() == expected);
  CHECK(replay_log(env.store.log_text()) == env.store.snapshot());
}

TEST_CASE("replay of the empty log is the empty state") {
  CHECK(replay_log("") == ProgressionState{});
}

TEST_CASE("store resumes from an existing log") {
  Env env;
  auto id = env.store.create_session("neo").session_id;
  env.store.submit_flag(id, 1, env.flag(1));
  EventLog log;
  for (const auto& e : parse_log(env.store.log_text())) log.append(e.kind, e.body, e.ts);
  Store resumed(env.catalog, std::move(log), env.clock, std::make_shared<SequentialTokenSource>(1));
  CHECK(resumed.snapshot() == env.store.snapshot());
  CHECK(resumed.leaderboard() == env.store.leaderboard());
}
