#include "rctf/progression.hpp"

#include <algorithm>

#include "rctf/crypto.hpp"

namespace rctf::progression {
namespace {

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::correct: return "correct";
    case Verdict::wrong: return "wrong";
    case Verdict::locked: return "locked";
    case Verdict::already_solved: return "already_solved";
  }
  return "?";
}

std::string_view to_string(RedeemVerdict v) {
  switch (v) {
    case RedeemVerdict::unlocked: return "unlocked";
    case RedeemVerdict::already_unlocked: return "already_unlocked";
    case RedeemVerdict::wrong: return "wrong";
  }
  return "?";
}

std::int64_t Session::solve_duration_ms(ScenarioId id) const {
  auto solved_it = solved.find(id);
  if (solved_it == solved.end()) return 0;
  std::int64_t start = created_at;
  if (auto s = first_spawn.find(id); s != first_spawn.end()) start = s->second;
  else if (auto u = unlocked_at.find(id); u != unlocked_at.end()) start = u->second;
  return std::max<std::int64_t>(0, solved_it->second - start);
}

std::uint64_t scenario_points(std::uint32_t wrong_submissions) {
  std::int64_t points = 100 - 5 * static_cast<std::int64_t>(wrong_submissions);
  return static_cast<std::uint64_t>(std::max<std::int64_t>(points, 10));
}

std::uint64_t compute_score(const Session& session) {
  std::uint64_t score = 0;
  for (const auto& [id, ts] : session.solved) {
    auto it = session.wrong_submissions.find(id);
    score += scenario_points(it == session.wrong_submissions.end() ? 0 : it->second);
  }
  return score;
}

void ProgressionState::apply(const LogEvent& e) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::log_corrupt, "event " + std::to_string(e.seq) + ": " + what);
  };
  try {
    if (e.kind == "session_created") {
      Session s;
      s.session_id = e.body.at("session_id").get<std::string>();
      s.handle = e.body.at("handle").get<std::string>();
      s.created_at = e.ts;
      s.unlocked = {1};
      s.unlocked_at[1] = e.ts;
      if (sessions.contains(s.session_id) || session_by_handle.contains(s.handle)) fail("duplicate session");
      session_by_handle[s.handle] = s.session_id;
      sessions.emplace(s.session_id, std::move(s));
      return;
    }
    auto it = sessions.find(e.body.at("session_id").get<std::string>());
    if (it == sessions.end()) fail("unknown session");
    Session& s = it->second;
    auto id = e.body.at("scenario_id").get<ScenarioId>();
    if (e.kind == "instance_spawned") {
      s.first_spawn.emplace(id, e.ts);
    } else if (e.kind == "flag_submitted") {
      auto verdict = e.body.at("verdict").get<std::string>();
      if (verdict == "correct") s.solved.emplace(id, e.ts);
      else if (verdict == "wrong") ++s.wrong_submissions[id];
    } else if (e.kind == "password_redeemed") {
      if (s.unlocked.insert(id).second) s.unlocked_at[id] = e.ts;
    } else {
      fail("unknown event kind '" + e.kind + "'");
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(std::string("malformed body: ") + ex.what());
  }
}

std::vector<LeaderboardRow> leaderboard(const ProgressionState& state) {
  std::vector<LeaderboardRow> rows;
  for (const auto& [id, s] : state.sessions) {
    LeaderboardRow row{s.handle, compute_score(s), s.solved.size(), 0, 0};
    for (const auto& [sid, ts] : s.solved) row.total_time_ms += s.solve_duration_ms(sid);
    rows.push_back(std::move(row));
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.total_time_ms != b.total_time_ms) return a.total_time_ms < b.total_time_ms;
    return a.handle < b.handle;
  });
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].rank = i + 1;
  return rows;
}

ProgressionState replay_events(const std::vector<LogEvent>& events) {
  ProgressionState state;
  for (const auto& e : events) state.apply(e);
  return state;
}

ProgressionState replay_log(std::string_view text) { return replay_events(parse_log(text)); }

Store::Store(std::shared_ptr<const registry::Catalog> catalog, EventLog log, std::shared_ptr<Clock> clock,
             std::shared_ptr<TokenSource> tokens)
    : catalog_(std::move(catalog)), clock_(std::move(clock)), tokens_(std::move(tokens)), log_(std::move(log)) {
  state_ = replay_events(log_.events());
}

void Store::emit(std::string kind, nlohmann::json body, std::int64_t ts) {
  state_.apply(log_.append(std::move(kind), std::move(body), ts));
}

const Session& Store::session_locked(const std::string& session_id) const {
  auto it = state_.sessions.find(session_id);
  if (it == state_.sessions.end()) throw Error(ErrorCode::auth, "unknown session token");
  return it->second;
}

Session Store::create_session(const std::string& handle) {
  if (handle.empty()) throw Error(ErrorCode::invalid_handle, "handle must not be empty");
  if (utf8_length(handle) > kMaxHandleLength)
    throw Error(ErrorCode::invalid_handle, "handle longer than " + std::to_string(kMaxHandleLength) + " characters");
  if (std::any_of(handle.begin(), handle.end(), [](unsigned char c) { return c < 0x20 || c == 0x7f; }))
    throw Error(ErrorCode::invalid_handle, "handle contains control characters");
  std::lock_guard lock(mu_);
  if (state_.session_by_handle.contains(handle))
    throw Error(ErrorCode::duplicate_handle, "handle '" + handle + "' is taken");
  auto id = tokens_->next();
  emit("session_created", {{"session_id", id}, {"handle", handle}}, clock_->now_ms());
  return state_.sessions.at(id);
}

SubmitResult Store::submit_flag(const std::string& session_id, ScenarioId scenario_id, const std::string& flag,
                                std::optional<std::int64_t> at) {
  const auto& manifest = catalog_->at(scenario_id);
  std::lock_guard lock(mu_);
  const Session& s = session_locked(session_id);
  SubmitResult result;
  if (!s.unlocked.contains(scenario_id)) {
    result.verdict = Verdict::locked;
  } else if (s.solved.contains(scenario_id)) {
    result.verdict = Verdict::already_solved;
  } else if (crypto::constant_time_equal(flag, manifest.flag)) {
    result.verdict = Verdict::correct;
    result.password = manifest.unlock_password;
  } else {
    result.verdict = Verdict::wrong;
  }
  emit("flag_submitted",
       {{"session_id", session_id}, {"scenario_id", scenario_id}, {"verdict", to_string(result.verdict)}},
       at.value_or(clock_->now_ms()));
  return result;
}

RedeemVerdict Store::redeem_password(const std::string& session_id, ScenarioId scenario_id,
                                     const std::string& password) {
  if (scenario_id < 2 || !catalog_->contains(scenario_id))
    throw Error(ErrorCode::unknown_scenario, "no scenario " + std::to_string(scenario_id) + " to unlock");
  const auto& previous = catalog_->at(scenario_id - 1);
  std::lock_guard lock(mu_);
  const Session& s = session_locked(session_id);
  if (s.unlocked.contains(scenario_id)) return RedeemVerdict::already_unlocked;
  if (!s.solved.contains(scenario_id - 1))
    throw Error(ErrorCode::out_of_order,
                "scenario " + std::to_string(scenario_id - 1) + " must be solved before unlocking " +
                    std::to_string(scenario_id));
  if (!crypto::constant_time_equal(password, previous.unlock_password)) return RedeemVerdict::wrong;
  emit("password_redeemed", {{"session_id", session_id}, {"scenario_id", scenario_id}}, clock_->now_ms());
  return RedeemVerdict::unlocked;
}

void Store::record_spawn(const std::string& session_id, ScenarioId scenario_id) {
  catalog_->at(scenario_id);
  std::lock_guard lock(mu_);
  session_locked(session_id);
  emit("instance_spawned", {{"session_id", session_id}, {"scenario_id", scenario_id}}, clock_->now_ms());
}

Session Store::session(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  return session_locked(session_id);
}

bool Store::has_session(const std::string& session_id) const {
  std::lock_guard lock(mu_);
  return state_.sessions.contains(session_id);
}

std::vector<LeaderboardRow> Store::leaderboard() const {
  std::lock_guard lock(mu_);
  return progression::leaderboard(state_);
}

ProgressionState Store::snapshot() const {
  std::lock_guard lock(mu_);
  return state_;
}

std::string Store::log_text() const {
  std::lock_guard lock(mu_);
  return log_.text();
}

void Store::flush() {
  std::lock_guard lock(mu_);
  log_.flush();
}

}  // namespace rctf::progression
